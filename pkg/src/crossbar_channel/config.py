"""Model parameters: array geometry, device statistics, operating point.

Parameters live in a flat ``key = value`` file, one entry per line, with
``#`` comments and ``inf`` accepted for selector resistances.  Missing keys
take the documented defaults.  All types are immutable and safe to share
across parallel workers.

Units are fixed throughout: ohms, volts, amperes, microseconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import NamedTuple

from .numerics import format_sig

LN10 = math.log(10.0)


class ConfigError(ValueError):
    """Malformed configuration file or invariant violation."""


@dataclass(frozen=True)
class ArrayGeometry:
    """Crossbar dimensions, per-junction line resistances, selector resistances.

    Cell indexing is 1-based: cell (i, j) accumulates i*r_b of bitline and
    j*r_w of wordline resistance between source and sense terminal.
    """

    m: int = 1024
    n: int = 1024
    r_w: float = 10.0
    r_b: float = 10.0
    r_sf: float = 0.0
    r_sh: float = math.inf
    r_su: float = math.inf

    @property
    def is_ideal(self) -> bool:
        """Exactly r_sf = 0 with both non-selected selector resistances infinite."""
        return self.r_sf == 0.0 and math.isinf(self.r_sh) and math.isinf(self.r_su)

    @property
    def max_line_resistance(self) -> float:
        return self.m * self.r_b + self.n * self.r_w


@dataclass(frozen=True)
class DeviceModel:
    """Log-normal resistance states, switching-time law, and state prior.

    mu/sigma describe ln(resistance) of the low (L) and high (H) states.
    Median switching times follow ln(tau) = alpha*V + beta with V the signed
    effective write voltage and medians in microseconds; sigma_set/sigma_reset
    are the spreads of ln(switching time).
    """

    mu_L: float = 4.0 * LN10
    mu_H: float = 6.0 * LN10
    sigma_L: float = 0.3 * LN10
    sigma_H: float = 0.3 * LN10
    alpha_set: float = 0.25
    beta_set: float = 4.25
    alpha_reset: float = -0.25
    beta_reset: float = 4.25
    sigma_set: float = 0.5
    sigma_reset: float = 0.5
    q: float = 0.5


@dataclass(frozen=True)
class OperatingPoint:
    """Write/read voltages, pulse durations, and the read current threshold."""

    V_w_set: float = -5.0
    V_w_reset: float = 5.0
    V_r: float = 3.0
    t_set: float = 100.0
    t_reset: float = 100.0
    I_th: float = 30e-6

    @property
    def R_th(self) -> float:
        """Effective resistance-domain read threshold, V_r / I_th."""
        return self.V_r / self.I_th


class ParameterBundle(NamedTuple):
    geometry: ArrayGeometry
    device: DeviceModel
    operating: OperatingPoint


# File keys in canonical output order.
_INT_KEYS = ("m", "n")
_GEOMETRY_KEYS = ("m", "n", "r_w", "r_b", "r_sf", "r_sh", "r_su")
_DEVICE_KEYS = ("mu_L", "mu_H", "sigma_L", "sigma_H", "alpha_set", "beta_set",
                "alpha_reset", "beta_reset", "sigma_set", "sigma_reset", "q")
_OPERATING_KEYS = ("V_w_set", "V_w_reset", "V_r", "t_set", "t_reset", "I_th")
CONFIG_KEYS = _GEOMETRY_KEYS + _DEVICE_KEYS + _OPERATING_KEYS


def default_bundle() -> ParameterBundle:
    return ParameterBundle(ArrayGeometry(), DeviceModel(), OperatingPoint())


def validate(geometry: ArrayGeometry, device: DeviceModel,
             operating: OperatingPoint) -> list[str]:
    """Return every violated invariant; an empty list means consistent."""
    v: list[str] = []
    if geometry.m < 1:
        v.append("m must be >= 1")
    if geometry.n < 1:
        v.append("n must be >= 1")
    for key in ("r_w", "r_b", "r_sf"):
        if not getattr(geometry, key) >= 0.0:
            v.append(f"{key} must be >= 0")
    for key in ("r_sh", "r_su"):
        if not getattr(geometry, key) > 0.0:
            v.append(f"{key} must be > 0 (or inf)")
    if not geometry.r_sf <= geometry.r_sh <= geometry.r_su:
        v.append("selector ordering violated: need r_sf <= r_sh <= r_su")

    if not device.mu_H > device.mu_L:
        v.append("mu_H must exceed mu_L")
    for key in ("sigma_L", "sigma_H", "sigma_set", "sigma_reset"):
        if not getattr(device, key) > 0.0:
            v.append(f"{key} must be > 0")
    if not 0.0 <= device.q <= 1.0:
        v.append("q must lie in [0, 1]")

    if not operating.V_w_set < 0.0:
        v.append("V_w_set must be negative")
    if not operating.V_w_reset > 0.0:
        v.append("V_w_reset must be positive")
    if not operating.V_r > 0.0:
        v.append("V_r must be > 0")
    for key in ("t_set", "t_reset", "I_th"):
        if not getattr(operating, key) > 0.0:
            v.append(f"{key} must be > 0")
    return v


def _parse_value(key: str, text: str):
    if key in _INT_KEYS:
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"key {key} expects an integer, got {text!r}") from None
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"key {key} expects a number, got {text!r}") from None


def parse_config_text(text: str) -> ParameterBundle:
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, val)

    geometry = ArrayGeometry(**{k: values[k] for k in _GEOMETRY_KEYS if k in values})
    device = DeviceModel(**{k: values[k] for k in _DEVICE_KEYS if k in values})
    operating = OperatingPoint(**{k: values[k] for k in _OPERATING_KEYS if k in values})
    violations = validate(geometry, device, operating)
    if violations:
        raise ConfigError("invalid configuration: " + "; ".join(violations))
    return ParameterBundle(geometry, device, operating)


def load_config(path) -> ParameterBundle:
    """Load, default-fill, and validate a parameter file."""
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def format_config(bundle: ParameterBundle) -> str:
    """Render a bundle in the file format, 17 significant digits per value."""
    out = []
    for part in bundle:
        for field in fields(part):
            value = getattr(part, field.name)
            if field.name in _INT_KEYS:
                out.append(f"{field.name} = {value}")
            else:
                out.append(f"{field.name} = {format_sig(value)}")
    return "\n".join(out) + "\n"


def save_config(path, bundle: ParameterBundle) -> None:
    Path(path).write_text(format_config(bundle), encoding="utf-8")


def bundle_as_dict(bundle: ParameterBundle) -> dict:
    out: dict[str, object] = {}
    for part in bundle:
        for field in fields(part):
            out[field.name] = getattr(part, field.name)
    return out

"""Read-threshold optimization: baseline, per-cell, and array-wide schemes.

The baseline threshold minimizes the prior-weighted misread probability with
no line resistance.  The per-cell scheme ("dtec") shifts that threshold by
each cell's accumulated line resistance, restoring the baseline error rate
everywhere.  The array-wide schemes ("stmc") use a single threshold: either
the mean of the per-cell thresholds (approx) or the fixed point of the
log-domain averaging equation, computed by an oscillating iteration whose
even iterates rise and odd iterates fall toward the solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.stats import norm

from .circuit import cumulative_line_resistance, line_resistance_grid
from .config import ArrayGeometry, DeviceModel
from .numerics import q_function

SCHEME_KINDS = ("naive", "dtec", "stmc-approx", "stmc-exact")


class ThresholdPreconditionError(ValueError):
    """Baseline threshold does not dominate the largest line resistance."""


@dataclass(frozen=True)
class ThresholdScheme:
    """kind in {naive, dtec, stmc-approx, stmc-exact}; scope array | column.

    ``values`` is a scalar for whole-array schemes, an (m, n) grid for dtec,
    and a length-n vector for per-column stmc scopes.
    """

    kind: str
    scope: str
    values: object

    def threshold_grid(self, geometry: ArrayGeometry) -> np.ndarray:
        vals = np.asarray(self.values, dtype=float)
        if self.kind == "dtec":
            if vals.shape != (geometry.m, geometry.n):
                raise ValueError("dtec scheme needs an (m, n) threshold grid")
            return vals
        if self.scope == "column":
            if vals.shape != (geometry.n,):
                raise ValueError("column scope needs one threshold per column")
            return np.broadcast_to(vals, (geometry.m, geometry.n))
        return np.full((geometry.m, geometry.n), float(vals))


@dataclass(frozen=True)
class StmcResult:
    threshold: float
    trace: np.ndarray
    iterations: int
    converged: bool
    residual: float


def baseline_threshold(device: DeviceModel) -> float:
    """Resistance threshold minimizing q*Q((mu_H - ln R)/s_H) + (1-q)*Q((ln R - mu_L)/s_L).

    Solved as the crossing of the prior-weighted state densities in ln R;
    reduces to the geometric midpoint for equal spreads and a flat prior.
    """
    if device.sigma_L == device.sigma_H and device.q == 0.5:
        return math.exp(0.5 * (device.mu_L + device.mu_H))

    def density_gap(x: float) -> float:
        high = device.q * norm.pdf((device.mu_H - x) / device.sigma_H) / device.sigma_H
        low = (1.0 - device.q) * norm.pdf((x - device.mu_L) / device.sigma_L) / device.sigma_L
        return high - low

    lo, hi = device.mu_L, device.mu_H
    f_lo, f_hi = density_gap(lo), density_gap(hi)
    if not (min(f_lo, f_hi) < 0.0 < max(f_lo, f_hi)):
        raise ValueError("no density crossing between mu_L and mu_H; "
                         "degenerate parameters")
    x = brentq(density_gap, lo, hi, rtol=1e-12, xtol=1e-15)
    return math.exp(x)


def dtec_threshold(i: int, j: int, r_th0: float, geometry: ArrayGeometry) -> float:
    """Per-cell threshold: r_th0 shifted right by the cell's line resistance."""
    return r_th0 + cumulative_line_resistance(i, j, geometry)


def dtec_threshold_grid(r_th0: float, geometry: ArrayGeometry) -> np.ndarray:
    return r_th0 + line_resistance_grid(geometry)


def stmc_approx(r_th0: float, geometry: ArrayGeometry) -> float:
    """Single array threshold as the mean of the per-cell thresholds."""
    return (r_th0 + (geometry.m + 1) / 2.0 * geometry.r_b
            + (geometry.n + 1) / 2.0 * geometry.r_w)


def stmc_exact_for_lines(r_th0: float, line: np.ndarray, epsilon: float = 1e-6,
                         k_max: int = 50) -> StmcResult:
    """Fixed point of ln R = ln r_th0 - mean(ln(1 - line/R)) from R = r_th0.

    Stops when consecutive iterates differ by at most ``epsilon`` ohms or
    after ``k_max`` iterations (converged flag False).  Requires
    r_th0 > max(line) so every logarithm stays positive along the trace.
    """
    line = np.asarray(line, dtype=float)
    if not r_th0 > float(np.max(line)):
        raise ThresholdPreconditionError(
            f"baseline threshold {r_th0:.6g} must exceed the largest "
            f"accumulated line resistance {float(np.max(line)):.6g}")
    ln_r0 = math.log(r_th0)
    current = r_th0
    trace = [current]
    converged = False
    iterations = 0
    for iterations in range(1, k_max + 1):
        # r_th0 * exp(-delta) keeps the zero-line fixed point exact
        nxt = r_th0 * math.exp(-float(np.mean(np.log1p(-line / current))))
        trace.append(nxt)
        if abs(nxt - current) <= epsilon:
            current = nxt
            converged = True
            break
        current = nxt
    residual = abs(ln_r0 - float(np.mean(np.log(current - line)))) / abs(ln_r0)
    return StmcResult(current, np.array(trace), iterations, converged, residual)


def stmc_exact(r_th0: float, geometry: ArrayGeometry, epsilon: float = 1e-6,
               k_max: int = 50) -> StmcResult:
    """Array-wide exact threshold over the full line-resistance grid."""
    return stmc_exact_for_lines(r_th0, line_resistance_grid(geometry),
                                epsilon, k_max)


def stmc_exact_per_column(r_th0: float, geometry: ArrayGeometry,
                          epsilon: float = 1e-6, k_max: int = 50) -> np.ndarray:
    """One threshold per column, each solved on its own m x 1 sub-array."""
    i_part = np.arange(1, geometry.m + 1, dtype=float) * geometry.r_b
    out = np.empty(geometry.n)
    for j in range(1, geometry.n + 1):
        res = stmc_exact_for_lines(r_th0, i_part + j * geometry.r_w,
                                   epsilon, k_max)
        out[j - 1] = res.threshold
    return out


def make_scheme(kind: str, geometry: ArrayGeometry, device: DeviceModel,
                scope: str = "array", epsilon: float = 1e-6,
                k_max: int = 50) -> ThresholdScheme:
    """Build a scheme's threshold values from the device statistics."""
    if kind not in SCHEME_KINDS:
        raise ValueError(f"unknown scheme kind {kind!r}")
    if scope not in ("array", "column"):
        raise ValueError(f"unknown scope {scope!r}")
    r_th0 = baseline_threshold(device)
    if kind == "naive":
        return ThresholdScheme(kind, "array", r_th0)
    if kind == "dtec":
        return ThresholdScheme(kind, "array", dtec_threshold_grid(r_th0, geometry))
    if kind == "stmc-approx":
        if scope == "column":
            i_mean = (geometry.m + 1) / 2.0 * geometry.r_b
            cols = r_th0 + i_mean + np.arange(1, geometry.n + 1) * geometry.r_w
            return ThresholdScheme(kind, scope, cols)
        return ThresholdScheme(kind, scope, stmc_approx(r_th0, geometry))
    if scope == "column":
        return ThresholdScheme(kind, scope,
                               stmc_exact_per_column(r_th0, geometry, epsilon, k_max))
    return ThresholdScheme(kind, scope,
                           stmc_exact(r_th0, geometry, epsilon, k_max).threshold)


def average_read_ber(threshold_grid: np.ndarray, line: np.ndarray,
                     device: DeviceModel) -> float:
    """Mean prior-weighted misread probability for per-cell thresholds."""
    d = np.asarray(threshold_grid, dtype=float) - line
    pos = d > 0.0
    ln_d = np.log(np.where(pos, d, 1.0))
    term = np.where(
        pos,
        device.q * q_function((device.mu_H - ln_d) / device.sigma_H)
        + (1.0 - device.q) * q_function((ln_d - device.mu_L) / device.sigma_L),
        1.0 - device.q)
    return float(np.mean(term))


def scheme_average_ber(scheme: ThresholdScheme, geometry: ArrayGeometry,
                       device: DeviceModel) -> float:
    """Array-averaged read BER achieved by a threshold scheme."""
    grid = scheme.threshold_grid(geometry)
    if not np.all(np.asarray(grid) > 0.0):
        raise ValueError("scheme thresholds must be positive")
    return average_read_ber(grid, line_resistance_grid(geometry), device)

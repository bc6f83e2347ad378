"""Ground-truth Monte-Carlo simulator of write and read operations.

Every analytic channel parameter can be cross-checked against sampled
operations.  Draws come from per-cell keyed substreams of the master seed,
so estimates for one cell never depend on which other cells are simulated
or on how work is scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import BiasScheme, ResistanceGrid, solve_kcl_grid
from .config import ParameterBundle
from .numerics import substream, wilson_interval
from .write_channel import effective_write_voltage

_ALLOWED_CONFIDENCE = (0.99, 0.997)

# substream tags; read_channel reserves 4 and 5
_TAG_WRITE0 = 0
_TAG_WRITE1 = 1
_TAG_READ0 = 2
_TAG_READ1 = 3

_CHUNK = 1 << 18


@dataclass(frozen=True)
class SamplingPlan:
    """Sample budget, master seed, confidence level, and CI tolerance."""

    n: int
    seed: int = 0
    confidence: float = 0.99
    tolerance: float = 1e-3

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("sample count must be >= 1")
        if self.confidence not in _ALLOWED_CONFIDENCE:
            raise ValueError(f"confidence must be one of {_ALLOWED_CONFIDENCE}")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")


@dataclass(frozen=True)
class EmpiricalRate:
    failures: int
    samples: int
    rate: float
    ci_low: float
    ci_high: float
    confidence: float

    def covers(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high


@dataclass(frozen=True)
class EmpiricalBac:
    i: int
    j: int
    p1: EmpiricalRate
    p2: EmpiricalRate
    p3: EmpiricalRate
    p4: EmpiricalRate


def _rate(failures: int, samples: int, confidence: float) -> EmpiricalRate:
    lo, hi = wilson_interval(failures, samples, confidence)
    return EmpiricalRate(failures, samples, failures / samples, lo, hi, confidence)


def simulate_write(i: int, j: int, x: int, plan: SamplingPlan,
                   bundle: ParameterBundle, mode: str = "ideal") -> EmpiricalRate:
    """Empirical P(Y != X) when writing state ``x`` to cell (i, j).

    Per sample the previous state is drawn from the prior; a matching state
    always succeeds, otherwise the previous resistance, and then the
    switching time around its voltage-dependent median, decide the outcome.
    Per sample the stream yields one uniform and two normals.
    """
    geometry, device, operating = bundle
    _check_mode(mode, geometry)
    if x == 0:
        op, v_w = "reset", operating.V_w_reset
        mu_prev, sg_prev = device.mu_L, device.sigma_L        # previous state 1
        sigma_t, ln_t = device.sigma_reset, np.log(operating.t_reset)
        alpha, beta = device.alpha_reset, device.beta_reset
        mismatch_prob_side = 1                                 # S* = 1 differs
    elif x == 1:
        op, v_w = "set", operating.V_w_set
        mu_prev, sg_prev = device.mu_H, device.sigma_H        # previous state 0
        sigma_t, ln_t = device.sigma_set, np.log(operating.t_set)
        alpha, beta = device.alpha_set, device.beta_set
        mismatch_prob_side = 0
    else:
        raise ValueError("x must be 0 or 1")

    rng = substream(plan.seed, i, j, _TAG_WRITE0 if x == 0 else _TAG_WRITE1)
    line = geometry.r_b * i + geometry.r_w * j
    failures = 0
    remaining = plan.n
    while remaining > 0:
        k = min(_CHUNK, remaining)
        u = rng.random(k)
        z_r = rng.standard_normal(k)
        z_t = rng.standard_normal(k)
        prev_zero = u < device.q
        mismatch = prev_zero if mismatch_prob_side == 0 else ~prev_zero
        if mismatch.any():
            r_star = np.exp(mu_prev + sg_prev * z_r[mismatch])
            if geometry.is_ideal:
                v_eff = v_w / (1.0 + line / r_star)
            else:
                v_eff = effective_write_voltage(r_star, i, j, v_w, geometry, device)
            ln_tau = alpha * v_eff + beta
            ln_time = ln_tau + sigma_t * z_t[mismatch]
            failures += int(np.count_nonzero(ln_time > ln_t))
        remaining -= k
    return _rate(failures, plan.n, plan.confidence)


def simulate_read(i: int, j: int, y: int, plan: SamplingPlan,
                  bundle: ParameterBundle, mode: str = "ideal") -> EmpiricalRate:
    """Empirical P(Z != Y) when reading cell (i, j) storing state ``y``.

    Ideal mode draws the selected cell's resistance and applies the series
    formula; general mode additionally draws every background state and
    resistance and solves the full nodal system per sample.
    """
    geometry, device, operating = bundle
    _check_mode(mode, geometry)
    if y == 0:
        mu_sel, sg_sel = device.mu_H, device.sigma_H
    elif y == 1:
        mu_sel, sg_sel = device.mu_L, device.sigma_L
    else:
        raise ValueError("y must be 0 or 1")

    rng = substream(plan.seed, i, j, _TAG_READ0 if y == 0 else _TAG_READ1)
    errors = 0
    if mode == "ideal":
        line = geometry.r_b * i + geometry.r_w * j
        remaining = plan.n
        while remaining > 0:
            k = min(_CHUNK, remaining)
            r_sel = np.exp(mu_sel + sg_sel * rng.standard_normal(k))
            i_r = operating.V_r / (line + r_sel)
            z_hat = i_r > operating.I_th
            errors += int(np.count_nonzero(z_hat != bool(y)))
            remaining -= k
    else:
        m, n = geometry.m, geometry.n
        bias = BiasScheme("read", i, j)
        sel = (i - 1, j - 1)
        background = np.ones((m, n), dtype=bool)
        background[sel] = False
        n_back = m * n - 1
        for _ in range(plan.n):
            r_sel = np.exp(mu_sel + sg_sel * rng.standard_normal())
            states_one = rng.random(n_back) >= device.q
            z = rng.standard_normal(n_back)
            ln_r = np.where(states_one, device.mu_L + device.sigma_L * z,
                            device.mu_H + device.sigma_H * z)
            values = np.empty((m, n))
            values[background] = np.exp(ln_r)
            values[sel] = r_sel
            sol = solve_kcl_grid(geometry, ResistanceGrid(values), bias,
                                 operating.V_r)
            z_hat = sol.sensed_current > operating.I_th
            errors += int(z_hat != bool(y))
    return _rate(errors, plan.n, plan.confidence)


def estimate_channel_grid(cells, plan: SamplingPlan, bundle: ParameterBundle,
                          mode: str = "ideal") -> dict:
    """Empirical channel parameters for every listed (i, j) cell.

    Deterministic for a fixed plan: each (cell, operation) pair owns a keyed
    substream, so the cell list and evaluation order never matter.
    """
    geometry = bundle.geometry
    out = {}
    for (i, j) in cells:
        if not (1 <= i <= geometry.m and 1 <= j <= geometry.n):
            raise IndexError(f"cell ({i}, {j}) outside the array")
        out[(i, j)] = EmpiricalBac(
            i, j,
            p1=simulate_write(i, j, 0, plan, bundle, mode),
            p2=simulate_write(i, j, 1, plan, bundle, mode),
            p3=simulate_read(i, j, 0, plan, bundle, mode),
            p4=simulate_read(i, j, 1, plan, bundle, mode),
        )
    return out


def _check_mode(mode: str, geometry) -> None:
    if mode not in ("ideal", "general"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "ideal" and not geometry.is_ideal:
        raise ValueError("ideal mode requires ideal selector parameters")


def corner_cells(geometry) -> list[tuple[int, int]]:
    m, n = geometry.m, geometry.n
    return [(1, 1), (1, n), (m, 1), (m, n)]

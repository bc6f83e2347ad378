"""Read channel: threshold detection of the sensed current as a BAC.

With ideal selectors the sensed current is V_r / (i*r_b + j*r_w + R), so
thresholding at I_th is equivalent to comparing the cell resistance against
D = V_r/I_th - i*r_b - j*r_w, which gives closed forms for the crossovers:

    p3 = P(read 1 | stored 0) = Q((mu_H - ln D) / sigma_H)
    p4 = P(read 0 | stored 1) = Q((ln D - mu_L) / sigma_L)

When D <= 0 no resistance keeps the current at or below threshold's
equivalent, so p3 = 0 and p4 = 1: a stored 1 can never be read correctly.
Non-ideal selectors fall back to Monte-Carlo over full nodal solves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import (BiasScheme, ResistanceGrid, cumulative_line_resistance,
                      solve_kcl_grid)
from .config import ArrayGeometry, DeviceModel, OperatingPoint
from .numerics import q_function, substream, wilson_interval
from .oracle import SamplingPlan

_STREAM_TAG_READ0 = 4
_STREAM_TAG_READ1 = 5
_CHUNK = 2048


class SampleBudgetError(RuntimeError):
    """Sampling budget exhausted before the confidence target was met."""


@dataclass(frozen=True)
class ReadChannelParams:
    i: int
    j: int
    p3: float
    p4: float
    r_th: float
    p3_halfwidth: float | None = None
    p4_halfwidth: float | None = None


def detect(i_r, i_th: float):
    """Threshold detector: 0 when i_r <= i_th, else 1 (tie reads as 0)."""
    out = (np.asarray(i_r, dtype=float) > i_th).astype(int)
    return int(out) if out.ndim == 0 else out


def read_error_probabilities(line_resistance, r_th: float, device: DeviceModel):
    """(p3, p4) for accumulated line resistances, ideal selectors.

    Vectorized over ``line_resistance``; applies the D <= 0 convention.
    """
    line = np.asarray(line_resistance, dtype=float)
    d = r_th - line
    pos = d > 0.0
    ln_d = np.log(np.where(pos, d, 1.0))
    p3 = np.where(pos, q_function((device.mu_H - ln_d) / device.sigma_H), 0.0)
    p4 = np.where(pos, q_function((ln_d - device.mu_L) / device.sigma_L), 1.0)
    return p3, p4


def read_channel_params_ideal(i: int, j: int, r_th: float,
                              geometry: ArrayGeometry,
                              device: DeviceModel) -> ReadChannelParams:
    """Closed-form crossovers at cell (i, j) for threshold r_th = V_r/I_th."""
    if not geometry.is_ideal:
        raise ValueError("closed forms require ideal selectors; "
                         "use read_channel_params_general")
    line = cumulative_line_resistance(i, j, geometry)
    p3, p4 = read_error_probabilities(line, r_th, device)
    return ReadChannelParams(i, j, float(p3), float(p4), r_th)


def _estimate_error_rate(i: int, j: int, y: int, i_th: float,
                         geometry: ArrayGeometry, device: DeviceModel,
                         operating: OperatingPoint, plan: SamplingPlan,
                         tag: int):
    """Monte-Carlo estimate of one read crossover with full nodal solves.

    Per sample, in fixed draw order: the selected cell's log-resistance, the
    background states, then the background log-resistances.
    """
    rng = substream(plan.seed, i, j, tag)
    m, n = geometry.m, geometry.n
    bias = BiasScheme("read", i, j)
    mu_sel, sg_sel = ((device.mu_H, device.sigma_H) if y == 0
                      else (device.mu_L, device.sigma_L))
    sel = (i - 1, j - 1)
    background = np.ones((m, n), dtype=bool)
    background[sel] = False
    n_back = m * n - 1

    errors = 0
    total = 0
    while total < plan.n:
        chunk = min(_CHUNK, plan.n - total)
        for _ in range(chunk):
            r_sel = np.exp(mu_sel + sg_sel * rng.standard_normal())
            states_one = rng.random(n_back) >= device.q   # True means stored 1
            z = rng.standard_normal(n_back)
            ln_r = np.where(states_one, device.mu_L + device.sigma_L * z,
                            device.mu_H + device.sigma_H * z)
            values = np.empty((m, n))
            values[background] = np.exp(ln_r)
            values[sel] = r_sel
            sol = solve_kcl_grid(geometry, ResistanceGrid(values), bias,
                                 operating.V_r)
            z_hat = 1 if sol.sensed_current > i_th else 0
            errors += int(z_hat != y)
        total += chunk
        lo, hi = wilson_interval(errors, total, plan.confidence)
        if (hi - lo) / 2.0 <= plan.tolerance:
            return errors / total, (hi - lo) / 2.0, total
    raise SampleBudgetError(
        f"budget {plan.n} exhausted at CI half-width {(hi - lo) / 2.0:.3e} "
        f"(target {plan.tolerance:.3e}) for cell ({i},{j}) Y={y}")


def read_channel_params_general(i: int, j: int, i_th: float,
                                geometry: ArrayGeometry, device: DeviceModel,
                                operating: OperatingPoint,
                                plan: SamplingPlan) -> ReadChannelParams:
    """Monte-Carlo crossovers for non-ideal selectors.

    Estimates stop once the confidence half-width reaches the plan's
    tolerance; raises SampleBudgetError if the budget runs out first.
    """
    p3, hw3, _ = _estimate_error_rate(i, j, 0, i_th, geometry, device,
                                      operating, plan, _STREAM_TAG_READ0)
    p4, hw4, _ = _estimate_error_rate(i, j, 1, i_th, geometry, device,
                                      operating, plan, _STREAM_TAG_READ1)
    return ReadChannelParams(i, j, p3, p4, operating.V_r / i_th, hw3, hw4)

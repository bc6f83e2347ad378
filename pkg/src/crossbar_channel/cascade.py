"""Cascade of the write and read channels and per-cell channel capacity.

The composed channel is again binary asymmetric with

    p5 = p1*(1 - p4) + (1 - p1)*p3
    p6 = p2*(1 - p3) + (1 - p2)*p4

Capacity maximizes the input mutual information over the prior of state 0.
Because p1 and p2 carry that prior as a factor, the channel itself moves
with q ("q-coupled"); maximization is a guarded scalar search rather than
the textbook alternating update.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import cumulative_line_resistance, line_resistance_grid
from .config import ArrayGeometry, DeviceModel, OperatingPoint
from .numerics import binary_entropy
from .read_channel import ReadChannelParams, read_error_probabilities
from .write_channel import (WriteChannelParams, conditional_switch_failures,
                            marginal_switch_failures)

_COARSE_POINTS = 1025
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
_Q_TOL = 1e-9

COUPLING_MODES = ("fixed-channel", "q-coupled")


@dataclass(frozen=True)
class CascadeParams:
    i: int
    j: int
    p5: float
    p6: float


@dataclass(frozen=True)
class CapacityResult:
    i: int
    j: int
    capacity: float
    q_star: float


def cascade(write: WriteChannelParams, read: ReadChannelParams) -> CascadeParams:
    """Compose write and read crossovers into the end-to-end channel."""
    for p in (write.p1, write.p2, read.p3, read.p4):
        if not 0.0 <= p <= 1.0:
            raise ValueError("channel parameters must lie in [0, 1]")
    if (write.i, write.j) != (read.i, read.j):
        raise ValueError("write and read parameters belong to different cells")
    p5, p6 = cascade_probabilities(write.p1, write.p2, read.p3, read.p4)
    return CascadeParams(write.i, write.j, p5, p6)


def cascade_probabilities(p1, p2, p3, p4):
    p5 = p1 * (1.0 - p4) + (1.0 - p1) * p3
    p6 = p2 * (1.0 - p3) + (1.0 - p2) * p4
    return p5, p6


def mutual_information(q, p5, p6):
    """I(X; Z) in bits for input prior P(X=0) = q and crossovers (p5, p6)."""
    q = np.asarray(q, dtype=float)
    out_zero = q * (1.0 - p5) + (1.0 - q) * p6
    return (binary_entropy(out_zero) - q * binary_entropy(p5)
            - (1.0 - q) * binary_entropy(p6))


def _maximize_over_prior(f):
    """Vectorized scalar maximization of f(q) over q in [0, 1].

    ``f`` maps a prior array of shape (k,) broadcast against cell arrays to
    mutual informations.  A coarse scan locates the global neighborhood per
    cell; golden-section refinement narrows each bracket below 1e-9.
    Returns (best value, best q) arrays.
    """
    grid = np.linspace(0.0, 1.0, _COARSE_POINTS)
    best_val = None
    best_idx = None
    for k, qv in enumerate(grid):
        val = np.asarray(f(qv), dtype=float)
        if best_val is None:
            best_val = val.copy()
            best_idx = np.zeros(val.shape, dtype=int)
            continue
        better = val > best_val
        best_val[better] = val[better]
        best_idx[better] = k
    step = grid[1] - grid[0]
    lo = np.clip(grid[best_idx] - step, 0.0, 1.0)
    hi = np.clip(grid[best_idx] + step, 0.0, 1.0)

    while np.max(hi - lo) > _Q_TOL:
        x1 = hi - _GOLDEN * (hi - lo)
        x2 = lo + _GOLDEN * (hi - lo)
        f1 = np.asarray(f(x1), dtype=float)
        f2 = np.asarray(f(x2), dtype=float)
        move_right = f1 < f2
        lo = np.where(move_right, x1, lo)
        hi = np.where(move_right, hi, x2)
    q_star = 0.5 * (lo + hi)
    val = np.asarray(f(q_star), dtype=float)
    val = np.maximum(val, best_val)
    return val, q_star


def capacity_from_crossovers(p5, p6):
    """Capacity and maximizing prior for fixed crossovers (vectorized)."""
    p5 = np.asarray(p5, dtype=float)
    p6 = np.asarray(p6, dtype=float)
    val, q_star = _maximize_over_prior(lambda qv: mutual_information(qv, p5, p6))
    return val, q_star


def capacity_q_coupled(reset_fail, set_fail, p3, p4):
    """Capacity when the write crossovers scale with the prior (vectorized).

    ``reset_fail`` and ``set_fail`` are the prior-free switching failure
    probabilities; p1 = (1-q)*reset_fail and p2 = q*set_fail inside the
    objective.
    """
    reset_fail = np.asarray(reset_fail, dtype=float)
    set_fail = np.asarray(set_fail, dtype=float)
    p3 = np.asarray(p3, dtype=float)
    p4 = np.asarray(p4, dtype=float)

    def objective(qv):
        p1 = (1.0 - qv) * reset_fail
        p2 = qv * set_fail
        p5, p6 = cascade_probabilities(p1, p2, p3, p4)
        return mutual_information(qv, p5, p6)

    return _maximize_over_prior(objective)


def cell_capacity(i: int, j: int, geometry: ArrayGeometry, device: DeviceModel,
                  operating: OperatingPoint,
                  coupling: str = "q-coupled") -> CapacityResult:
    """Capacity of the cascaded channel at cell (i, j)."""
    if coupling not in COUPLING_MODES:
        raise ValueError(f"coupling must be one of {COUPLING_MODES}")
    reset_fail, set_fail = conditional_switch_failures(i, j, geometry, device,
                                                       operating)
    line = cumulative_line_resistance(i, j, geometry)
    p3, p4 = read_error_probabilities(line, operating.R_th, device)
    if coupling == "fixed-channel":
        p5, p6 = cascade_probabilities((1.0 - device.q) * reset_fail,
                                       device.q * set_fail,
                                       float(p3), float(p4))
        val, q_star = capacity_from_crossovers(p5, p6)
    else:
        val, q_star = capacity_q_coupled(reset_fail, set_fail,
                                         float(p3), float(p4))
    return CapacityResult(i, j, float(val), float(q_star))


def capacity_grid(geometry: ArrayGeometry, device: DeviceModel,
                  operating: OperatingPoint,
                  coupling: str = "q-coupled") -> np.ndarray:
    """Per-cell capacities for the whole array, ideal selectors.

    Cells sharing an accumulated line resistance share all channel
    parameters, so the optimization runs once per distinct value.
    """
    if coupling not in COUPLING_MODES:
        raise ValueError(f"coupling must be one of {COUPLING_MODES}")
    line = line_resistance_grid(geometry)
    unique, inverse = np.unique(line, return_inverse=True)
    inverse = inverse.ravel()
    reset_fail, set_fail = marginal_switch_failures(unique, device, operating)
    p3, p4 = read_error_probabilities(unique, operating.R_th, device)
    if coupling == "fixed-channel":
        p1 = (1.0 - device.q) * reset_fail
        p2 = device.q * set_fail
        p5, p6 = cascade_probabilities(p1, p2, p3, p4)
        val, _ = capacity_from_crossovers(p5, p6)
    else:
        val, _ = capacity_q_coupled(reset_fail, set_fail, p3, p4)
    return val[inverse].reshape(line.shape)


def averaged_capacity(capacities: np.ndarray) -> float:
    """Arithmetic mean capacity over a complete cell grid."""
    return float(np.mean(np.asarray(capacities, dtype=float)))

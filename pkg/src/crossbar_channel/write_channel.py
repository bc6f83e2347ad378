"""Write channel: switching failure probabilities as a binary asymmetric channel.

A write only risks failure when the target state differs from the previous
state.  The switching time is log-normal with a median that depends
exponentially on the signed effective write voltage delivered to the cell,
so the failure probability given the previous resistance r* is the upper
tail of ln(switching time) at the pulse duration.  Marginalizing r* over the
previous state's log-normal resistance yields the channel crossovers:

    p1 = (1 - q) * P(reset fails | previous state 1)
    p2 = q * P(set fails | previous state 0)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.stats import norm

from .circuit import (BiasScheme, ResistanceGrid, cumulative_line_resistance,
                      solve_kcl_grid)
from .config import ArrayGeometry, DeviceModel, OperatingPoint
from .numerics import gauss_hermite_expectation, q_function

QUADRATURE_TOL = 1e-10


@dataclass(frozen=True)
class WriteChannelParams:
    i: int
    j: int
    p1: float
    p2: float


def median_switch_time(v_eff: float, op: str, device: DeviceModel) -> float:
    """Median switching time in microseconds, exp(alpha*V + beta).

    ``v_eff`` is signed: negative for set pulses, positive for reset.
    """
    if op == "set":
        return math.exp(device.alpha_set * v_eff + device.beta_set)
    if op == "reset":
        return math.exp(device.alpha_reset * v_eff + device.beta_reset)
    raise ValueError(f"unknown write operation {op!r}")


def _op_constants(op: str, device: DeviceModel, operating: OperatingPoint):
    """(alpha, beta, sigma_t, ln pulse duration, source voltage) for one op."""
    if op == "set":
        return (device.alpha_set, device.beta_set, device.sigma_set,
                math.log(operating.t_set), operating.V_w_set)
    if op == "reset":
        return (device.alpha_reset, device.beta_reset, device.sigma_reset,
                math.log(operating.t_reset), operating.V_w_reset)
    raise ValueError(f"unknown write operation {op!r}")


def switch_fail_prob_given_resistance(r_star: float, i: int, j: int, op: str,
                                      geometry: ArrayGeometry,
                                      device: DeviceModel,
                                      operating: OperatingPoint) -> float:
    """P(switch fails | previous resistance r_star) at cell (i, j)."""
    alpha, beta, sigma_t, ln_t, v_w = _op_constants(op, device, operating)
    v_eff = effective_write_voltage(r_star, i, j, v_w, geometry, device)
    return float(q_function((ln_t - (alpha * v_eff + beta)) / sigma_t))


def effective_write_voltage(r_star, i: int, j: int, v_w: float,
                            geometry: ArrayGeometry,
                            device: DeviceModel):
    """Delivered write voltage; divider when ideal, nodal solve otherwise.

    In the non-ideal case every non-selected cell is pinned at the median
    resistance of the state mixture.
    """
    if geometry.is_ideal:
        line = cumulative_line_resistance(i, j, geometry)
        return v_w / (1.0 + line / np.asarray(r_star, dtype=float))
    background = mixture_median_resistance(device)
    kind = "write-set" if v_w < 0 else "write-reset"
    bias = BiasScheme(kind, i, j)
    values = np.full((geometry.m, geometry.n), background)

    def solve_one(r: float) -> float:
        values[i - 1, j - 1] = r
        return solve_kcl_grid(geometry, ResistanceGrid(values.copy()), bias,
                              v_w).selected_voltage

    r_star = np.asarray(r_star, dtype=float)
    if r_star.ndim == 0:
        return solve_one(float(r_star))
    return np.array([solve_one(float(r)) for r in r_star.ravel()]).reshape(r_star.shape)


def mixture_median_resistance(device: DeviceModel) -> float:
    """Median of the unconditional resistance mixture (HRS weight q)."""
    def cdf(x: float) -> float:
        return (device.q * norm.cdf((x - device.mu_H) / device.sigma_H)
                + (1.0 - device.q) * norm.cdf((x - device.mu_L) / device.sigma_L)
                - 0.5)
    lo = min(device.mu_L - 10 * device.sigma_L, device.mu_H - 10 * device.sigma_H)
    hi = max(device.mu_L + 10 * device.sigma_L, device.mu_H + 10 * device.sigma_H)
    return math.exp(brentq(cdf, lo, hi, xtol=1e-13))


def marginal_switch_failures(line_resistance, device: DeviceModel,
                             operating: OperatingPoint,
                             tol: float = QUADRATURE_TOL):
    """Failure probabilities marginalized over the previous resistance.

    Returns (reset_fail, set_fail) for each accumulated line resistance in
    ``line_resistance`` (ideal selectors).  Priors are not folded in.  The
    integral runs over the substituted standard-normal variable of the
    previous state's log-resistance, by adaptive Gauss-Hermite quadrature
    with absolute error at most ``tol``.
    """
    line = np.atleast_1d(np.asarray(line_resistance, dtype=float))[:, None]

    def make_integrand(mu, sigma, alpha, beta, sigma_t, ln_t, v_w):
        def f(u):
            # v = v_w / (1 + L * exp(-ln r*)); overflow-safe for extreme nodes
            with np.errstate(over="ignore"):
                v_eff = v_w / (1.0 + line * np.exp(-(mu + sigma * u[None, :])))
            return q_function((ln_t - (alpha * v_eff + beta)) / sigma_t)
        return f

    a, b, st, lt, vw = _op_constants("reset", device, operating)
    reset_fail = gauss_hermite_expectation(
        make_integrand(device.mu_L, device.sigma_L, a, b, st, lt, vw), tol=tol)
    a, b, st, lt, vw = _op_constants("set", device, operating)
    set_fail = gauss_hermite_expectation(
        make_integrand(device.mu_H, device.sigma_H, a, b, st, lt, vw), tol=tol)
    return reset_fail, set_fail


def _marginal_failure_general(i: int, j: int, op: str, geometry: ArrayGeometry,
                              device: DeviceModel, operating: OperatingPoint,
                              tol: float) -> float:
    """Non-ideal-selector marginal failure; one nodal solve per quadrature node."""
    alpha, beta, sigma_t, ln_t, v_w = _op_constants(op, device, operating)
    mu, sigma = ((device.mu_L, device.sigma_L) if op == "reset"
                 else (device.mu_H, device.sigma_H))

    def f(u):
        r_star = np.exp(mu + sigma * u)
        v_eff = effective_write_voltage(r_star, i, j, v_w, geometry, device)
        return q_function((ln_t - (alpha * v_eff + beta)) / sigma_t)

    return float(gauss_hermite_expectation(f, tol=tol))


def conditional_switch_failures(i: int, j: int, geometry: ArrayGeometry,
                                device: DeviceModel, operating: OperatingPoint,
                                tol: float = QUADRATURE_TOL) -> tuple[float, float]:
    """(reset fail, set fail) for cell (i, j), before prior weighting."""
    if geometry.is_ideal:
        line = cumulative_line_resistance(i, j, geometry)
        reset_fail, set_fail = marginal_switch_failures(line, device, operating, tol)
        return float(reset_fail[0]), float(set_fail[0])
    return (_marginal_failure_general(i, j, "reset", geometry, device,
                                      operating, tol),
            _marginal_failure_general(i, j, "set", geometry, device,
                                      operating, tol))


def write_channel_params(i: int, j: int, geometry: ArrayGeometry,
                         device: DeviceModel, operating: OperatingPoint,
                         tol: float = QUADRATURE_TOL) -> WriteChannelParams:
    """Channel crossovers (p1, p2) for cell (i, j), priors folded in."""
    reset_fail, set_fail = conditional_switch_failures(i, j, geometry, device,
                                                       operating, tol)
    return WriteChannelParams(i, j, (1.0 - device.q) * reset_fail,
                              device.q * set_fail)


def same_state_write(x: int, s_star: int) -> float:
    """Writing the already-stored state always succeeds: P(Y = X) = 1."""
    if x != s_star:
        raise ValueError("same_state_write requires the previous state to "
                         "equal the written state")
    return 1.0

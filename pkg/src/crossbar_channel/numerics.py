"""Shared numerical primitives: Gaussian tails, entropy, quadrature, intervals."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import erfc, xlogy
from scipy.stats import norm

SQRT2 = np.sqrt(2.0)
LN2 = np.log(2.0)


class QuadratureError(RuntimeError):
    """Raised when the adaptive quadrature cannot meet its error target."""

    def __init__(self, message: str, achieved_error: float):
        super().__init__(f"{message} (achieved error estimate {achieved_error:.3e})")
        self.achieved_error = achieved_error


def q_function(x):
    """Upper-tail probability of the standard normal, Q(x) = P(N(0,1) > x)."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / SQRT2)


def normal_quantile(p: float) -> float:
    return float(norm.ppf(p))


def binary_entropy(p):
    """Binary entropy in bits, with 0*log(0) taken as 0."""
    p = np.asarray(p, dtype=float)
    return -(xlogy(p, p) + xlogy(1.0 - p, 1.0 - p)) / LN2


@lru_cache(maxsize=None)
def _hermgauss(order: int):
    x, w = np.polynomial.hermite.hermgauss(order)
    # change of variables so nodes sample u ~ N(0, 1)
    return SQRT2 * x, w / np.sqrt(np.pi)


def gauss_hermite_expectation(f, tol: float = 1e-10, start_order: int = 32,
                              max_order: int = 4096):
    """E[f(U)] for U ~ N(0,1) by Gauss-Hermite quadrature with order doubling.

    ``f`` takes a node array of shape (k,) and returns an array whose last
    axis has length k; the expectation is taken over that axis.  Doubling
    stops once successive estimates agree within ``tol`` (absolute, per
    output element).
    """
    order = start_order
    u, w = _hermgauss(order)
    prev = np.asarray(f(u)) @ w
    while order < max_order:
        order *= 2
        u, w = _hermgauss(order)
        cur = np.asarray(f(u)) @ w
        err = float(np.max(np.abs(cur - prev)))
        if err <= tol:
            return cur
        prev = cur
    raise QuadratureError(
        f"Gauss-Hermite expectation did not converge by order {max_order}",
        achieved_error=err,
    )


def wilson_interval(failures: int, samples: int, confidence: float):
    """Wilson score confidence interval for a binomial proportion."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    z = normal_quantile(0.5 + confidence / 2.0)
    phat = failures / samples
    denom = 1.0 + z * z / samples
    center = (phat + z * z / (2.0 * samples)) / denom
    half = z * np.sqrt(phat * (1.0 - phat) / samples + z * z / (4.0 * samples * samples)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def substream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent, reproducible generator for a (seed, key...) combination.

    Keyed streams do not depend on how many other streams exist, so adding
    cells or running workers in any order never perturbs other draws.
    """
    entropy = [int(master_seed)] + [int(k) for k in key]
    if any(e < 0 for e in entropy):
        raise ValueError("seed and stream keys must be non-negative")
    return np.random.default_rng(np.random.SeedSequence(entropy))


def format_sig(x: float, digits: int = 17) -> str:
    """Fixed significant-digit decimal text; 17 digits round-trips a double."""
    if np.isposinf(x):
        return "inf"
    if np.isneginf(x):
        return "-inf"
    return f"{float(x):.{digits}g}"

"""Crossbar circuit analysis: closed forms for ideal selectors, KCL otherwise.

The nodal model has one wordline node and one bitline node per cell.
Adjacent wordline nodes are joined by r_w and adjacent bitline nodes by r_b;
each cell connects its node pair through (cell resistance + selector-role
resistance).  Wordline drivers sit at the j=0 end and bitline terminals at
the i=0 end, so the selected path accumulates j*r_w + i*r_b of line
resistance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla

from .config import ArrayGeometry

# Selector roles, assigned statically from the bias scheme.
FULLY_SELECTED = 0
HALF_SELECTED = 1
UNSELECTED = 2

_WRITE_KINDS = ("write-set", "write-reset")
_KINDS = _WRITE_KINDS + ("read",)

# KCL balance at every node must close to this fraction of the source current.
RESIDUAL_TOLERANCE = 1e-9


class SingularSystemError(RuntimeError):
    """Nodal system has no unique solution; carries the isolated node labels."""

    def __init__(self, isolated_nodes: list[str]):
        shown = ", ".join(isolated_nodes[:8])
        more = "" if len(isolated_nodes) <= 8 else f" (+{len(isolated_nodes) - 8} more)"
        super().__init__(f"singular nodal system; isolated nodes: {shown}{more}")
        self.isolated_nodes = isolated_nodes


@dataclass(frozen=True)
class BiasScheme:
    """Which cell is driven and how: 'write-set', 'write-reset', or 'read'."""

    kind: str
    i: int
    j: int

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown bias kind {self.kind!r}")

    @property
    def is_write(self) -> bool:
        return self.kind in _WRITE_KINDS


@dataclass(frozen=True)
class ResistanceGrid:
    """Realized cell resistances for one solve; shape (m, n), all > 0."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2:
            raise ValueError("resistance grid must be 2-D")
        if not np.all(vals > 0.0):
            raise ValueError("cell resistances must be > 0")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class KclSolution:
    wordline_voltages: np.ndarray
    bitline_voltages: np.ndarray
    selected_voltage: float
    sensed_current: float
    source_current: float
    residual: float


def _check_indices(i: int, j: int, geometry: ArrayGeometry) -> None:
    if not (1 <= i <= geometry.m and 1 <= j <= geometry.n):
        raise IndexError(f"cell ({i}, {j}) outside {geometry.m}x{geometry.n} array")


def cumulative_line_resistance(i: int, j: int, geometry: ArrayGeometry) -> float:
    """Line resistance accumulated on the selected path: i*r_b + j*r_w."""
    _check_indices(i, j, geometry)
    return i * geometry.r_b + j * geometry.r_w


def line_resistance_grid(geometry: ArrayGeometry) -> np.ndarray:
    """i*r_b + j*r_w for every cell, shape (m, n), 1-based indices."""
    i = np.arange(1, geometry.m + 1, dtype=float)[:, None] * geometry.r_b
    j = np.arange(1, geometry.n + 1, dtype=float)[None, :] * geometry.r_w
    return i + j


def effective_write_voltage_ideal(r_star, i: int, j: int, v_w: float,
                                  geometry: ArrayGeometry):
    """Voltage divider across the selected cell under ideal selectors.

    Accepts scalar or array r_star (> 0, inf allowed as the open-circuit
    limit, which returns v_w exactly).
    """
    if not geometry.is_ideal:
        raise ValueError("effective_write_voltage_ideal requires ideal selectors; "
                         "use solve_kcl_grid instead")
    line = cumulative_line_resistance(i, j, geometry)
    r_star = np.asarray(r_star, dtype=float)
    if not np.all(r_star > 0.0):
        raise ValueError("r_star must be > 0")
    # v_w / (1 + line/r) form stays finite for r -> inf and avoids overflow
    out = v_w / (1.0 + line / r_star)
    return float(out) if out.ndim == 0 else out


def read_current_ideal(resistance, i: int, j: int, v_r: float,
                       geometry: ArrayGeometry):
    """Sensed current under ideal selectors: v_r / (i*r_b + j*r_w + R)."""
    line = cumulative_line_resistance(i, j, geometry)
    resistance = np.asarray(resistance, dtype=float)
    if not np.all(resistance > 0.0):
        raise ValueError("resistance must be > 0")
    out = v_r / (line + resistance)
    return float(out) if out.ndim == 0 else out


def selector_roles(m: int, n: int, bias: BiasScheme) -> np.ndarray:
    """Static role map for a bias scheme, shape (m, n).

    Write: the selected cell is fully selected, cells sharing its wordline or
    bitline are half selected, the rest unselected.  Read: only the selected
    cell is fully selected.
    """
    roles = np.full((m, n), UNSELECTED, dtype=np.int8)
    if bias.is_write:
        roles[bias.i - 1, :] = HALF_SELECTED
        roles[:, bias.j - 1] = HALF_SELECTED
    roles[bias.i - 1, bias.j - 1] = FULLY_SELECTED
    return roles


def selector_resistances(roles: np.ndarray, geometry: ArrayGeometry) -> np.ndarray:
    lookup = np.array([geometry.r_sf, geometry.r_sh, geometry.r_su], dtype=float)
    return lookup[roles]


def _bias_voltages(geometry: ArrayGeometry, bias: BiasScheme, v_source: float):
    """Per-wordline driver voltages and per-bitline terminal voltages."""
    drivers = np.zeros(geometry.m)
    terminals = np.zeros(geometry.n)
    if bias.is_write:
        drivers[:] = v_source / 2.0
        terminals[:] = v_source / 2.0
        drivers[bias.i - 1] = v_source
        terminals[bias.j - 1] = 0.0
    else:
        drivers[bias.i - 1] = v_source
    return drivers, terminals


def solve_kcl_grid(geometry: ArrayGeometry, grid: ResistanceGrid,
                   bias: BiasScheme, v_source: float) -> KclSolution:
    """Full nodal solve; returns selected-cell voltage and sensed current.

    Requires r_w > 0 and r_b > 0 and every finite branch resistance > 0.
    The solution is refined until every KCL balance closes to within
    ``RESIDUAL_TOLERANCE`` of the total source current.
    """
    m, n = geometry.m, geometry.n
    _check_indices(bias.i, bias.j, geometry)
    if grid.values.shape != (m, n):
        raise ValueError(f"grid shape {grid.values.shape} != array {(m, n)}")
    if not (geometry.r_w > 0.0 and geometry.r_b > 0.0):
        raise ValueError("nodal solve requires r_w > 0 and r_b > 0")

    roles = selector_roles(m, n, bias)
    branch = grid.values + selector_resistances(roles, geometry)
    drivers, terminals = _bias_voltages(geometry, bias, v_source)

    size = 2 * m * n
    w_of = lambda i, j: (i - 1) * n + (j - 1)          # noqa: E731
    b_of = lambda i, j: m * n + (i - 1) * n + (j - 1)  # noqa: E731

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    diag = np.zeros(size)
    rhs = np.zeros(size)

    def couple(a: np.ndarray, c: np.ndarray, g: np.ndarray) -> None:
        rows.append(a)
        cols.append(c)
        vals.append(-g)
        rows.append(c)
        cols.append(a)
        vals.append(-g)
        np.add.at(diag, a, g)
        np.add.at(diag, c, g)

    g_w, g_b = 1.0 / geometry.r_w, 1.0 / geometry.r_b
    ii = np.arange(1, m + 1)
    jj = np.arange(1, n + 1)

    # wordline chains and their drivers at the j=0 end
    first_w = np.array([w_of(i, 1) for i in ii])
    diag[first_w] += g_w
    rhs[first_w] += g_w * drivers
    for j in range(1, n):
        couple(np.array([w_of(i, j) for i in ii]),
               np.array([w_of(i, j + 1) for i in ii]),
               np.full(m, g_w))

    # bitline chains and their terminals at the i=0 end
    first_b = np.array([b_of(1, j) for j in jj])
    diag[first_b] += g_b
    rhs[first_b] += g_b * terminals
    for i in range(1, m):
        couple(np.array([b_of(i, j) for j in jj]),
               np.array([b_of(i + 1, j) for j in jj]),
               np.full(n, g_b))

    # cell branches (open where the selector role resistance is infinite)
    finite = np.isfinite(branch)
    if finite.any():
        ci, cj = np.nonzero(finite)
        couple(ci * n + cj, m * n + ci * n + cj, 1.0 / branch[finite])

    row_idx = np.concatenate(rows) if rows else np.empty(0, dtype=int)
    col_idx = np.concatenate(cols) if cols else np.empty(0, dtype=int)
    val = np.concatenate(vals) if vals else np.empty(0)
    matrix = sp.coo_matrix(
        (np.concatenate([val, diag]),
         (np.concatenate([row_idx, np.arange(size)]),
          np.concatenate([col_idx, np.arange(size)]))),
        shape=(size, size)).tocsr()

    try:
        x = _solve_linear(matrix, rhs)
    except np.linalg.LinAlgError:
        _raise_if_isolated(matrix, rhs, m, n)
        raise
    if not np.all(np.isfinite(x)):
        _raise_if_isolated(matrix, rhs, m, n)
        raise RuntimeError("nodal solve produced non-finite voltages")

    # iterative refinement against the residual contract; the check saturates
    # at the cancellation floor of double precision (balances sum terms of
    # magnitude |G||x|, so residuals below eps * that scale are noise)
    source_nodes = np.concatenate([first_w, first_b])
    source_v = np.concatenate([drivers, terminals])
    source_g = np.concatenate([np.full(m, g_w), np.full(n, g_b)])
    abs_matrix = abs(matrix)
    for _ in range(4):
        source_current = float(np.sum(np.abs((source_v - x[source_nodes]) * source_g)))
        residual = matrix @ x - rhs
        worst = float(np.max(np.abs(residual)))
        floor = 64.0 * np.finfo(float).eps * float(
            np.max(abs_matrix @ np.abs(x) + np.abs(rhs)))
        if worst <= max(RESIDUAL_TOLERANCE * source_current, floor):
            break
        x = x + _solve_linear(matrix, -residual)
    else:
        raise RuntimeError(
            f"KCL residual {worst:.3e} exceeds contract after refinement")

    w_v = x[: m * n].reshape(m, n)
    b_v = x[m * n:].reshape(m, n)
    sel_v = float(w_v[bias.i - 1, bias.j - 1] - b_v[bias.i - 1, bias.j - 1])
    sensed = float((b_v[0, bias.j - 1] - terminals[bias.j - 1]) * g_b)
    return KclSolution(w_v, b_v, sel_v, sensed, source_current,
                       worst / max(source_current, 1e-300))


def _solve_linear(matrix: sp.csr_matrix, rhs: np.ndarray) -> np.ndarray:
    # dense LAPACK beats the sparse machinery for the small systems used here
    if matrix.shape[0] <= 512:
        return np.linalg.solve(matrix.toarray(), rhs)
    return spla.spsolve(matrix, rhs)


def _raise_if_isolated(matrix: sp.csr_matrix, rhs: np.ndarray, m: int, n: int) -> None:
    """Every node must reach a driven boundary through finite conductances."""
    size = matrix.shape[0]
    coo = matrix.tocoo()
    off = coo.row != coo.col
    adj_rows = coo.row[off]
    adj_cols = coo.col[off]
    # extra super-node stands in for all voltage sources; W(i,1) nodes tie to
    # drivers and B(1,j) nodes tie to terminals
    boundary = np.concatenate([np.arange(m) * n, size // 2 + np.arange(n)])
    adj = sp.coo_matrix(
        (np.ones(len(adj_rows) + len(boundary)),
         (np.concatenate([adj_rows, boundary]),
          np.concatenate([adj_cols, np.full(len(boundary), size)]))),
        shape=(size + 1, size + 1))
    ncomp, labels = csgraph.connected_components(adj, directed=False)
    if ncomp == 1:
        return
    good = labels[size]
    isolated = np.nonzero(labels[:size] != good)[0]
    names = [f"W({k // n + 1},{k % n + 1})" if k < size // 2
             else f"B({(k - size // 2) // n + 1},{(k - size // 2) % n + 1})"
             for k in isolated]
    raise SingularSystemError(names)

"""Experiment sweeps emitting CSV data files with JSON metadata sidecars.

All emitted tables are analytic-model computations; Monte-Carlo validation
runs through the separate ``validate`` command.  Files are byte-identical
across re-runs of the same spec: rows are emitted in a fixed order and
floats in fixed 17-significant-digit decimal text, and sidecars carry no
timestamps.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .cascade import capacity_q_coupled, cascade_probabilities
from .circuit import line_resistance_grid
from .config import ArrayGeometry, ParameterBundle, bundle_as_dict
from .numerics import format_sig
from .oracle import SamplingPlan
from .read_channel import read_channel_params_general, read_error_probabilities
from .thresholds import (SCHEME_KINDS, ThresholdPreconditionError, make_scheme,
                         scheme_average_ber)
from .write_channel import conditional_switch_failures, marginal_switch_failures

HEATMAP_HEADER = ("i", "j", "p1", "p2", "p3", "p4", "p5", "p6",
                  "ber_write", "ber_read", "ber_cascade", "capacity")
CAPACITY_HEADER = ("m", "n", "r_w", "r_b", "avg_capacity")
ASPECT_HEADER = ("m", "n", "ratio", "avg_capacity")
THRESHOLD_HEADER = ("sweep_var", "value", "scheme", "avg_read_ber")


@dataclass(frozen=True)
class SweepSpec:
    """What to sweep and where to write it."""

    kind: str
    out_dir: Path
    sizes: tuple = (64, 128, 256, 384)
    line_resistances: tuple = tuple(float(r) for r in range(10, 101, 10))
    total_cells: int = 16384
    shapes: tuple = ((128, 128), (64, 256), (32, 512), (16, 1024),
                     (8, 2048), (4, 4096))
    schemes: tuple = SCHEME_KINDS
    threshold_sizes: tuple = (128, 256, 512, 1024, 2048)
    threshold_fixed_r: float = 30.0
    threshold_fixed_size: int = 1024
    seed: int = 0
    mode: str = "ideal"
    samples: int = 100000

    def __post_init__(self):
        object.__setattr__(self, "out_dir", Path(self.out_dir))
        if self.kind in ("heatmap", "capacity-sweep") and not self.sizes:
            raise ValueError("sizes list must be non-empty")
        if not self.line_resistances:
            raise ValueError("line resistance list must be non-empty")
        if self.kind == "aspect-ratio":
            if not self.shapes:
                raise ValueError("shapes list must be non-empty")
            for (m, n) in self.shapes:
                if m * n != self.total_cells:
                    raise ValueError(
                        f"shape {m}x{n} has {m * n} cells, expected {self.total_cells}")
        if self.kind == "thresholds" and not self.schemes:
            raise ValueError("schemes list must be non-empty")


@dataclass(frozen=True)
class ChannelGrid:
    """Per-cell channel parameters and capacity for one array."""

    p1: np.ndarray
    p2: np.ndarray
    p3: np.ndarray
    p4: np.ndarray
    p5: np.ndarray
    p6: np.ndarray
    ber_write: np.ndarray
    ber_read: np.ndarray
    ber_cascade: np.ndarray
    capacity: np.ndarray


def compute_channel_grid(bundle: ParameterBundle, mode: str = "ideal",
                         plan: SamplingPlan | None = None) -> ChannelGrid:
    """All channel parameters for every cell.

    Ideal mode is fully analytic and vectorized over the distinct
    accumulated line resistances.  General mode runs the nodal write
    quadrature and the Monte-Carlo read estimator per cell, which is only
    practical for small arrays.
    """
    geometry, device, operating = bundle
    q = device.q
    if mode == "ideal":
        line = line_resistance_grid(geometry)
        unique, inverse = np.unique(line, return_inverse=True)
        inverse = inverse.ravel()
        reset_fail, set_fail = marginal_switch_failures(unique, device, operating)
        u_p3, u_p4 = read_error_probabilities(unique, operating.R_th, device)
        u_cap, _ = capacity_q_coupled(reset_fail, set_fail, u_p3, u_p4)
        expand = lambda a: a[inverse].reshape(line.shape)  # noqa: E731
        p1 = expand((1.0 - q) * reset_fail)
        p2 = expand(q * set_fail)
        p3, p4, capacity = expand(u_p3), expand(u_p4), expand(u_cap)
    else:
        if plan is None:
            plan = SamplingPlan(n=100000, seed=0, confidence=0.99, tolerance=5e-3)
        m, n = geometry.m, geometry.n
        p1 = np.empty((m, n))
        p2 = np.empty((m, n))
        p3 = np.empty((m, n))
        p4 = np.empty((m, n))
        capacity = np.empty((m, n))
        for i in range(1, m + 1):
            for j in range(1, n + 1):
                reset_fail, set_fail = conditional_switch_failures(
                    i, j, geometry, device, operating)
                rp = read_channel_params_general(i, j, operating.I_th, geometry,
                                                 device, operating, plan)
                p1[i - 1, j - 1] = (1.0 - q) * reset_fail
                p2[i - 1, j - 1] = q * set_fail
                p3[i - 1, j - 1], p4[i - 1, j - 1] = rp.p3, rp.p4
                cap, _ = capacity_q_coupled(reset_fail, set_fail, rp.p3, rp.p4)
                capacity[i - 1, j - 1] = cap
    p5, p6 = cascade_probabilities(p1, p2, p3, p4)
    return ChannelGrid(p1, p2, p3, p4, p5, p6,
                       ber_write=p1 + p2,
                       ber_read=q * p3 + (1.0 - q) * p4,
                       ber_cascade=q * p5 + (1.0 - q) * p6,
                       capacity=capacity)


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([c if isinstance(c, str) else
                             (str(c) if isinstance(c, (int, np.integer)) else format_sig(c))
                             for c in row])


def _write_metadata(csv_path: Path, bundle: ParameterBundle, spec: SweepSpec,
                    notes: list[str]) -> None:
    meta = {
        "tool": "crossbar-channel",
        "version": __version__,
        "experiment": spec.kind,
        "parameters": {k: (str(v) if v in (float("inf"), float("-inf")) else v)
                       for k, v in bundle_as_dict(bundle).items()},
        "seed": spec.seed,
        "mode": spec.mode,
        "notes": notes,
    }
    sidecar = csv_path.with_suffix(csv_path.suffix + ".meta.json")
    sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n",
                       encoding="utf-8")


def run_heatmap(spec: SweepSpec, bundle: ParameterBundle):
    """Per-cell channel parameter table for the configured array."""
    grid = compute_channel_grid(bundle, mode=spec.mode,
                                plan=SamplingPlan(n=spec.samples, seed=spec.seed,
                                                  confidence=0.99, tolerance=5e-3)
                                if spec.mode == "general" else None)
    m, n = bundle.geometry.m, bundle.geometry.n
    rows = []
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            a, b = i - 1, j - 1
            rows.append((i, j, grid.p1[a, b], grid.p2[a, b], grid.p3[a, b],
                         grid.p4[a, b], grid.p5[a, b], grid.p6[a, b],
                         grid.ber_write[a, b], grid.ber_read[a, b],
                         grid.ber_cascade[a, b], grid.capacity[a, b]))
    path = spec.out_dir / "heatmap.csv"
    _write_csv(path, HEATMAP_HEADER, rows)
    _write_metadata(path, bundle, spec, notes=[])
    return path, grid


def run_capacity_sweep(spec: SweepSpec, bundle: ParameterBundle):
    """Averaged capacity over square arrays for each (size, line resistance)."""
    geometry, device, operating = bundle
    rows = []
    for size in spec.sizes:
        for r in spec.line_resistances:
            geo = replace_geometry(geometry, m=size, n=size, r_w=r, r_b=r)
            avg = _averaged_capacity_ideal(geo, device, operating)
            rows.append((size, size, r, r, avg))
    path = spec.out_dir / "capacity_sweep.csv"
    _write_csv(path, CAPACITY_HEADER, rows)
    _write_metadata(path, bundle, spec, notes=[])
    return path, rows


def run_aspect_ratio_study(spec: SweepSpec, bundle: ParameterBundle):
    """Averaged capacity per array shape at a fixed total cell count."""
    geometry, device, operating = bundle
    rows = []
    for (m, n) in sorted(spec.shapes, key=lambda s: s[1] / s[0]):
        geo = replace_geometry(geometry, m=m, n=n)
        avg = _averaged_capacity_ideal(geo, device, operating)
        rows.append((m, n, n / m, avg))
    path = spec.out_dir / "aspect_ratio.csv"
    _write_csv(path, ASPECT_HEADER, rows)
    _write_metadata(path, bundle, spec, notes=[])
    return path, rows


def run_threshold_comparison(spec: SweepSpec, bundle: ParameterBundle):
    """Averaged read BER per thresholding scheme over size and resistance sweeps.

    Points where the exact solver's precondition fails are emitted with an
    empty BER field and recorded in the metadata sidecar rather than dropped.
    """
    geometry, device, _ = bundle
    rows = []
    notes: list[str] = []

    def emit(sweep_var, value, geo):
        for kind in spec.schemes:
            try:
                scheme = make_scheme(kind, geo, device)
                ber = scheme_average_ber(scheme, geo, device)
                rows.append((sweep_var, value, kind, ber))
            except ThresholdPreconditionError as exc:
                rows.append((sweep_var, value, kind, ""))
                notes.append(f"{sweep_var}={value} {kind}: {exc}")

    for size in spec.threshold_sizes:
        geo = replace_geometry(geometry, m=size, n=size,
                               r_w=spec.threshold_fixed_r,
                               r_b=spec.threshold_fixed_r)
        emit("size", size, geo)
    for r in spec.line_resistances:
        geo = replace_geometry(geometry, m=spec.threshold_fixed_size,
                               n=spec.threshold_fixed_size, r_w=r, r_b=r)
        emit("r_line", r, geo)

    path = spec.out_dir / "threshold_cmp.csv"
    _write_csv(path, THRESHOLD_HEADER, rows)
    _write_metadata(path, bundle, spec, notes=notes)
    return path, rows


def _averaged_capacity_ideal(geometry: ArrayGeometry, device, operating) -> float:
    line = line_resistance_grid(geometry)
    unique, inverse = np.unique(line, return_inverse=True)
    inverse = inverse.ravel()
    reset_fail, set_fail = marginal_switch_failures(unique, device, operating)
    p3, p4 = read_error_probabilities(unique, operating.R_th, device)
    cap, _ = capacity_q_coupled(reset_fail, set_fail, p3, p4)
    counts = np.bincount(inverse, minlength=unique.size)
    return float(np.dot(cap, counts) / counts.sum())


def replace_geometry(geometry: ArrayGeometry, **kw) -> ArrayGeometry:
    return replace(geometry, **kw)

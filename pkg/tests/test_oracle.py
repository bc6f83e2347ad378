import itertools
import math

import numpy as np
import pytest

from crossbar_channel.config import (ArrayGeometry, DeviceModel, OperatingPoint,
                                     ParameterBundle, default_bundle)
from crossbar_channel.oracle import (SamplingPlan, corner_cells,
                                     estimate_channel_grid, simulate_read,
                                     simulate_write)
from crossbar_channel.read_channel import read_error_probabilities
from crossbar_channel.write_channel import marginal_switch_failures

from dense_oracle import sensed_currents_read_2x2_batch


class TestSamplingPlan:
    def test_validation(self):
        with pytest.raises(ValueError):
            SamplingPlan(n=0)
        with pytest.raises(ValueError):
            SamplingPlan(n=10, confidence=0.95)
        with pytest.raises(ValueError):
            SamplingPlan(n=10, tolerance=0.0)
        SamplingPlan(n=10, confidence=0.997, tolerance=0.5)


class TestSimulateWrite:
    def test_prior_forcing_matching_state_never_fails(self, bundle):
        geometry, _, operating = bundle
        all_zero = DeviceModel(q=1.0)   # previous state always 0
        est = simulate_write(5, 5, 0, SamplingPlan(n=5000, seed=1),
                             ParameterBundle(geometry, all_zero, operating))
        assert est.failures == 0
        all_one = DeviceModel(q=0.0)
        est = simulate_write(5, 5, 1, SamplingPlan(n=5000, seed=1),
                             ParameterBundle(geometry, all_one, operating))
        assert est.failures == 0

    def test_deterministic_switching_never_fails(self, bundle):
        geometry, _, operating = bundle
        # medians stay below the pulse duration at every reachable voltage,
        # and a vanishing spread makes the draw stick to the median
        dev = DeviceModel(sigma_set=1e-9, sigma_reset=1e-9)
        b = ParameterBundle(geometry, dev, operating)
        for x in (0, 1):
            est = simulate_write(1024, 1024, x, SamplingPlan(n=20000, seed=3), b)
            assert est.failures == 0

    def test_ci_covers_quadrature_worst_corner(self, bundle):
        geometry, device, operating = bundle
        plan = SamplingPlan(n=400000, seed=11, confidence=0.997)
        reset_fail, set_fail = marginal_switch_failures(20480.0, device, operating)
        p1 = (1 - device.q) * float(reset_fail[0])
        p2 = device.q * float(set_fail[0])
        assert simulate_write(1024, 1024, 0, plan, bundle).covers(p1)
        assert simulate_write(1024, 1024, 1, plan, bundle).covers(p2)


class TestSimulateRead:
    def test_ci_covers_closed_form(self, bundle):
        geometry, device, operating = bundle
        plan = SamplingPlan(n=400000, seed=19, confidence=0.997)
        p3, p4 = read_error_probabilities(20480.0, operating.R_th, device)
        assert simulate_read(1024, 1024, 0, plan, bundle).covers(float(p3))
        assert simulate_read(1024, 1024, 1, plan, bundle).covers(float(p4))

    def test_zero_read_voltage_misses_every_stored_one(self, bundle):
        geometry, device, _ = bundle
        op = OperatingPoint(V_r=1e-12)   # everything detects as 0
        b = ParameterBundle(geometry, device, op)
        est = simulate_read(3, 3, 1, SamplingPlan(n=2000, seed=2), b)
        assert est.rate == 1.0
        est = simulate_read(3, 3, 0, SamplingPlan(n=2000, seed=2), b)
        assert est.rate == 0.0

    def test_general_mode_matches_enumeration_oracle(self):
        # 2x2 array, non-ideal selectors: enumerate the 2^3 background state
        # patterns; within each, integrate the detection probability over all
        # four log-normal resistances by tensor Gauss-Hermite quadrature on
        # an independently assembled dense system.
        geo = ArrayGeometry(m=2, n=2, r_w=25.0, r_b=25.0, r_sf=5.0,
                            r_sh=3e4, r_su=3e4)
        dev = DeviceModel()
        op = OperatingPoint()
        b = ParameterBundle(geo, dev, op)
        sel = (2, 2)
        y = 0

        nodes, weights = np.polynomial.hermite.hermgauss(16)
        u = math.sqrt(2.0) * nodes
        w = weights / math.sqrt(math.pi)
        background_cells = [(1, 1), (1, 2), (2, 1)]
        total = 0.0
        for states in itertools.product((0, 1), repeat=3):
            prob = 1.0
            for s in states:
                prob *= dev.q if s == 0 else (1 - dev.q)
            # tensor quadrature over (selected, three background) resistances
            mus = [dev.mu_H if y == 0 else dev.mu_L]
            sgs = [dev.sigma_H if y == 0 else dev.sigma_L]
            for s in states:
                mus.append(dev.mu_H if s == 0 else dev.mu_L)
                sgs.append(dev.sigma_H if s == 0 else dev.sigma_L)
            axes = np.meshgrid(u, u, u, u, indexing="ij")
            r = [np.exp(mus[k] + sgs[k] * axes[k]).ravel() for k in range(4)]
            grids = np.empty((r[0].size, 2, 2))
            grids[:, sel[0] - 1, sel[1] - 1] = r[0]
            for k, (ci, cj) in enumerate(background_cells):
                grids[:, ci - 1, cj - 1] = r[k + 1]
            currents = sensed_currents_read_2x2_batch(25.0, 25.0, grids, sel,
                                                      r_sf=5.0, r_su=3e4, v_r=3.0)
            err = (currents > op.I_th).astype(float)  # stored 0 read as 1
            wt = (w[:, None, None, None] * w[None, :, None, None]
                  * w[None, None, :, None] * w[None, None, None, :]).ravel()
            total += prob * float(err @ wt)

        est = simulate_read(sel[0], sel[1], y, SamplingPlan(n=6000, seed=7),
                            b, mode="general")
        assert est.ci_low <= total <= est.ci_high


class TestDeterminism:
    def test_repeated_runs_bit_identical(self, bundle):
        plan = SamplingPlan(n=30000, seed=42)
        a = simulate_write(17, 23, 0, plan, bundle)
        b = simulate_write(17, 23, 0, plan, bundle)
        assert a == b

    def test_grid_estimates_independent_of_cell_list(self, bundle):
        plan = SamplingPlan(n=20000, seed=9)
        alone = estimate_channel_grid([(3, 4)], plan, bundle)[(3, 4)]
        together = estimate_channel_grid([(1, 1), (3, 4), (5, 5)], plan,
                                         bundle)[(3, 4)]
        assert alone == together

    def test_single_sample_estimate_is_zero_or_one(self, bundle):
        plan = SamplingPlan(n=1, seed=13)
        est = simulate_read(1024, 1024, 1, plan, bundle)
        assert est.rate in (0.0, 1.0)

    def test_corner_cells_helper(self, bundle):
        assert corner_cells(bundle.geometry) == [(1, 1), (1, 1024),
                                                 (1024, 1), (1024, 1024)]


class TestCoverageCalibration:
    def test_nominal_99_percent_interval_covers_enough(self, bundle):
        # 200 independent runs; a 3-sigma binomial bound on 99% coverage
        # allows at most 7 misses
        geometry, device, operating = bundle
        p3, _ = read_error_probabilities(20480.0, operating.R_th, device)
        truth = float(p3)
        covered = 0
        for seed in range(200):
            plan = SamplingPlan(n=30000, seed=1000 + seed, confidence=0.99)
            est = simulate_read(1024, 1024, 0, plan, bundle)
            covered += est.covers(truth)
        assert covered >= 193

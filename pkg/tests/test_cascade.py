import numpy as np
import pytest

from crossbar_channel.cascade import (averaged_capacity, capacity_grid,
                                      capacity_q_coupled, cascade,
                                      cascade_probabilities, cell_capacity,
                                      mutual_information)
from crossbar_channel.config import ArrayGeometry
from crossbar_channel.numerics import binary_entropy
from crossbar_channel.read_channel import ReadChannelParams, read_error_probabilities
from crossbar_channel.write_channel import WriteChannelParams, marginal_switch_failures


def wp(p1, p2):
    return WriteChannelParams(1, 1, p1, p2)


def rp(p3, p4):
    return ReadChannelParams(1, 1, p3, p4, 1e5)


class TestCascade:
    def test_perfect_channel(self):
        c = cascade(wp(0.0, 0.0), rp(0.0, 0.0))
        assert (c.p5, c.p6) == (0.0, 0.0)

    def test_certain_write_error_perfect_read(self):
        assert cascade(wp(1.0, 0.0), rp(0.0, 0.0)).p5 == 1.0

    def test_formula_value(self):
        c = cascade(wp(0.1, 0.0), rp(0.01, 0.02))
        assert c.p5 == pytest.approx(0.1 * 0.98 + 0.9 * 0.01, rel=1e-15)
        assert c.p5 == pytest.approx(0.107, rel=1e-12)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            cascade(wp(1.2, 0.0), rp(0.0, 0.0))

    def test_cell_mismatch_rejected(self):
        with pytest.raises(ValueError):
            cascade(WriteChannelParams(1, 2, 0.0, 0.0), rp(0.0, 0.0))


class TestMutualInformation:
    def test_noiseless_bit(self):
        assert mutual_information(0.5, 0.0, 0.0) == pytest.approx(1.0, abs=1e-15)

    def test_useless_channel(self):
        assert mutual_information(0.5, 0.5, 0.5) == pytest.approx(0.0, abs=1e-15)

    def test_symmetric_channel_matches_bsc(self):
        val = mutual_information(0.5, 0.11, 0.11)
        assert val == pytest.approx(1.0 - float(binary_entropy(0.11)), rel=1e-12)
        assert val == pytest.approx(0.5, abs=2e-3)

    def test_degenerate_priors(self):
        assert mutual_information(0.0, 0.1, 0.2) == pytest.approx(0.0, abs=1e-12)
        assert mutual_information(1.0, 0.1, 0.2) == pytest.approx(0.0, abs=1e-12)


class TestCellCapacity:
    def test_perfect_channel_capacity(self, bundle):
        geometry, device, operating = bundle
        # zero crossovers arise in the no-noise limit of the fixed channel
        from crossbar_channel.cascade import capacity_from_crossovers
        val, q_star = capacity_from_crossovers(0.0, 0.0)
        assert float(val) == pytest.approx(1.0, abs=1e-12)
        assert float(q_star) == pytest.approx(0.5, abs=1e-6)

    def test_symmetric_fixed_channel_matches_closed_form(self):
        from crossbar_channel.cascade import capacity_from_crossovers
        for p in (0.01, 0.11, 0.3):
            val, q_star = capacity_from_crossovers(p, p)
            assert float(val) == pytest.approx(1.0 - float(binary_entropy(p)), abs=1e-9)
            assert float(q_star) == pytest.approx(0.5, abs=1e-6)

    def test_q_coupled_matches_brute_force_grid(self, bundle):
        geometry, device, operating = bundle
        for (i, j) in [(1, 1), (1024, 1024), (512, 77)]:
            line = i * geometry.r_b + j * geometry.r_w
            reset_fail, set_fail = marginal_switch_failures(line, device, operating)
            p3, p4 = read_error_probabilities(line, operating.R_th, device)
            a, b = float(reset_fail[0]), float(set_fail[0])

            qs = np.arange(0.0, 1.0 + 1e-5, 1e-5)
            p1 = (1.0 - qs) * a
            p2 = qs * b
            p5, p6 = cascade_probabilities(p1, p2, float(p3), float(p4))
            brute = float(np.max(mutual_information(qs, p5, p6)))

            res = cell_capacity(i, j, geometry, device, operating,
                                coupling="q-coupled")
            assert res.capacity == pytest.approx(brute, abs=1e-8)

    def test_fixed_channel_mode_agrees_with_own_brute_force(self, bundle):
        geometry, device, operating = bundle
        res = cell_capacity(1024, 1024, geometry, device, operating,
                            coupling="fixed-channel")
        from crossbar_channel.write_channel import write_channel_params
        w = write_channel_params(1024, 1024, geometry, device, operating)
        p3, p4 = read_error_probabilities(20480.0, operating.R_th, device)
        p5, p6 = cascade_probabilities(w.p1, w.p2, float(p3), float(p4))
        qs = np.arange(0.0, 1.0 + 1e-5, 1e-5)
        brute = float(np.max(mutual_information(qs, p5, p6)))
        assert res.capacity == pytest.approx(brute, abs=1e-8)

    def test_unknown_coupling_rejected(self, bundle):
        with pytest.raises(ValueError):
            cell_capacity(1, 1, *bundle, coupling="whatever")

    def test_q_coupled_capacity_ignores_configured_prior(self, bundle):
        # the optimization variable replaces the prior inside the objective,
        # so degenerate configured priors must not distort the result
        from crossbar_channel.config import DeviceModel
        geometry, _, operating = bundle
        ref = cell_capacity(512, 512, geometry, DeviceModel(q=0.5), operating)
        for q in (0.0, 1.0, 0.2):
            res = cell_capacity(512, 512, geometry, DeviceModel(q=q), operating)
            assert res.capacity == pytest.approx(ref.capacity, abs=1e-12)

    def test_capacity_decreases_toward_useless_channel(self):
        from crossbar_channel.cascade import capacity_from_crossovers
        rng = np.random.default_rng(4)
        for _ in range(10):
            p5, p6 = rng.uniform(0.0, 0.4, size=2)
            base = float(capacity_from_crossovers(p5, p6)[0])
            worse5 = float(capacity_from_crossovers(min(0.5, p5 + 0.05), p6)[0])
            worse6 = float(capacity_from_crossovers(p5, min(0.5, p6 + 0.05))[0])
            assert worse5 <= base + 1e-12
            assert worse6 <= base + 1e-12


class TestGridCapacity:
    def test_grid_matches_scalar_cells(self, bundle):
        _, device, operating = bundle
        geo = ArrayGeometry(m=6, n=9, r_w=35.0, r_b=20.0)
        grid = capacity_grid(geo, device, operating)
        assert grid.shape == (6, 9)
        for (i, j) in [(1, 1), (6, 9), (3, 5)]:
            res = cell_capacity(i, j, geo, device, operating)
            assert grid[i - 1, j - 1] == pytest.approx(res.capacity, abs=1e-9)

    def test_averaged_capacity_trivials(self):
        assert averaged_capacity(np.full((3, 3), 0.7)) == pytest.approx(0.7)
        assert averaged_capacity(np.array([[1.0, 1.0], [0.5, 0.5]])) == pytest.approx(0.75)

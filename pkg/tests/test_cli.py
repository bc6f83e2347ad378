import json

import pytest

from crossbar_channel import cli
from crossbar_channel.config import load_config, parse_config_text
from crossbar_channel.oracle import EmpiricalRate


def run(capsys, *argv):
    code = cli.dispatch(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestHeatmapCommand:
    def test_writes_csv_and_metadata(self, tmp_path, capsys):
        code, out, err = run(capsys, "heatmap", "--size", "4",
                             "--out", str(tmp_path))
        assert code == 0
        assert (tmp_path / "heatmap.csv").exists()
        meta = json.loads((tmp_path / "heatmap.csv.meta.json").read_text())
        assert meta["version"]
        assert meta["parameters"]["m"] == 4

    def test_r_line_override_wins_over_config(self, tmp_path, capsys, write_cfg):
        cfg = write_cfg("m = 3\nn = 3\nr_w = 50\nr_b = 50\n")
        code, out, err = run(capsys, "heatmap", "--config", str(cfg),
                             "--r-line", "0", "--out", str(tmp_path))
        assert code == 0
        rows = [line.split(",")[2:] for line in
                (tmp_path / "heatmap.csv").read_text().splitlines()[1:]]
        assert all(r == rows[0] for r in rows)   # r = 0 flattens the array


class TestSolveThresholdCommand:
    def test_prints_reference_values(self, capsys):
        code, out, err = run(capsys, "solve-threshold")
        assert code == 0
        machine = dict(line.split(" = ") for line in out.splitlines()
                       if line.startswith(("r_th0 ", "stmc_approx ",
                                           "stmc_exact ")))
        assert float(machine["r_th0"]) == pytest.approx(1e5, rel=1e-12)
        assert float(machine["stmc_approx"]) == pytest.approx(110250.0, rel=1e-12)
        assert float(machine["stmc_exact"]) == pytest.approx(110337.45, rel=1e-6)
        assert "iterations" in out
        assert sum(1 for line in out.splitlines() if line.startswith("trace[")) >= 5


class TestValidateCommand:
    def test_small_array_passes(self, tmp_path, capsys, write_cfg):
        cfg = write_cfg("m = 8\nn = 8\n")
        code, out, err = run(capsys, "validate", "--config", str(cfg),
                             "--samples", "60000", "--seed", "7")
        assert code == 0
        assert "all analytic parameters inside" in out
        assert out.count("yes") == 16

    def test_general_mode_cross_checks_nodal_estimators(self, capsys, write_cfg):
        cfg = write_cfg("m = 1\nn = 1\nr_sf = 1\nr_sh = 1e6\nr_su = 1e6\n")
        code, out, err = run(capsys, "validate", "--config", str(cfg),
                             "--mode", "general", "--samples", "2500",
                             "--seed", "3")
        assert code == 0, err
        assert "NO" not in out

    def test_ci_miss_returns_2_and_identifies_cell(self, capsys, monkeypatch,
                                                   write_cfg):
        miss = EmpiricalRate(0, 100, 0.0, 0.0, 1e-9, 0.997)

        def fake_estimate(cells, plan, bundle, mode="ideal"):
            from crossbar_channel.oracle import EmpiricalBac
            return {(i, j): EmpiricalBac(i, j, miss, miss, miss, miss)
                    for (i, j) in cells}

        monkeypatch.setattr(cli, "estimate_channel_grid", fake_estimate)
        cfg = write_cfg("m = 4\nn = 4\n")
        code, out, err = run(capsys, "validate", "--config", str(cfg),
                             "--samples", "100")
        assert code == 2
        assert "CI miss" in err and "(1,1)" in err


class TestShowConfig:
    def test_round_trips_through_loader(self, capsys, write_cfg):
        cfg = write_cfg("m = 12\nn = 34\nq = 0.25\nr_su = inf\n")
        code, out, err = run(capsys, "show-config", "--config", str(cfg))
        assert code == 0
        again = parse_config_text(out)
        assert again == load_config(cfg)

    def test_defaults_resolve_completely(self, capsys):
        code, out, err = run(capsys, "show-config")
        assert code == 0
        assert len([l for l in out.splitlines() if " = " in l]) == 24


class TestErrorPaths:
    def test_unknown_flag_rejected(self, capsys):
        code, out, err = run(capsys, "heatmap", "--frobnicate")
        assert code == 1
        assert "error" in err

    def test_unknown_command_rejected(self, capsys):
        code, out, err = run(capsys, "transmogrify")
        assert code == 1

    def test_unknown_scheme_exits_1(self, tmp_path, capsys):
        code, out, err = run(capsys, "thresholds", "--scheme", "naive,psychic",
                             "--out", str(tmp_path))
        assert code == 1
        assert "psychic" in err

    def test_bad_config_value_exits_1(self, capsys, write_cfg):
        cfg = write_cfg("sigma_L = 0\n")
        code, out, err = run(capsys, "show-config", "--config", str(cfg))
        assert code == 1
        assert "sigma_L" in err

    def test_missing_config_file_exits_1(self, capsys, tmp_path):
        code, out, err = run(capsys, "show-config", "--config",
                             str(tmp_path / "nope.cfg"))
        assert code == 1

    def test_general_mode_requires_finite_selectors(self, capsys):
        code, out, err = run(capsys, "heatmap", "--mode", "general", "--size", "2")
        assert code == 1
        assert "finite" in err

    def test_input_config_never_mutated(self, tmp_path, capsys, write_cfg):
        cfg = write_cfg("m = 4\nn = 4\nr_w = 20\n")
        before = cfg.read_bytes()
        run(capsys, "heatmap", "--config", str(cfg), "--out", str(tmp_path))
        assert cfg.read_bytes() == before


class TestCapacityAndAspectCommands:
    def test_capacity_sweep_runs(self, tmp_path, capsys):
        code, out, err = run(capsys, "capacity-sweep", "--sizes", "8,16",
                             "--r-lines", "10,40", "--out", str(tmp_path))
        assert code == 0
        lines = (tmp_path / "capacity_sweep.csv").read_text().splitlines()
        assert len(lines) == 5

    def test_aspect_ratio_rejects_bad_totals(self, tmp_path, capsys):
        code, out, err = run(capsys, "aspect-ratio", "--total-cells", "100",
                             "--ratios", "10x10,4x16", "--out", str(tmp_path))
        assert code == 1
        assert "cells" in err

    def test_thresholds_command(self, tmp_path, capsys):
        code, out, err = run(capsys, "thresholds", "--sizes", "32,64",
                             "--r-lines", "10", "--size", "32",
                             "--out", str(tmp_path))
        assert code == 0
        lines = (tmp_path / "threshold_cmp.csv").read_text().splitlines()
        assert lines[0] == "sweep_var,value,scheme,avg_read_ber"
        assert len(lines) == 1 + 3 * 4

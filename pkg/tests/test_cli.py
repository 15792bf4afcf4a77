"""Config grammar, serialization schemas, runner dispatch and CLI exit codes."""

import json
import os

import numpy as np
import pytest

from shotqsd import ConfigError, RngStream, SystemParams
from shotqsd.analysis import fidelity_curves
from shotqsd.cli import main
from shotqsd.config import (
    apply_overrides,
    parse_config,
    preset_config,
    serialize_config,
)
from shotqsd.io import emit_plotdata, format_number, write_csv
from shotqsd.runner import EXIT_CONFIG, EXIT_DIVERGENCE, EXIT_IO, run

MINIMAL = "mode = simulate\ngamma = 0.2\nJ = 15\nW = 200\nomega_T = 5\ng = 0.4\n"


class TestConfigParsing:
    def test_minimal_config_fills_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.mode == "simulate"
        assert cfg.J == 15.0 and cfg.W == 200.0
        assert cfg.dt == 1e-3  # default echoed
        assert cfg.n_trains == 32
        assert cfg.fidelity_convention == "eq3"
        assert cfg.T == 5.0

    def test_negative_rate_names_the_key(self):
        with pytest.raises(ConfigError) as err:
            parse_config("mode = simulate\nW = -1\n")
        assert any(p.startswith("W:") and ">= 0" in p for p in err.value.problems)

    def test_all_problems_collected(self):
        with pytest.raises(ConfigError) as err:
            parse_config("mode = simulate\nW = -1\nnope = 2\ndt = abc\n")
        text = "\n".join(err.value.problems)
        assert "W:" in text and "nope:" in text and "dt:" in text
        assert len(err.value.problems) == 3

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            parse_config(MINIMAL + "banana = 1\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError):
            parse_config(MINIMAL + "J = 3\n")

    def test_mode_required(self):
        with pytest.raises(ConfigError) as err:
            parse_config("J = 3\n")
        assert any("mode" in p for p in err.value.problems)

    def test_comments_and_blank_lines_ignored(self):
        cfg = parse_config("# header\n\nmode = simulate  # trailing\n")
        assert cfg.mode == "simulate"

    def test_round_trip_identity(self):
        for text in (
            MINIMAL,
            "mode = sweep\nJ_values = 0, 5, 10\nW_values = 100, 400\nn_traj = 7\n",
            "mode = markov-scan\ngamma_values = 0.2, 0.5, 5.0\nthreads = 3\n",
        ):
            cfg = parse_config(text)
            assert parse_config(serialize_config(cfg)) == cfg

    def test_dt_coarseness_checked(self):
        with pytest.raises(ConfigError) as err:
            parse_config("mode = simulate\ndt = 0.02\n")
        assert any(p.startswith("dt:") for p in err.value.problems)

    def test_overrides_apply_and_validate(self):
        cfg = parse_config(MINIMAL)
        new = apply_overrides(cfg, seed=7, out_dir="elsewhere", threads=2)
        assert new.master_seed == 7 and new.out_dir == "elsewhere" and new.threads == 2
        with pytest.raises(ConfigError):
            apply_overrides(cfg, threads=-1)

    def test_flux_qubit_preset(self):
        text = preset_config("flux-qubit")
        cfg = parse_config(text)
        assert cfg.omega == 1.0 and cfg.omega_T == 5.0
        # the comment block documents the physical mapping
        assert "1e9" in text and "T1" in text and "ns" in text


class TestWriters:
    def test_number_formatting_round_trips(self):
        x = 0.123456789012345678
        assert float(format_number(x)) == x
        assert format_number(True) == "1" and format_number(False) == "0"
        assert format_number(np.int64(7)) == "7"

    def test_fidelity_schema(self, tmp_path):
        sys = SystemParams()
        cs = fidelity_curves(
            sys, [(3.0, 40.0)], n_trains=2, dt=1e-3, horizon=2.0,
            stream=RngStream(1), out_stride=500,
        )
        p = emit_plotdata(cs.curves[0], str(tmp_path / "f.csv"), {"note": 1})
        lines = open(p).read().splitlines()
        assert lines[0].startswith("# provenance:")
        assert lines[1] == "t,F,stderr"
        p2 = emit_plotdata(cs.free, str(tmp_path / "free.csv"))
        assert open(p2).read().splitlines()[0] == "t,F"

    def test_fidelity_json_form(self, tmp_path):
        sys = SystemParams()
        cs = fidelity_curves(
            sys, [(3.0, 40.0)], n_trains=2, dt=1e-3, horizon=2.0,
            stream=RngStream(1), out_stride=500,
        )
        p = emit_plotdata(cs.curves[0], str(tmp_path / "f.json"), {"note": 1})
        doc = json.load(open(p))
        assert doc["provenance"] == {"note": 1}
        assert doc["F"][0] == 1.0 and len(doc["t"]) == len(doc["F"]) == len(doc["stderr"])
        assert doc["curve_provenance"]["J"] == 3.0

    def test_csv_atomicity_no_partial_file(self, tmp_path):
        target = tmp_path / "sub" / "x.csv"

        def bad_rows():
            yield (1.0,)
            raise RuntimeError("boom")

        with pytest.raises(RuntimeError):
            write_csv(str(target), ["a"], bad_rows())
        assert not target.exists()
        if (tmp_path / "sub").exists():
            leftovers = [f for f in os.listdir(tmp_path / "sub") if f.endswith(".tmp")]
            assert leftovers == []


def _write_cfg(tmp_path, text):
    path = tmp_path / "cfg.txt"
    path.write_text(text)
    return str(path)


def _read_data_files(out_dir):
    out = {}
    for name in sorted(os.listdir(out_dir)):
        if name == "manifest.json":
            continue
        with open(os.path.join(out_dir, name), "rb") as fh:
            out[name] = fh.read()
    return out


class TestRunnerModes:
    def test_simulate_reruns_byte_identical(self, tmp_path, monkeypatch):
        # identical config + seed, run from two working directories
        text = (
            "mode = simulate\nhorizon_T = 2\nn_trains = 4\nout_stride = 200\n"
            "master_seed = 77\nthreads = 2\nout_dir = out\n"
        )
        cfg = parse_config(text)
        (tmp_path / "a").mkdir()
        (tmp_path / "b").mkdir()
        monkeypatch.chdir(tmp_path / "a")
        run(cfg)
        monkeypatch.chdir(tmp_path / "b")
        run(cfg)
        a = _read_data_files(tmp_path / "a" / "out")
        b = _read_data_files(tmp_path / "b" / "out")
        assert a.keys() == b.keys() and len(a) >= 2
        for name in a:
            assert a[name] == b[name], name
        # manifests agree on everything except the wall clock
        ma = json.load(open(tmp_path / "a" / "out" / "manifest.json"))
        mb = json.load(open(tmp_path / "b" / "out" / "manifest.json"))
        ma["wall_clock"] = mb["wall_clock"] = None
        assert ma == mb

    def test_sweep_emits_one_file_per_probe(self, tmp_path):
        cfg = parse_config(
            "mode = sweep\nJ_values = 0, 10\nW_values = 200, 1000\n"
            "probe_times_T = 1, 2\nn_traj = 3\nout_stride = 100\n"
            f"out_dir = {tmp_path}\n"
        )
        files = run(cfg)
        names = {os.path.basename(p) for p in files}
        assert {"sweep_t1T.csv", "sweep_t2T.csv", "manifest.json"} <= names
        header = open(tmp_path / "sweep_t1T.csv").read().splitlines()[1]
        assert header == "J,W,t_probe,F,stderr,above_0.99,n_traj"
        # W column echoes figure units (1/T)
        first = open(tmp_path / "sweep_t1T.csv").read().splitlines()[2].split(",")
        assert float(first[1]) == 200.0

    def test_markov_scan_schema(self, tmp_path):
        cfg = parse_config(
            "mode = markov-scan\ngamma_values = 0.2, 2.5\nn_traj = 3\n"
            f"t_probe_T = 1\nout_dir = {tmp_path}\n"
        )
        run(cfg)
        lines = open(tmp_path / "markov_scan.csv").read().splitlines()
        assert lines[1] == "gamma,F_noise,F_free,gain"
        assert len(lines) == 4

    def test_washout_outputs(self, tmp_path):
        cfg = parse_config(
            "mode = washout\nJ_values = 3, 15\nhorizon_T = 2\nout_stride = 100\n"
            f"out_dir = {tmp_path}\n"
        )
        run(cfg)
        lines = open(tmp_path / "washout_J3.csv").read().splitlines()
        assert lines[1] == "t,re_N,im_N,re_h,im_h,re_I,im_I"
        summary = json.load(open(tmp_path / "washout_summary.json"))
        assert "J=3" in summary and "J=15" in summary

    def test_noise_test_report(self, tmp_path):
        cfg = parse_config(
            "mode = noise-test\nJ = 3\nW = 200\nnt_n_trains = 400\nnt_horizon_T = 10\n"
            "nt_ou_n_paths = 2000\nnt_ou_n_steps = 1500\nnt_ou_max_lag = 10\nnt_ou_n_lags = 11\n"
            f"out_dir = {tmp_path}\n"
        )
        run(cfg)
        doc = json.load(open(tmp_path / "noise_report.json"))
        assert doc["shot_checks"]["rate_within_2pct"] is True
        assert doc["shot_checks"]["amp_mean_within_2pct"] is True
        assert doc["shot_checks"]["c_mean_within_3_sigma"] is True
        assert doc["ou_checks"]["autocorr_rel_l2_below_5pct"] is True
        assert doc["all_passed"] is True

    def test_crosscheck_reports_ratio(self, tmp_path):
        cfg = parse_config(
            f"mode = crosscheck\nJ = 0\nhorizon_T = 4\nout_stride = 200\nout_dir = {tmp_path}\n"
        )
        run(cfg)
        doc = json.load(open(tmp_path / "crosscheck.json"))
        assert doc["max_ratio_deviation"] < 1e-4
        assert doc["default_convention"] == "eq3"

    def test_manifest_checksums_match_files(self, tmp_path):
        from shotqsd.io import sha256_of_file

        cfg = parse_config(
            f"mode = simulate\nhorizon_T = 1\nn_trains = 2\nout_stride = 100\nout_dir = {tmp_path}\n"
        )
        run(cfg)
        manifest = json.load(open(tmp_path / "manifest.json"))
        for entry in manifest["files"]:
            assert sha256_of_file(str(tmp_path / entry["path"])) == entry["sha256"]


class TestCliExitCodes:
    def test_ok_run_and_stdout_lists_files(self, tmp_path, capsys):
        cfg = _write_cfg(
            tmp_path, "mode = simulate\nhorizon_T = 1\nn_trains = 2\nout_stride = 100\n"
        )
        code = main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")])
        assert code == 0
        assert "manifest.json" in capsys.readouterr().out

    def test_validation_failure_exits_2(self, tmp_path, capsys):
        cfg = _write_cfg(tmp_path, "mode = simulate\nW = -1\n")
        assert main(["simulate", "--config", cfg]) == EXIT_CONFIG
        assert "W" in capsys.readouterr().err

    def test_mode_mismatch_exits_2(self, tmp_path, capsys):
        cfg = _write_cfg(tmp_path, "mode = sweep\n")
        assert main(["simulate", "--config", cfg]) == EXIT_CONFIG

    def test_missing_config_exits_2(self, tmp_path, capsys):
        assert main(["simulate", "--config", str(tmp_path / "absent.txt")]) == EXIT_CONFIG

    def test_divergence_budget_exits_3(self, tmp_path, capsys, monkeypatch):
        from shotqsd.errors import DivergenceBudgetError
        import shotqsd.cli as cli_mod

        cfg = _write_cfg(tmp_path, "mode = simulate\nhorizon_T = 1\nn_trains = 2\n")

        def explode(cfg):
            raise DivergenceBudgetError(5, 10)

        monkeypatch.setattr(cli_mod, "run", explode)
        assert main(["simulate", "--config", cfg]) == EXIT_DIVERGENCE

    def test_io_failure_exits_4(self, tmp_path, capsys):
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        cfg = _write_cfg(
            tmp_path, "mode = simulate\nhorizon_T = 1\nn_trains = 2\nout_stride = 100\n"
        )
        code = main(["simulate", "--config", cfg, "--out", str(blocker / "sub")])
        assert code == EXIT_IO

    def test_preset_to_stdout_and_file(self, tmp_path, capsys):
        assert main(["preset", "flux-qubit"]) == 0
        assert "omega_T = 5.0" in capsys.readouterr().out
        target = tmp_path / "preset.txt"
        assert main(["preset", "flux-qubit", "--out", str(target)]) == 0
        parse_config(target.read_text())

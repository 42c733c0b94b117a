import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from ousim.stats import synthetic_i8_matrix
from ousim.tensorio import load_tensor, save_tensor


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "ousim.cli", *map(str, args)],
        capture_output=True,
        text=True,
    )


@pytest.fixture
def weights_f32(tmp_path, rng):
    path = tmp_path / "w.tensor"
    save_tensor(path, rng.normal(size=(20, 12)).astype(np.float32))
    return path


@pytest.fixture
def weights_i8(tmp_path):
    path = tmp_path / "wq.tensor"
    save_tensor(path, synthetic_i8_matrix(20, 12, 0.5, 77))
    return path


class TestHelp:
    def test_top_level(self):
        r = run_cli("--help")
        assert r.returncode == 0
        for sub in ("quantize", "analyze", "reorder", "simulate", "report", "sweep"):
            assert sub in r.stdout

    def test_subcommand(self):
        r = run_cli("reorder", "--help")
        assert r.returncode == 0
        assert "--ou-height" in r.stdout


class TestExitCodes:
    def test_unknown_command(self):
        assert run_cli("frobnicate").returncode == 2

    def test_bad_flag_value(self, weights_i8, tmp_path):
        r = run_cli("reorder", weights_i8, tmp_path / "p.ouplan", "--ou-height", "0")
        assert r.returncode == 2

    def test_missing_input(self, tmp_path):
        r = run_cli("reorder", tmp_path / "nope.tensor", tmp_path / "p.ouplan")
        assert r.returncode == 2  # argument validation

    def test_corrupt_tensor_is_config_error(self, tmp_path):
        bad = tmp_path / "bad.tensor"
        bad.write_bytes(b"OUFT" + b"\x00" * 10)
        r = run_cli("reorder", bad, tmp_path / "p.ouplan")
        assert r.returncode == 2

    def test_unwritable_output(self, weights_i8):
        r = run_cli("reorder", weights_i8, "/proc/denied/p.ouplan")
        assert r.returncode == 3


class TestQuantize:
    def test_basic(self, weights_f32, tmp_path):
        out = tmp_path / "q.tensor"
        r = run_cli("quantize", weights_f32, out, "--sparsity", "0.5")
        assert r.returncode == 0, r.stderr
        arr = load_tensor(out)
        assert arr.dtype == np.int8
        assert np.count_nonzero(arr == 0) >= 0.5 * arr.size
        meta = json.loads((tmp_path / "q.tensor.meta.json").read_text())
        assert meta["shape"] == [20, 12]
        assert meta["scale"] > 0

    def test_rejects_int8_input(self, weights_i8, tmp_path):
        r = run_cli("quantize", weights_i8, tmp_path / "q2.tensor")
        assert r.returncode == 2

    def test_bad_sparsity(self, weights_f32, tmp_path):
        r = run_cli("quantize", weights_f32, tmp_path / "q.tensor", "--sparsity", "1.5")
        assert r.returncode == 2

    def test_deterministic(self, weights_f32, tmp_path):
        a, b = tmp_path / "a.tensor", tmp_path / "b.tensor"
        run_cli("quantize", weights_f32, a, "--sparsity", "0.3")
        run_cli("quantize", weights_f32, b, "--sparsity", "0.3")
        assert a.read_bytes() == b.read_bytes()


class TestAnalyze:
    def test_requires_an_output(self):
        assert run_cli("analyze").returncode == 2

    def test_grid(self, tmp_path):
        out = tmp_path / "grid.csv"
        r = run_cli("analyze", "--grid-out", out, "--trials", "2000")
        assert r.returncode == 0, r.stderr
        rows = list(csv.DictReader(out.open()))
        assert {r_["m"] for r_ in rows} == {"8", "14", "20"}
        for row in rows:
            assert abs(float(row["closed_form"]) - float(row["monte_carlo"])) < 0.05

    def test_ratio(self, tmp_path):
        out = tmp_path / "ratio.csv"
        r = run_cli("analyze", "--ratio-out", out)
        assert r.returncode == 0, r.stderr
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 5
        for row in rows:
            assert abs(float(row["ideal_ratio"]) - float(row["measured_ratio"])) < 0.02


class TestPipeline:
    def test_full_chain_matches_dense_oracle(self, tmp_path, rng):
        vals = synthetic_i8_matrix(40, 24, 0.6, 5)
        w = tmp_path / "w.tensor"
        save_tensor(w, vals)
        plan = tmp_path / "w.ouplan"
        r = run_cli("reorder", w, plan, "--crossbar", 32, 32, "--ou-height", 4, "--ou-width", 4)
        assert r.returncode == 0, r.stderr
        summary = json.loads((tmp_path / "w.ouplan.json").read_text())
        assert summary["mode"] == "reordered"

        acts = rng.integers(-128, 128, size=(3, 40)).astype(np.int8)
        a = tmp_path / "acts.tensor"
        save_tensor(a, acts)
        out = tmp_path / "out.tensor"
        r = run_cli("simulate", plan, a, out, "--weights", w)
        assert r.returncode == 0, r.stderr
        got = load_tensor(out)
        expect = acts.astype(np.int64) @ vals.astype(np.int64)
        assert np.array_equal(got.astype(np.int64), expect)

    def test_simulate_trace_out(self, tmp_path):
        vals = synthetic_i8_matrix(8, 8, 0.5, 9)
        w = tmp_path / "w.tensor"
        save_tensor(w, vals)
        plan = tmp_path / "w.ouplan"
        run_cli("reorder", w, plan, "--crossbar", 32, 32, "--ou-height", 4, "--ou-width", 4)
        a = tmp_path / "acts.tensor"
        save_tensor(a, np.ones((1, 8), dtype=np.int8))
        out = tmp_path / "out.tensor"
        trace = tmp_path / "trace.jsonl"
        r = run_cli("simulate", plan, a, out, "--trace-out", trace)
        assert r.returncode == 0, r.stderr
        lines = trace.read_text().strip().splitlines()
        assert lines
        rec = json.loads(lines[0])
        assert {"plane", "band", "tile", "input_bit"} <= set(rec)

    def test_simulate_wrong_weights(self, tmp_path):
        vals = synthetic_i8_matrix(8, 8, 0.5, 9)
        w = tmp_path / "w.tensor"
        save_tensor(w, vals)
        plan = tmp_path / "w.ouplan"
        run_cli("reorder", w, plan, "--crossbar", 32, 32, "--ou-height", 4, "--ou-width", 4)
        other = tmp_path / "other.tensor"
        save_tensor(other, synthetic_i8_matrix(8, 8, 0.5, 10))
        a = tmp_path / "acts.tensor"
        save_tensor(a, np.ones((1, 8), dtype=np.int8))
        r = run_cli("simulate", plan, a, tmp_path / "out.tensor", "--weights", other)
        assert r.returncode == 2
        assert "checksum" in r.stderr

    def test_reorder_trace_log(self, tmp_path):
        vals = synthetic_i8_matrix(16, 8, 0.5, 4)
        w = tmp_path / "w.tensor"
        save_tensor(w, vals)
        plan = tmp_path / "w.ouplan"
        log = tmp_path / "reorder.log"
        r = run_cli(
            "reorder", w, plan, "--crossbar", 32, 32, "--ou-height", 4,
            "--ou-width", 4, "--trace", log,
        )
        assert r.returncode == 0, r.stderr
        assert "step" in log.read_text()

    def test_reorder_deterministic(self, tmp_path):
        vals = synthetic_i8_matrix(16, 8, 0.5, 4)
        w = tmp_path / "w.tensor"
        save_tensor(w, vals)
        p1, p2 = tmp_path / "a.ouplan", tmp_path / "b.ouplan"
        for p in (p1, p2):
            run_cli("reorder", w, p, "--crossbar", 32, 32, "--ou-height", 4, "--ou-width", 4)
        assert p1.read_bytes() == p2.read_bytes()


class TestReportAndSweep:
    def test_report_json(self, weights_i8, tmp_path):
        out = tmp_path / "rep.json"
        r = run_cli(
            "report", weights_i8, "--json-out", out,
            "--crossbar", 32, 32, "--ou-height", 4, "--ou-width", 4,
        )
        assert r.returncode == 0, r.stderr
        rep = json.loads(out.read_text())
        assert rep["reordered"]["ccq"] <= rep["baseline"]["ccq"]
        assert rep["improvement"] >= 0.0

    def test_report_power_override(self, weights_i8, tmp_path):
        pt = tmp_path / "power.cfg"
        pt.write_text("adc_mw=1.0\n")
        r = run_cli(
            "report", weights_i8, "--power-table", pt,
            "--crossbar", 32, 32, "--ou-height", 4, "--ou-width", 4,
        )
        assert r.returncode == 0, r.stderr

    def test_sweep_ou_height(self, weights_i8, tmp_path):
        out = tmp_path / "sweep.csv"
        r = run_cli(
            "sweep", "--mode", "ou-height", "--tensor", weights_i8,
            "--heights", "2,4", "--csv-out", out,
            "--crossbar", 32, 32, "--ou-height", 4, "--ou-width", 4,
        )
        assert r.returncode == 0, r.stderr
        rows = list(csv.DictReader(out.open()))
        assert [row["ou_height"] for row in rows] == ["2", "4"]

    def test_sweep_sparsity(self, tmp_path):
        out = tmp_path / "sp.csv"
        r = run_cli(
            "sweep", "--mode", "sparsity", "--sparsities", "0.3,0.6",
            "--shape", 32, 32, "--csv-out", out,
            "--crossbar", 32, 32, "--ou-height", 4, "--ou-width", 4,
        )
        assert r.returncode == 0, r.stderr
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 2

    def test_sweep_requires_tensor(self, tmp_path):
        r = run_cli("sweep", "--mode", "ou-height", "--csv-out", tmp_path / "x.csv")
        assert r.returncode == 2


class TestConfigFile:
    def test_config_sets_geometry(self, weights_i8, tmp_path):
        cfg = tmp_path / "cfg"
        cfg.write_text("crossbar_height=32\ncrossbar_width=32\nou_height=4\nou_width=4\n")
        plan = tmp_path / "p.ouplan"
        r = run_cli("--config", cfg, "reorder", weights_i8, plan)
        assert r.returncode == 0, r.stderr
        summary = json.loads((tmp_path / "p.ouplan.json").read_text())
        assert summary["geometry"]["ou"] == [4, 4]

    def test_bad_config_line(self, weights_i8, tmp_path):
        cfg = tmp_path / "cfg"
        cfg.write_text("this is not key value\n")
        r = run_cli("--config", cfg, "report", weights_i8)
        assert r.returncode == 2

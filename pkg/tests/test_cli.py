import csv
import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from tvseg.cli import RunRecord, main, signal_digest
from tvseg.levelset import jump_set
from tvseg.signal import GeneratorSpec, GridSignal, from_csv, from_json, generate, normalize_to_unit, to_csv


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


class TestSegment:
    def test_generated_step(self, capsys):
        d = run_json(capsys, "segment", "--generate", "pwc:5:seed=7", "--n", "256", "--lambda", "8", "--no-meta")
        f = normalize_to_unit(generate(GeneratorSpec(seed=7, segments=5), 256))
        u = d["result"]["u"]
        assert u["first_value"] in (0, 1)
        assert set(u["jumps"]) <= set(jump_set(f))
        assert d["signal_digest"] == signal_digest(f)
        assert d["params"]["n"] == 256 and d["params"]["method"] == "exact"
        assert d["duration_ms"] == 0.0

    def test_schema(self, capsys):
        d = run_json(capsys, "segment", "--generate", "pwc:3:seed=1", "--n", "30", "--lambda", "20", "--certify")
        assert list(d) == ["signal_digest", "params", "result", "certificate", "duration_ms"]
        assert len(d["signal_digest"]) == 64
        assert {"u", "c1", "c2", "energy", "level", "method"} <= set(d["result"])
        assert d["certificate"]["feasible"] is True
        rec = RunRecord.from_dict(d)
        assert rec.to_dict() == d

    def test_flat_input(self, capsys, tmp_path):
        path = tmp_path / "flat.csv"
        path.write_text("0.3\n0.3\n0.3\n")
        d = run_json(capsys, "segment", "--input", str(path), "--lambda", "3")
        assert d["result"]["u"]["jumps"] == [] and d["result"]["energy"] == 0.0

    def test_brute_over_limit(self, capsys, tmp_path):
        path = tmp_path / "f.csv"
        path.write_text(to_csv(generate(GeneratorSpec(seed=1, segments=3), 20)))
        code, out, err = run(capsys, "segment", "--input", str(path), "--lambda", "8", "--method", "brute")
        assert code == 3 and "oracle limit exceeded" in err and out == ""

    @pytest.mark.parametrize("method", ["exact", "pwc", "dp", "gd", "brute"])
    def test_methods(self, capsys, method):
        d = run_json(capsys, "segment", "--generate", "pwc:2:seed=3", "--n", "12", "--lambda", "10",
                     "--method", method, "--no-meta")
        assert d["result"]["energy"] == pytest.approx(1.0, abs=1e-9) or d["result"]["energy"] < 1.0
        assert d["params"]["method"] == method

    def test_deterministic(self, capsys):
        argv = ["segment", "--generate", "weierstrass:a=0.5:b=3:terms=8", "--n", "300", "--lambda", "40", "--no-meta"]
        _, a, _ = run(capsys, *argv)
        _, b, _ = run(capsys, *argv, "--threads", "3")
        assert a == b

    def test_no_normalize_rejects(self, capsys, tmp_path):
        path = tmp_path / "big.csv"
        path.write_text("1\n5\n")
        code, _, err = run(capsys, "segment", "--input", str(path), "--lambda", "1", "--no-normalize")
        assert code == 2 and "outside [0, 1]" in err

    def test_no_normalize_keeps_values(self, capsys, tmp_path):
        path = tmp_path / "u.csv"
        path.write_text("0.2\n0.4\n")
        d = run_json(capsys, "segment", "--input", str(path), "--lambda", "1", "--no-normalize")
        assert d["signal_digest"] == signal_digest(GridSignal([0.2, 0.4]))

    def test_plot(self, capsys, tmp_path):
        plot = tmp_path / "plot.csv"
        run_json(capsys, "segment", "--generate", "pwc:2:seed=3", "--n", "10", "--lambda", "30", "--plot", str(plot))
        rows = list(csv.DictReader(plot.open()))
        assert len(rows) == 20
        assert {"x", "f", "u", "c1", "c2"} <= set(rows[0])
        assert float(rows[0]["x"]) == 0.0 and float(rows[-1]["x"]) == 1.0

    def test_out_file(self, capsys, tmp_path):
        out = tmp_path / "r.json"
        code, stdout, _ = run(capsys, "segment", "--generate", "pwc:2", "--n", "8", "--lambda", "5", "--out", str(out))
        assert code == 0 and stdout == ""
        assert "result" in json.loads(out.read_text())

    @pytest.mark.parametrize("argv", [
        ["segment", "--lambda", "1"],
        ["segment", "--generate", "pwc:2", "--input", "x.csv", "--lambda", "1"],
        ["segment", "--generate", "bogus", "--lambda", "1"],
        ["segment", "--generate", "pwc:2", "--lambda", "-1"],
        ["segment", "--generate", "pwc:2", "--lambda", "abc"],
        ["segment", "--generate", "pwc:2"],
        ["segment", "--input", "/nonexistent.csv", "--lambda", "1"],
        ["segment", "--generate", "pwc:2", "--lambda", "1", "--method", "magic"],
        ["nosuchcommand"],
    ])
    def test_usage_errors(self, capsys, argv):
        code, _, err = run(capsys, *argv)
        assert code == 2
        assert err.strip()

    def test_parse_error_is_one_line(self, capsys, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0.1\nabc\n")
        code, _, err = run(capsys, "segment", "--input", str(path), "--lambda", "1")
        assert code == 2 and err.strip() == "tvseg: parse error at line 2"


class TestCompare:
    def test_weierstrass_ordering(self, capsys):
        d = run_json(capsys, "compare", "--generate", "weierstrass:a=0.5:b=3:terms=8", "--n", "1024",
                     "--lambda", "50", "--no-meta")
        assert d["gap"] >= 0
        assert d["exact"]["result"]["energy"] <= d["gd"]["result"]["energy"]

    def test_step_agrees(self, capsys):
        d = run_json(capsys, "compare", "--generate", "pwc:2:seed=1", "--n", "256", "--lambda", "10", "--no-meta")
        assert d["gap"] <= 1e-6

    def test_constant(self, capsys, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("0.5\n" * 6)
        d = run_json(capsys, "compare", "--input", str(path), "--lambda", "10")
        assert d["exact"]["result"]["energy"] == 0 and d["gd"]["result"]["energy"] == 0


class TestCertify:
    def test_round_trip(self, capsys, tmp_path):
        rec = tmp_path / "r.json"
        run(capsys, "segment", "--generate", "pwc:4:seed=2", "--n", "100", "--lambda", "30", "--out", str(rec))
        d = run_json(capsys, "certify", "--record", str(rec), "--generate", "pwc:4:seed=2", "--n", "100")
        assert d["feasible"] is True
        assert d["signal_digest"] == json.loads(rec.read_text())["signal_digest"]

    def test_digest_mismatch(self, capsys, tmp_path):
        rec = tmp_path / "r.json"
        run(capsys, "segment", "--generate", "pwc:4:seed=2", "--n", "100", "--lambda", "30", "--out", str(rec))
        code, _, err = run(capsys, "certify", "--record", str(rec), "--generate", "pwc:4:seed=3", "--n", "100")
        assert code == 2 and "digest" in err

    @pytest.mark.parametrize("content", ["not json", "{}", '{"signal_digest": "x", "params": {}, "result": {}}'])
    def test_malformed_record(self, capsys, tmp_path, content):
        rec = tmp_path / "r.json"
        rec.write_text(content)
        code, _, _ = run(capsys, "certify", "--record", str(rec), "--generate", "pwc:2", "--n", "8")
        assert code == 2


class TestGenerate:
    def test_weierstrass_file(self, capsys, tmp_path):
        out = tmp_path / "w.csv"
        code, _, _ = run(capsys, "generate", "weierstrass:a=0.5:b=3:terms=8", "--n", "1024", "--out", str(out))
        assert code == 0
        f = from_csv(out.read_text())
        assert f.n == 1024 and f.is_unit()

    def test_json_and_stdout(self, capsys, tmp_path):
        out = tmp_path / "s.json"
        run(capsys, "generate", "pwc:3:seed=4", "--n", "16", "--out", str(out))
        f = from_json(out.read_text())
        _, stdout, _ = run(capsys, "generate", "pwc:3:seed=4", "--n", "16")
        assert from_csv(stdout) == f

    def test_invalid(self, capsys):
        code, _, err = run(capsys, "generate", "weierstrass:a=1.5")
        assert code == 2 and "invalid generator spec" in err


class TestCounterexample:
    def test_tie(self, capsys):
        d = run_json(capsys, "counterexample", "--lambda", "16/3")
        assert d["full_square_energy"] == 4 and d["inner_square_energy"] == 4
        assert d["full_square_ties_inner"] is True

    def test_values(self, capsys):
        d = run_json(capsys, "counterexample", "--lambda", "10", "--delta", "0.05")
        assert d["rounded_square_energy"] == pytest.approx(3.9356041086766957, rel=1e-14)
        assert d["improvement_holds"] is True

    @pytest.mark.parametrize("argv", [["--lambda", "x"], ["--lambda", "1", "--delta", "0.7"], ["--lambda", "0"]])
    def test_invalid(self, capsys, argv):
        code, _, _ = run(capsys, "counterexample", *argv)
        assert code == 2


def test_digest_is_sha256_of_le_doubles():
    f = GridSignal([0.25, 0.5])
    assert signal_digest(f) == hashlib.sha256(np.array([0.25, 0.5], dtype="<f8").tobytes()).hexdigest()


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "tvseg", "counterexample", "--lambda", "1"],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["full_square_energy"] == 0.75

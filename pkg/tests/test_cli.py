import io
import json
import subprocess
import sys

import pytest

from polyheyt.cli import EXIT_EXHAUSTED, EXIT_NEGATIVE, EXIT_OK, EXIT_USAGE, run

FRAME = {"worlds": ["a", "b"], "order": [["a", "b"]], "domains": {"a": [0], "b": [0, 1]}, "dim": 2,
         "valuation": {"P": {"a": [], "b": [[1]]}}}


def call(*argv):
    buf = io.StringIO()
    code = run(list(argv), stdout=buf)
    lines = buf.getvalue().splitlines()
    return code, [json.loads(x) for x in lines]


@pytest.fixture
def frame_file(tmp_path):
    p = tmp_path / "frame.json"
    p.write_text(json.dumps(FRAME))
    return str(p)


class TestCheck:
    def test_proved(self):
        code, [out] = call("check", "(diag 0 1) (diag 1 2) |- (diag 0 2)")
        assert code == EXIT_OK and out["status"] == "proved" and "trace" in out

    def test_refuted(self):
        code, [out] = call("check", "|- (or (atom P) (impl (atom P) bot))")
        assert code == EXIT_NEGATIVE and "countermodel" in out

    def test_exhausted(self):
        # valid, but needs two quantifier steps
        code, [out] = call("check", "--depth", "1", "(ucyl 0 (atom P)) |- (cyl 0 (atom P))")
        assert code == EXIT_EXHAUSTED and out["status"] == "depth_exhausted"
        assert "trace" not in out and "countermodel" not in out

    def test_file_target(self, tmp_path):
        p = tmp_path / "seq.txt"
        p.write_text("(atom P) |- (atom P)")
        code, [out] = call("check", str(p))
        assert code == EXIT_OK and out["sequent"]["gamma"] == ["(atom P)"]

    def test_parse_error(self):
        code, [out] = call("check", "(and (atom P)")
        assert code == EXIT_USAGE and out["error"] == "ParseError"


class TestUsage:
    def test_unknown_subcommand(self):
        code, [out] = call("frobnicate")
        assert code == EXIT_USAGE

    def test_missing_frame(self, tmp_path):
        code, _ = call("model", "--frame", str(tmp_path / "nope.json"), "--formula", "(atom P)")
        assert code == EXIT_USAGE

    def test_empty_frame(self, tmp_path):
        p = tmp_path / "empty.json"
        p.write_text(json.dumps({"worlds": [], "order": [], "domains": {}, "dim": 1}))
        code, [out] = call("model", "--frame", str(p), "--formula", "top")
        assert code == EXIT_USAGE and out["error"] == "ValidationError"


class TestModel:
    def test_truth_table(self, frame_file):
        code, [out] = call("model", "--frame", frame_file, "--formula", "(cyl 0 (atom P))")
        assert code == EXIT_OK
        # [DERIVED] P holds only of element 1 at b, so c_0 P holds everywhere at b and nowhere at a
        assert all(not row["value"] for row in out["truth"]["a"])
        assert all(row["value"] for row in out["truth"]["b"])
        assert out["valid"] is False


class TestSaturate:
    def test_jsonl(self, tmp_path):
        p = tmp_path / "problem.json"
        p.write_text(json.dumps({"gamma": ["(atom P)"], "theta": [], "lambda": ["(atom Q)"]}))
        code, lines = call("saturate", str(p), "--budget", "6")
        assert code == EXIT_OK
        assert [x["step"] for x in lines[:-1]] == [1, 2, 3, 4, 5, 6]
        assert lines[-1]["result"] == "saturated" and lines[-1]["final"]["checks"]["chain_inclusion"]

    def test_separable(self, tmp_path):
        p = tmp_path / "problem.json"
        p.write_text(json.dumps({"gamma": ["(atom P)"], "theta": [], "lambda": ["(atom P)"]}))
        code, lines = call("saturate", str(p), "--budget", "3")
        assert code == EXIT_NEGATIVE


class TestOthers:
    def test_interpolate(self):
        code, [out] = call("interpolate", "(and (atom A) (atom B))", "(or (atom A) (atom C))")
        assert code == EXIT_OK and out["interpolant"] == "(atom A)" and out["verified"]

    def test_interpolate_precondition(self):
        code, [out] = call("interpolate", "(atom A)", "(atom B)")
        assert code == EXIT_NEGATIVE

    @pytest.mark.parametrize("check", ["embed", "roundtrip", "product"])
    def test_neat(self, frame_file, check):
        code, [out] = call("neat", "--frame", frame_file, "--alpha", "0", "--check", check)
        assert code == EXIT_OK and out["ok"]

    def test_axioms(self):
        code, [out] = call("axioms", "--frames", "5", "--instances", "3")
        assert code == EXIT_OK and out["ok"]


class TestConfig:
    def test_json_defaults(self, tmp_path, monkeypatch):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"depth": 1}))
        monkeypatch.setenv("POLYHEYT_CONFIG", str(cfg))
        code, _ = call("check", "(ucyl 0 (atom P)) |- (cyl 0 (atom P))")
        assert code == EXIT_EXHAUSTED

    def test_toml_defaults(self, tmp_path, monkeypatch):
        cfg = tmp_path / "cfg.toml"
        cfg.write_text("pretty = true\n")
        monkeypatch.setenv("POLYHEYT_CONFIG", str(cfg))
        buf = io.StringIO()
        assert run(["check", "(atom P) |- (atom P)"], stdout=buf) == EXIT_OK
        assert "\n  " in buf.getvalue()

    def test_unknown_key(self, tmp_path, monkeypatch):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"colour": "blue"}))
        monkeypatch.setenv("POLYHEYT_CONFIG", str(cfg))
        code, [out] = call("axioms", "--frames", "1")
        assert code == EXIT_USAGE and "colour" in out["message"]

    def test_flag_beats_config(self, tmp_path, monkeypatch):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"depth": 1}))
        monkeypatch.setenv("POLYHEYT_CONFIG", str(cfg))
        code, [out] = call("check", "--depth", "2", "(ucyl 0 (atom P)) |- (cyl 0 (atom P))")
        assert code == EXIT_OK and out["depth_used"] == 2


def test_entry_point_byte_identical():
    cmd = [sys.executable, "-m", "polyheyt.cli", "interpolate", "(atom A)", "(or (atom A) (atom B))"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and json.loads(a)["interpolant"] == "(atom A)"

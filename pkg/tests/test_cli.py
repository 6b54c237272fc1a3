"""End-to-end command-line behavior, exercised through main(argv).

Exit codes are part of the public contract: 0 success, 1 input error,
2 infeasible design, 3 inclusion violated in simulation.
"""

import json

import numpy as np
import pytest

import obsynth.cli as cli
from obsynth import Trace
from obsynth.cli import main


def _run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def _case(corpus_dir, name: str) -> str:
    return str(corpus_dir / f"{name}.json")


# ---------------------------------------------------------------------------
# design


def test_design_reports_the_known_gain(capsys, corpus_dir):
    code, out, _ = _run(capsys, "design", _case(corpus_dir, "case1"))
    assert code == 0
    doc = json.loads(out)
    assert doc["status"] == "optimal"
    assert np.allclose(doc["L"], [[1.0], [2.0]], atol=1e-6)
    assert doc["gamma"] <= 1e-5
    assert doc["certification"]["passed"] is True


def test_design_out_flag_duplicates_stdout(capsys, corpus_dir, tmp_path):
    out_path = tmp_path / "design.json"
    code, out, _ = _run(
        capsys, "design", _case(corpus_dir, "case1"), "--out", str(out_path)
    )
    assert code == 0
    assert out_path.read_text() == out


def test_design_infeasible_exits_two(capsys, corpus_dir):
    code, out, _ = _run(capsys, "design", _case(corpus_dir, "case3"))
    assert code == 2
    doc = json.loads(out)
    assert doc["status"] == "infeasible"
    assert "E - L F" in doc["diagnostic"]
    assert "certification" not in doc


def test_missing_input_exits_one(capsys, tmp_path):
    code, _, err = _run(capsys, "design", str(tmp_path / "absent.json"))
    assert code == 1
    assert "error:" in err


def test_malformed_problem_exits_one(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({
        "schema_version": "1", "class": "continuous",
        "A": [[-1.0, 0.0]], "E": [[1.0]], "C": [[1.0]], "F": [[0.0]],
    }))
    code, _, err = _run(capsys, "design", str(path))
    assert code == 1
    assert "square" in err


# ---------------------------------------------------------------------------
# gain


def test_gain_at_explicit_matrix(capsys, corpus_dir):
    code, out, _ = _run(
        capsys, "gain", _case(corpus_dir, "case2"), "--gain", "[[-1],[2]]"
    )
    assert code == 0
    doc = json.loads(out)
    assert abs(doc["gamma_closed"] - 1.0) <= 1e-9
    assert abs(doc["gamma_lp"] - 1.0) <= 1e-4
    assert doc["N"] == [[0.0], [0.0]]  # q x p zeros for the identity M


def test_gain_with_aggregate_output(capsys, corpus_dir):
    code, out, _ = _run(
        capsys, "gain", _case(corpus_dir, "case2"),
        "--gain", "[[-1],[2]]", "--output-matrix", "ones",
    )
    assert code == 0
    doc = json.loads(out)
    assert abs(doc["gamma_closed"] - 10.0 / 7.0) <= 1e-9


def test_gain_defaults_to_designing(capsys, corpus_dir):
    code, out, _ = _run(capsys, "gain", _case(corpus_dir, "case2"))
    assert code == 0
    doc = json.loads(out)
    assert np.allclose(doc["L"], [[-1.0], [2.0]], atol=1e-5)
    assert abs(doc["gamma_closed"] - 1.0) <= 1e-4


def test_gain_rejects_inadmissible_matrix(capsys, corpus_dir):
    code, _, err = _run(
        capsys, "gain", _case(corpus_dir, "case2"), "--gain", "[[1],[0]]"
    )
    assert code == 1
    assert "Metzler" in err


def test_gain_rejects_unparseable_matrix(capsys, corpus_dir):
    code, _, err = _run(
        capsys, "gain", _case(corpus_dir, "case2"), "--gain", "[[nope"
    )
    assert code == 1
    assert "error:" in err


def test_gain_on_population_file(capsys, corpus_dir):
    code, out, _ = _run(
        capsys, "gain", _case(corpus_dir, "population"),
        "--gain", "[[0],[0],[5]]",
    )
    assert code == 0
    doc = json.loads(out)
    assert abs(doc["gamma_closed"] - 0.75) <= 1e-9


def test_gain_refuses_delay_files(capsys, corpus_dir):
    code, _, err = _run(
        capsys, "gain", _case(corpus_dir, "delay_scalar"), "--gain", "[[0]]"
    )
    assert code == 1
    assert "continuous-time" in err


def test_gain_relaxed_reports_both_gains(capsys, corpus_dir):
    code, out, _ = _run(
        capsys, "gain", _case(corpus_dir, "case1_relaxed"),
        "--gain", "[[1],[10]]",
    )
    assert code == 0
    doc = json.loads(out)
    assert abs(doc["gamma_relaxed_error"] - 8.0 / 15.0) <= 1e-9
    assert abs(doc["gamma_surrogate"] - 0.5) <= 2e-6
    assert "gamma_closed" not in doc


# ---------------------------------------------------------------------------
# simulate


def test_simulate_writes_trace_and_reports_inclusion(capsys, corpus_dir, tmp_path):
    csv = tmp_path / "trace.csv"
    code, out, _ = _run(
        capsys, "simulate", _case(corpus_dir, "case1"), "--out", str(csv)
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["inclusion"]["clean"] is True
    assert doc["csv"] == str(csv)
    header = csv.read_text().splitlines()[0]
    assert header.startswith("t,x1,x2,")


def test_simulate_infeasible_design_exits_two(capsys, corpus_dir, tmp_path):
    code, out, _ = _run(
        capsys, "simulate", _case(corpus_dir, "case3"),
        "--out", str(tmp_path / "t.csv"),
    )
    assert code == 2
    assert json.loads(out)["status"] == "infeasible"


def test_simulate_inclusion_violation_exits_three(
    capsys, corpus_dir, tmp_path, monkeypatch
):
    times = np.array([0.0, 1.0])
    x = np.zeros((2, 1))
    x_lo = np.array([[0.0], [0.5]])  # crosses above the state at t=1
    x_hi = np.ones((2, 1))
    w = np.zeros((2, 1))
    broken = Trace(times, x, x_lo, x_hi, w, w - 1.0, w + 1.0)
    monkeypatch.setattr(cli, "simulate_problem", lambda pf, L, form: broken)
    code, out, _ = _run(
        capsys, "simulate", _case(corpus_dir, "case1"),
        "--out", str(tmp_path / "t.csv"),
    )
    assert code == 3
    doc = json.loads(out)
    assert doc["inclusion"]["clean"] is False
    assert doc["inclusion"]["time"] == 1.0
    assert doc["inclusion"]["side"] == "lower"


# ---------------------------------------------------------------------------
# epsilon precedence: flag > file > environment > default


def _gain_epsilon(capsys, path: str, *extra) -> float:
    code, out, _ = _run(capsys, "gain", path, "--gain", "[[-1],[2]]", *extra)
    assert code == 0
    return json.loads(out)["epsilon"]


@pytest.fixture
def no_file_epsilon(tmp_path, corpus_dir):
    """case2 without an observer section, so only flag/env/default apply."""
    doc = json.loads((corpus_dir / "case2.json").read_text())
    del doc["observer"]
    del doc["disturbance"]
    del doc["simulation"]
    path = tmp_path / "bare.json"
    path.write_text(json.dumps(doc))
    return str(path)


def test_epsilon_flag_beats_everything(capsys, corpus_dir, monkeypatch):
    monkeypatch.setenv("OBSYNTH_EPSILON", "1e-2")
    eps = _gain_epsilon(capsys, _case(corpus_dir, "case2"), "--epsilon", "1e-3")
    assert eps == 1e-3


def test_epsilon_file_beats_environment(capsys, corpus_dir, monkeypatch):
    monkeypatch.setenv("OBSYNTH_EPSILON", "1e-2")
    assert _gain_epsilon(capsys, _case(corpus_dir, "case2")) == 1e-6


def test_epsilon_environment_fills_file_gap(capsys, no_file_epsilon, monkeypatch):
    monkeypatch.setenv("OBSYNTH_EPSILON", "1e-2")
    assert _gain_epsilon(capsys, no_file_epsilon) == 1e-2


def test_epsilon_default_when_nothing_set(capsys, no_file_epsilon, monkeypatch):
    monkeypatch.delenv("OBSYNTH_EPSILON", raising=False)
    assert _gain_epsilon(capsys, no_file_epsilon) == 1e-6


@pytest.mark.parametrize("value", ["abc", "-1"])
def test_invalid_environment_epsilon_exits_one(capsys, corpus_dir, monkeypatch, value):
    monkeypatch.setenv("OBSYNTH_EPSILON", value)
    code, _, err = _run(
        capsys, "gain", _case(corpus_dir, "case2"), "--gain", "[[-1],[2]]"
    )
    assert code == 1
    assert "OBSYNTH_EPSILON" in err


# ---------------------------------------------------------------------------
# check and bench


def test_check_accepts_every_corpus_file(capsys, corpus_dir):
    for path in sorted(corpus_dir.glob("*.json")):
        if path.stem == "expected":
            continue
        code, out, _ = _run(capsys, "check", str(path))
        assert code == 0, path.stem
        assert json.loads(out)["valid"] is True


def test_check_rejects_bad_file(capsys, tmp_path):
    path = tmp_path / "nope.json"
    path.write_text('{"schema_version": "2"}')
    code, _, err = _run(capsys, "check", str(path))
    assert code == 1
    assert "schema_version" in err


def test_bench_runs_clean(capsys):
    code, out, _ = _run(capsys, "bench")
    assert code == 0
    assert "10/10 cases passed" in out


def test_bench_filter_narrows_the_table(capsys):
    code, out, _ = _run(capsys, "bench", "--filter", "dt_scalar")
    assert code == 0
    rows = [line for line in out.splitlines() if line.startswith("dt_scalar")]
    assert len(rows) == 1
    assert "1/1 cases passed" in out


# ---------------------------------------------------------------------------
# argparse plumbing


def test_unknown_command_exits_one(capsys):
    assert main(["disassemble"]) == 1
    capsys.readouterr()


def test_no_arguments_exits_one(capsys):
    assert main([]) == 1
    capsys.readouterr()


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    out = capsys.readouterr().out
    assert "design" in out and "bench" in out

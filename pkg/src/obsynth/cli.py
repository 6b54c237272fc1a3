"""Command-line entry point.

Subcommands: design (synthesize a gain), gain (evaluate gains for a
given or freshly designed L), simulate (integrate and write a CSV
trace), check (validate a problem file), bench (run the built-in
corpus against its expected values).

Exit codes are a stable contract: 0 success, 1 input or usage error,
2 design infeasible, 3 interval inclusion violated in simulation.
All documents printed to stdout are JSON; human diagnostics go to
stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .benchmarks import (
    closed_loop,
    design_problem,
    format_table,
    run_bench,
    simulate_problem,
)
from .errors import ObsynthError
from .linalg import as_matrix
from .positive import (
    DEFAULT_EPSILON,
    gain_for_output,
    linf_gain_lp,
    relaxed_error_gain,
)
from .problem import ProblemFile, parse_problem
from .simulation import check_inclusion, empirical_peak_gain
from .synthesis import certify

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_INCLUSION = 3


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _emit(doc: dict, out_path: str | None = None) -> None:
    text = json.dumps(_jsonable(doc), indent=2, sort_keys=True)
    print(text)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")


def _epsilon_fallback() -> float:
    raw = os.environ.get("OBSYNTH_EPSILON")
    if raw is None:
        return DEFAULT_EPSILON
    try:
        value = float(raw)
    except ValueError:
        raise ObsynthError(f"OBSYNTH_EPSILON={raw!r} is not a number") from None
    if not value > 0.0:
        raise ObsynthError("OBSYNTH_EPSILON must be positive")
    return value


def _spec_for(pf: ProblemFile, args) -> "ObserverSpec":
    return pf.observer_spec(epsilon=args.epsilon, fallback=_epsilon_fallback())


def _parse_matrix_flag(text: str, name: str, n: int, p: int) -> np.ndarray:
    if text in ("I", "identity"):
        return np.eye(n)
    if text == "ones":
        return np.ones((1, n))
    try:
        value = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ObsynthError(f"--{name} must be I, ones, a number, or JSON rows: {exc}")
    arr = np.array(value, dtype=float)
    if arr.ndim == 0:
        # a scalar feedthrough broadcasts over the q x p block
        return float(arr) * np.ones((n, p))
    return as_matrix(arr, name)


def _design_document(pf: ProblemFile, spec, result) -> dict:
    doc = {
        "status": result.status,
        "kind": result.kind,
        "form": result.form,
        "epsilon": result.epsilon,
        "L": result.L,
        "gamma": result.gamma,
        "X_diag": result.X_diag,
        "U": result.U,
        "alpha": result.alpha,
        "diagnostic": result.diagnostic,
    }
    if result.status == "optimal":
        system = pf.system()
        if pf.klass == "population":
            system = system.system()
        report = certify(result, system, spec)
        doc["certification"] = {
            "passed": report.passed,
            "flags": report.flags,
            "gamma_independent": report.gamma_independent,
        }
    return doc


def cmd_design(args) -> int:
    pf = parse_problem(args.input)
    spec = _spec_for(pf, args)
    result = design_problem(pf, spec)
    _emit(_design_document(pf, spec, result), args.out)
    return EXIT_OK if result.status == "optimal" else EXIT_INFEASIBLE


def cmd_gain(args) -> int:
    pf = parse_problem(args.input)
    if pf.klass not in ("continuous", "population"):
        raise ObsynthError(
            "gain evaluation works on continuous-time problem files "
            f"(got class {pf.klass!r})"
        )
    spec = _spec_for(pf, args)
    system = pf.system()
    if pf.klass == "population":
        system = system.system()
    n, p = system.n, system.p

    if args.gain is not None:
        L = _parse_matrix_flag(args.gain, "gain", n, p)
        L = as_matrix(L, "L", (n, system.r))
    else:
        result = design_problem(pf, spec)
        if result.status != "optimal":
            _emit({"status": result.status, "diagnostic": result.diagnostic}, args.out)
            return EXIT_INFEASIBLE
        L = result.L

    M = _parse_matrix_flag(args.output_matrix, "output-matrix", n, p)
    doc: dict = {"L": L, "M": M, "epsilon": spec.epsilon}
    if spec.form == "relaxed":
        doc["gamma_relaxed_error"] = relaxed_error_gain(
            system.A, system.E, system.C, system.F, L, M
        )
        Scl = system.A - L @ system.C
        doc["gamma_surrogate"], doc["certificate_lambda"] = linf_gain_lp(
            Scl, np.eye(n), M, np.zeros((M.shape[0], n)), epsilon=spec.epsilon
        )
    else:
        N = _parse_matrix_flag(args.feedthrough, "feedthrough", M.shape[0], p)
        N = as_matrix(N, "N", (M.shape[0], p))
        doc["N"] = N
        doc["gamma_closed"] = gain_for_output(
            system.A, system.E, system.C, system.F, L, M, N
        )
        Scl = system.A - L @ system.C
        Bcl = system.E - L @ system.F
        doc["gamma_lp"], doc["certificate_lambda"] = linf_gain_lp(
            Scl, Bcl, M, N, epsilon=spec.epsilon
        )
    _emit(doc, args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    pf = parse_problem(args.input)
    spec = _spec_for(pf, args)
    result = design_problem(pf, spec)
    if result.status != "optimal":
        _emit({"status": result.status, "diagnostic": result.diagnostic})
        return EXIT_INFEASIBLE
    trace = simulate_problem(pf, result.L, result.form)
    trace.to_csv(args.out)
    report = check_inclusion(trace, tol=1e-7)
    doc = {
        "csv": args.out,
        "L": result.L,
        "gamma": result.gamma,
        "inclusion": {
            "clean": report.clean,
            "min_margin": report.min_margin,
            "time": report.time,
            "component": report.component,
            "side": report.side,
        },
    }
    try:
        doc["empirical_peak_gain"] = empirical_peak_gain(trace)
    except ObsynthError as exc:
        doc["empirical_peak_gain"] = None
        doc["empirical_note"] = str(exc)
    _emit(doc)
    return EXIT_OK if report.clean else EXIT_INCLUSION


def cmd_check(args) -> int:
    pf = parse_problem(args.input)
    # instantiating the pieces exercises every cross-field invariant
    pf.system()
    pf.observer_spec(fallback=_epsilon_fallback())
    if "disturbance" in pf.data:
        pf.disturbance()
    if "simulation" in pf.data:
        pf.sim_config()
    _emit({"valid": True, "class": pf.klass, "file": args.input})
    return EXIT_OK


def cmd_bench(args) -> int:
    report = run_bench(args.filter)
    print(format_table(report))
    return EXIT_OK if report.all_passed else EXIT_INPUT


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="obsynth",
        description="Interval-observer synthesis and analysis for positive systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, with_input=True):
        sp = sub.add_parser(name, help=help_text)
        if with_input:
            sp.add_argument("input", metavar="INPUT", help="problem file (JSON)")
        sp.add_argument(
            "--epsilon", type=float, default=None,
            help="strictness margin for all strict inequalities",
        )
        return sp

    sp = add("design", "synthesize the optimal observer gain")
    sp.add_argument("--out", default=None, help="also write the result document here")

    sp = add("gain", "evaluate certified gains at a gain matrix")
    sp.add_argument("--gain", default=None, help="gain L as JSON rows (default: design)")
    sp.add_argument(
        "--output-matrix", default="I", dest="output_matrix",
        help="output weighting M: I, ones, or JSON rows",
    )
    sp.add_argument(
        "--feedthrough", default="0",
        help="output feedthrough N: a number or JSON rows",
    )
    sp.add_argument("--out", default=None, help="also write the result document here")

    sp = add("simulate", "integrate plant and observers, write a CSV trace")
    sp.add_argument("--out", default="trace.csv", help="trace CSV path")

    add("check", "validate a problem file")

    sp = add("bench", "run the built-in corpus against expected values", with_input=False)
    sp.add_argument("--filter", default=None, help="only run cases whose name contains this")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; that code means infeasible here
        return EXIT_OK if exc.code == 0 else EXIT_INPUT

    try:
        handler = {
            "design": cmd_design,
            "gain": cmd_gain,
            "simulate": cmd_simulate,
            "check": cmd_check,
            "bench": cmd_bench,
        }[args.command]
        return handler(args)
    except ObsynthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def run() -> None:
    sys.exit(main())

"""Command-line front end.

Subcommands: ``check`` (solver-backed global check), ``check-robust``
(with temporal/spatial margins), ``oracle-check`` (solver-free), ``eval``
(single instant), ``simulate`` (dump the transition sequence), ``distance``
(similarity of two scenarios), ``encode`` (write the SMT-LIB script).

Exit codes: 0 the property holds / true, 1 violated / false, 2 unknown or
timeout, 3 usage or validation errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .formula import MlslFormula
from .monitor import (
    CheckReport,
    build_query,
    check,
    check_robust,
    eval_at,
    oracle_check,
    render_report,
)
from .encode import transform_globally, transform_globally_robust
from .parser import ParseError, parse_formula
from .rational import format_rational, parse_rational
from .robustness import SeparationError, d_seq
from .rcf import UniversalQuantifier
from .scenario import load_scenario
from .smt import SolverConfig, SolverError, discover_solver
from .traffic import ValidationError, time_bounded_prefix, to_transition_sequence

USAGE_ERROR = 3


def _read_formula(text: str) -> tuple[MlslFormula, str]:
    if text.startswith("@"):
        with open(text[1:], "r", encoding="utf-8") as handle:
            text = handle.read()
    return parse_formula(text), " ".join(text.split())


def _solver_config(args) -> SolverConfig:
    command = discover_solver(args.solver)
    return SolverConfig(command=command, timeout=args.timeout)


def _emit_report(report: CheckReport, as_json: bool) -> None:
    if as_json:
        print(json.dumps(report.to_json_dict(), indent=2, sort_keys=True))
    else:
        print(render_report(report))


def _add_common(sub, formula=True, solver=False):
    sub.add_argument("--scenario", required=True, help="scenario JSON file")
    if formula:
        sub.add_argument("--formula", required=True, help="formula text, or @FILE")
    if solver:
        sub.add_argument("--solver", default=None,
                         help="solver command (default: $MLSL_SOLVER, z3, cvc5, bundled shim)")
        sub.add_argument("--timeout", type=float, default=60.0, help="solver timeout in seconds")
        sub.add_argument("--logic", choices=("auto", "qf", "quantified"), default="auto",
                         help="emit quantifier-free when possible (auto), force, or keep binders")
    sub.add_argument("--json", action="store_true", help="machine-readable report")


def build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mlslmon",
        description="Offline monitoring of spatial properties over recorded motorway behavior.",
    )
    subs = ap.add_subparsers(dest="command", required=True)

    s = subs.add_parser("check", help="global check via solver")
    _add_common(s, solver=True)

    s = subs.add_parser("check-robust", help="global check under perturbations")
    _add_common(s, solver=True)
    s.add_argument("--eps", required=True, help="temporal margin (rational, seconds)")
    s.add_argument("--delta", required=True, help="spatial margin (rational, meters)")

    s = subs.add_parser("oracle-check", help="global check without a solver")
    _add_common(s)

    s = subs.add_parser("eval", help="evaluate the formula at one instant")
    _add_common(s)
    s.add_argument("--at", required=True, help="time (rational)")

    s = subs.add_parser("simulate", help="print the induced transition sequence")
    _add_common(s, formula=False)
    s.add_argument("--until", default=None, help="stop at this time (rational)")

    s = subs.add_parser("distance", help="similarity of two scenarios")
    s.add_argument("first", help="scenario JSON file")
    s.add_argument("second", help="scenario JSON file")
    s.add_argument("--json", action="store_true")

    s = subs.add_parser("encode", help="write the SMT-LIB script without solving")
    _add_common(s)
    s.add_argument("--robust", action="store_true")
    s.add_argument("--eps", default=None)
    s.add_argument("--delta", default=None)
    s.add_argument("--logic", choices=("auto", "qf", "quantified"), default="auto")
    s.add_argument("--out", default=None, help="output file (default stdout)")
    return ap


def _cmd_check(args) -> int:
    scenario = load_scenario(args.scenario)
    formula, source = _read_formula(args.formula)
    report = check(scenario, formula, _solver_config(args), args.logic, source=source)
    _emit_report(report, args.json)
    return report.exit_code


def _cmd_check_robust(args) -> int:
    scenario = load_scenario(args.scenario)
    formula, source = _read_formula(args.formula)
    eps = parse_rational(args.eps)
    delta = parse_rational(args.delta)
    report = check_robust(scenario, formula, eps, delta, _solver_config(args), args.logic,
                          source=source)
    _emit_report(report, args.json)
    return report.exit_code


def _cmd_oracle_check(args) -> int:
    scenario = load_scenario(args.scenario)
    formula, source = _read_formula(args.formula)
    report = oracle_check(scenario, formula, source=source)
    _emit_report(report, args.json)
    return report.exit_code


def _cmd_eval(args) -> int:
    scenario = load_scenario(args.scenario)
    formula, _ = _read_formula(args.formula)
    at = parse_rational(args.at)
    lo, hi = scenario.word.timespan()
    if not (lo <= at <= hi):
        raise ValidationError(f"time {at} outside the word timespan [{lo}, {hi}]")
    value = eval_at(scenario, formula, at)
    if args.json:
        print(json.dumps({"time": format_rational(at), "value": value}, sort_keys=True))
    else:
        print("true" if value else "false")
    return 0 if value else 1


def _cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    word = scenario.word
    if args.until is not None:
        word = time_bounded_prefix(word, parse_rational(args.until))
    seq = to_transition_sequence(word, scenario.initial, scenario.params)
    if args.json:
        doc = []
        for snapshot in seq.snapshots:
            doc.append({
                car: {
                    "pos": format_rational(st.pos),
                    "spd": format_rational(st.spd),
                    "acc": format_rational(st.acc),
                    "sf": format_rational(st.sf),
                    "res": sorted(st.res),
                    "clm": sorted(st.clm),
                }
                for car, st in sorted(snapshot.cars.items())
            })
        print(json.dumps({"labels": [str(l) for l in seq.labels], "snapshots": doc},
                         indent=2, sort_keys=True))
        return 0
    clock = Fraction(0)
    for i, (before, label, _after) in enumerate(seq.steps()):
        if isinstance(label, Fraction):
            desc = f"delay {format_rational(label)}"
            clock += label
        else:
            desc = str(label)
        print(f"-- step {i + 1}: {desc} (t = {format_rational(clock)})")
        snap = seq.snapshots[min(i + 1, len(seq.snapshots) - 1)]
        for car, st in sorted(snap.cars.items()):
            print(
                f"   {car}: pos={format_rational(st.pos)} spd={format_rational(st.spd)} "
                f"sf={format_rational(st.sf)} res={sorted(st.res)} clm={sorted(st.clm)}"
            )
    return 0


def _cmd_distance(args) -> int:
    first = load_scenario(args.first)
    second = load_scenario(args.second)
    dist = d_seq(first.model, first.word, second.model, second.word)
    text = "inf" if dist == float("inf") else format_rational(dist)
    if args.json:
        print(json.dumps({"distance": text}, sort_keys=True))
    else:
        print(text)
    return 0


def _cmd_encode(args) -> int:
    scenario = load_scenario(args.scenario)
    formula, _ = _read_formula(args.formula)
    if args.robust:
        if args.eps is None or args.delta is None:
            raise ValidationError("--robust needs --eps and --delta")
        encoding = transform_globally_robust(
            scenario, formula, parse_rational(args.eps), parse_rational(args.delta)
        )
    else:
        encoding = transform_globally(scenario, formula)
    script, _logic = build_query(encoding, args.logic)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(script)
    else:
        sys.stdout.write(script)
    return 0


COMMANDS = {
    "check": _cmd_check,
    "check-robust": _cmd_check_robust,
    "oracle-check": _cmd_oracle_check,
    "eval": _cmd_eval,
    "simulate": _cmd_simulate,
    "distance": _cmd_distance,
    "encode": _cmd_encode,
}


def main(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValidationError, ParseError, SeparationError, SolverError,
            UniversalQuantifier, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())

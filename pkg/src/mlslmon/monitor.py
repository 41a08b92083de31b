"""High-level checks tying encoder, solver and oracle together.

Every entry point returns a :class:`CheckReport` with a three-valued verdict
(HOLDS / VIOLATED / UNKNOWN), timing, solver statistics and, for violations
found by a solver, a replay-verified witness.  The report serializes to a
stable JSON document.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import rcf
from .encode import (
    GlobalEncoding,
    transform_globally,
    transform_globally_robust,
)
from .formula import MlslFormula, format_formula, unbound_variables
from .oracle import Verdict, global_check_direct
from .rational import format_rational
from .rcf import RFormula, hoist_existentials
from .scenario import Scenario
from .semantics import evaluate
from .smt import (
    SolverConfig,
    SolverResult,
    approximate_algebraics,
    emit_script,
    has_irrational_values,
    merge_approximations,
    run_solver,
)
from .traffic import (
    EndMarker,
    Model,
    SetAcceleration,
    SetClaim,
    ValidationError,
    WithdrawClaim,
    WithdrawReservation,
    model_at,
)
from .witness import Witness, extract_witness

HOLDS = "HOLDS"
VIOLATED = "VIOLATED"
UNKNOWN = "UNKNOWN"

EXIT_BY_VERDICT = {HOLDS: 0, VIOLATED: 1, UNKNOWN: 2}


@dataclass
class CheckReport:
    verdict: str
    mode: str  # "exact" | "robust" | "oracle"
    formula: str
    eps: Optional[Fraction] = None
    delta: Optional[Fraction] = None
    witness: Optional[Witness] = None
    oracle: Optional[Verdict] = None
    timing: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    reason: str = ""

    @property
    def exit_code(self) -> int:
        return EXIT_BY_VERDICT[self.verdict]

    def to_json_dict(self) -> dict:
        doc = {
            "verdict": self.verdict,
            "mode": self.mode,
            "formula": self.formula,
            "timing": {k: round(v, 6) for k, v in sorted(self.timing.items())},
        }
        if self.eps is not None:
            doc["eps"] = format_rational(self.eps)
        if self.delta is not None:
            doc["delta"] = format_rational(self.delta)
        if self.reason:
            doc["reason"] = self.reason
        if self.solver:
            doc["solver"] = dict(sorted(self.solver.items()))
        if self.oracle is not None:
            doc["oracle"] = {
                "exact": self.oracle.exact,
                "tested_points": self.oracle.tested_points,
            }
            if self.oracle.time is not None:
                doc["oracle"]["violation_time"] = format_rational(self.oracle.time)
        if self.witness is not None:
            doc["witness"] = witness_to_json(self.witness)
        return doc


def witness_to_json(w: Witness) -> dict:
    model = w.model
    cars = {}
    for car, state in sorted(model.snapshot.cars.items()):
        cars[car] = {
            "pos": format_rational(state.pos),
            "front": format_rational(state.front),
            "res": sorted(state.res),
            "clm": sorted(state.clm),
        }
    doc = {
        "freeze_time": format_rational(w.freeze_time),
        "mode": w.mode,
        "replay_verified": w.replay_verified,
        "view": {
            "lanes": list(model.view.lanes),
            "extension": [format_rational(x) for x in model.view.extension],
            "owner": model.view.owner,
        },
        "cars": cars,
    }
    if w.perturbed_word is not None:
        doc["perturbed_word"] = [
            _action_json(a, t) for a, t in w.perturbed_word.entries
        ]
    if w.time_distance is not None:
        doc["time_distance"] = _distance_json(w.time_distance)
    if w.model_distance is not None:
        doc["model_distance"] = _distance_json(w.model_distance)
    if w.approximate:
        doc["approximate"] = True
        doc["note"] = w.note
    return doc


def _distance_json(d) -> str:
    return "inf" if d == float("inf") else format_rational(d)


def _action_json(action, stamp) -> dict:
    doc: dict = {"time": format_rational(stamp)}
    if isinstance(action, EndMarker):
        doc["action"] = "end"
        return doc
    doc["car"] = action.car
    if isinstance(action, SetClaim):
        doc["action"] = "setClaim"
        doc["lane"] = action.lane
    elif isinstance(action, WithdrawReservation):
        doc["action"] = "wdReservation"
        doc["lane"] = action.kept_lane
    elif isinstance(action, WithdrawClaim):
        doc["action"] = "wdClaim"
    elif isinstance(action, SetAcceleration):
        doc["action"] = "setAcc"
        doc["value"] = format_rational(action.value)
    else:
        doc["action"] = "setReservation"
    return doc


# ---------------------------------------------------------------------------
# Script building


def build_query(
    encoding: GlobalEncoding,
    logic_mode: str = "auto",
    extra: Optional[RFormula] = None,
) -> tuple[str, str]:
    """Emit the satisfiability script for an encoding's negation.

    Returns (script, effective logic).  ``logic_mode``: "auto" picks the
    quantifier-free form whenever every chop existential ends up positive in
    the negated formula, "qf" forces it (failing on universals),
    "quantified" always keeps binders.
    """
    body = encoding.negated()
    if extra is not None:
        body = rcf.rand(body, extra)
    if logic_mode not in ("auto", "qf", "quantified"):
        raise ValueError(f"unknown logic mode {logic_mode!r}")
    use_qf = logic_mode == "qf" or (
        logic_mode == "auto" and encoding.polarity == "qf-after-negation"
    )
    declared = encoding.layout.declared()
    if use_qf:
        flat, chop_vars = hoist_existentials(body)  # raises on universals
        script = emit_script(flat, declared + chop_vars, "QF_NRA")
        return script, "QF_NRA"
    script = emit_script(body, declared, "NRA")
    return script, "NRA"


def solve_encoding(
    encoding: GlobalEncoding,
    config: SolverConfig,
    logic_mode: str = "auto",
    extra: Optional[RFormula] = None,
) -> tuple[SolverResult, str]:
    script, logic = build_query(encoding, logic_mode, extra)
    result = run_solver(script, SolverConfig(config.command, logic, config.timeout, config.seed))
    return result, script


def _solver_report(
    encoding: GlobalEncoding,
    result: SolverResult,
    script: str,
    started: float,
    formula: MlslFormula,
    source: Optional[str] = None,
    config: Optional[SolverConfig] = None,
    logic_mode: str = "auto",
) -> CheckReport:
    timing = {"total_s": time.monotonic() - started, "solve_s": result.elapsed}
    solver_stats = {
        "status": result.status,
        "script_bytes": len(script),
        "variables": script.count("declare-const"),
    }
    report = CheckReport(
        verdict=UNKNOWN,
        mode=encoding.mode,
        formula=source or format_formula(formula),
        eps=encoding.eps,
        delta=encoding.delta,
        timing=timing,
        solver=solver_stats,
    )
    if result.is_unsat:
        report.verdict = HOLDS
    elif result.is_sat:
        report.verdict = VIOLATED
        approximate = False
        if has_irrational_values(result.assignment) and config is not None:
            result, approximate = _resolve_algebraic(
                encoding, result, script, config, logic_mode
            )
        report.witness = extract_witness(result, encoding, approximate=approximate)
    else:
        report.reason = result.reason
    return report


def _resolve_algebraic(
    encoding: GlobalEncoding,
    result: SolverResult,
    script: str,
    config: SolverConfig,
    logic_mode: str,
) -> tuple[SolverResult, bool]:
    """Try to replace an algebraic model with a fully rational one.

    First fetch decimal approximations, then re-solve once with the freeze
    time pinned to its rational approximation; when that fails, keep the
    approximations and mark the witness approximate.
    """
    approx = approximate_algebraics(script, config)
    merged = merge_approximations(result, approx)
    tf_value = merged.assignment.get(encoding.layout.tf)
    if isinstance(tf_value, Fraction) or (
        tf_value is not None and getattr(tf_value, "approx", None) is not None
    ):
        pin = tf_value if isinstance(tf_value, Fraction) else tf_value.approx
        retry, _ = solve_encoding(
            encoding, config, logic_mode,
            extra=rcf.eq(rcf.var(encoding.layout.tf), rcf.const(pin)),
        )
        if retry.is_sat and not has_irrational_values(retry.assignment):
            return retry, False
    return merged, True


def check(
    scenario: Scenario,
    formula: MlslFormula,
    config: SolverConfig,
    logic_mode: str = "auto",
    source: Optional[str] = None,
) -> CheckReport:
    """Does the formula hold at every instant?  Decided by the solver."""
    _require_closed(scenario, formula)
    started = time.monotonic()
    encoding = transform_globally(scenario, formula)
    result, script = solve_encoding(encoding, config, logic_mode)
    return _solver_report(encoding, result, script, started, formula, source,
                          config, logic_mode)


def check_robust(
    scenario: Scenario,
    formula: MlslFormula,
    eps: Fraction,
    delta: Fraction,
    config: SolverConfig,
    logic_mode: str = "auto",
    source: Optional[str] = None,
) -> CheckReport:
    """Does the formula hold at every instant of every (eps, delta)-close
    perturbation?  Fails fast when the separation assumption is violated."""
    _require_closed(scenario, formula)
    started = time.monotonic()
    encoding = transform_globally_robust(scenario, formula, eps, delta)
    result, script = solve_encoding(encoding, config, logic_mode)
    return _solver_report(encoding, result, script, started, formula, source,
                          config, logic_mode)


def oracle_check(
    scenario: Scenario, formula: MlslFormula, source: Optional[str] = None
) -> CheckReport:
    """Solver-free global check via time discretization."""
    _require_closed(scenario, formula)
    started = time.monotonic()
    verdict = global_check_direct(scenario, formula)
    report = CheckReport(
        verdict=HOLDS if verdict.holds else VIOLATED,
        mode="oracle",
        formula=source or format_formula(formula),
        oracle=verdict,
        timing={"total_s": time.monotonic() - started},
    )
    if not verdict.exact:
        report.reason = (
            "inexact-root proviso: some boundary crossings are irrational; "
            "truth at those isolated instants was not tested exactly"
        )
    return report


def eval_at(scenario: Scenario, formula: MlslFormula, t: Fraction) -> bool:
    """Single-instant evaluation at time t."""
    _require_closed(scenario, formula)
    model = model_at(scenario.word, scenario.model, Fraction(t), scenario.params)
    return evaluate(model, formula)


def _require_closed(scenario: Scenario, formula: MlslFormula) -> None:
    unbound = unbound_variables(formula, scenario.valuation)
    if unbound:
        raise ValidationError(
            f"formula variables {sorted(unbound)} are neither quantified nor "
            "mapped by the scenario valuation"
        )


# ---------------------------------------------------------------------------
# Text rendering


def render_model(model: Model, width: int = 64) -> str:
    """ASCII lane diagram of a frozen model.

    One row per lane, top lane first.  Reservations print as the car's id in
    upper case, claims in lower case, overlaps as ``*``; the view extension
    sets the horizontal scale.
    """
    r, t = model.view.extension
    lo, hi = model.view.lanes
    if r == t or lo > hi:
        return "(degenerate view)"
    span = t - r

    def col(x: Fraction) -> int:
        frac = (x - r) / span
        return max(0, min(width - 1, int(frac * (width - 1))))

    lines = []
    for lane in range(hi, lo - 1, -1):
        row = ["."] * width
        for car, state in sorted(model.snapshot.cars.items()):
            for lanes, letter in ((state.res, car[:1].upper()), (state.clm, car[:1].lower())):
                if lane not in lanes:
                    continue
                if state.front < r or state.pos > t:
                    continue
                a, b = col(max(state.pos, r)), col(min(state.front, t))
                for i in range(a, b + 1):
                    row[i] = "*" if row[i] != "." else letter
        lines.append(f"lane {lane:>2} |{''.join(row)}|")
    footer = f"        {format_rational(r):<{width // 2}}{format_rational(t):>{width // 2}}"
    return "\n".join(lines + [footer])


def render_report(report: CheckReport) -> str:
    """Human-readable summary of a check."""
    lines = [f"verdict: {report.verdict}"]
    mode = report.mode
    if report.eps is not None:
        mode += f" (eps={format_rational(report.eps)}, delta={format_rational(report.delta)})"
    lines.append(f"mode:    {mode}")
    lines.append(f"formula: {report.formula}")
    if report.reason:
        lines.append(f"note:    {report.reason}")
    if report.solver:
        lines.append(
            "solver:  status={status}, vars={variables}, script={script_bytes}B".format(
                **report.solver
            )
        )
    for key, value in sorted(report.timing.items()):
        lines.append(f"{key}: {value:.3f}")
    if report.oracle is not None and report.oracle.time is not None:
        lines.append(f"violation time: {format_rational(report.oracle.time)}")
    if report.witness is not None:
        w = report.witness
        lines.append("")
        lines.append(f"witness (freeze time {format_rational(w.freeze_time)}):")
        if w.time_distance is not None:
            lines.append(
                f"  word perturbation {_distance_json(w.time_distance)}, "
                f"model perturbation {_distance_json(w.model_distance)}"
            )
        if w.perturbed_word is not None:
            rendered = " ".join(
                f"({d['action']}{',' + str(d.get('car')) if 'car' in d else ''}"
                f"{',' + str(d['lane']) if 'lane' in d else ''} @ {d['time']})"
                for d in (_action_json(a, t) for a, t in w.perturbed_word.entries)
            )
            lines.append(f"  perturbed word: {rendered}")
        lines.append(render_model(w.model))
    if report.oracle is not None and report.oracle.model is not None:
        lines.append("")
        lines.append("violating model:")
        lines.append(render_model(report.oracle.model))
    return "\n".join(lines)

"""SMT-LIB 2 emission and external solver processes.

The monitor talks to any conforming solver over stdin/stdout: it writes a
complete script (set-logic, declarations, one assert, check-sat, get-value)
and reads the answer plus the model values back.  Rational literals are
emitted exactly as ``(/ p q)`` and parsed back exactly; algebraic answers
(z3's ``root-obj``) are preserved as opaque approximations for the caller to
refine.

Solver discovery order: explicit path, the MLSL_SOLVER environment variable
(parsed like a shell command, so it may carry arguments), ``z3`` or ``cvc5``
on PATH, and finally the bundled WebAssembly-z3 shim if its dependencies are
installed (see tools/wasm-z3/).
"""

from __future__ import annotations

import os
import shlex
import shutil
import subprocess
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

from . import rcf
from .rcf import (
    RAdd,
    RAnd,
    RBool,
    RCmp,
    RConst,
    RExists,
    RForall,
    RFormula,
    RImplies,
    RMul,
    RNot,
    ROr,
    RSub,
    RTerm,
    RVar,
)


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    command: tuple[str, ...]
    logic: str = "QF_NRA"
    timeout: float = 60.0
    seed: Optional[int] = None

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("solver timeout must be positive")


def _bundled_shim() -> Optional[tuple[str, ...]]:
    here = Path(__file__).resolve()
    candidates = [
        Path.cwd() / "tools" / "wasm-z3" / "z3smt2.js",
        here.parent.parent.parent.parent / "tools" / "wasm-z3" / "z3smt2.js",
    ]
    node = shutil.which("node")
    for shim in candidates:
        if shim.is_file() and (shim.parent / "node_modules" / "z3-solver").is_dir() and node:
            return (node, str(shim))
    return None


def discover_solver(explicit: Optional[str] = None) -> tuple[str, ...]:
    """Find a solver command, raising SolverError with advice if none."""
    if explicit:
        return tuple(shlex.split(explicit))
    env = os.environ.get("MLSL_SOLVER")
    if env:
        return tuple(shlex.split(env))
    z3 = shutil.which("z3")
    if z3:
        return (z3, "-smt2", "-in")
    cvc5 = shutil.which("cvc5")
    if cvc5:
        return (cvc5, "--lang", "smt2")
    shim = _bundled_shim()
    if shim:
        return shim
    raise SolverError(
        "no SMT solver found: pass --solver, set MLSL_SOLVER, put z3/cvc5 on "
        "PATH, or run 'npm install' inside tools/wasm-z3/"
    )


# ---------------------------------------------------------------------------
# Emission


def _emit_rational(q: Fraction) -> str:
    if q < 0:
        return f"(- {_emit_rational(-q)})"
    if q.denominator == 1:
        return str(q.numerator)
    return f"(/ {q.numerator} {q.denominator})"


def emit_term(term: RTerm) -> str:
    if isinstance(term, RVar):
        return term.name
    if isinstance(term, RConst):
        return _emit_rational(term.value)
    if isinstance(term, RAdd):
        return "(+ " + " ".join(emit_term(t) for t in term.args) + ")"
    if isinstance(term, RSub):
        return f"(- {emit_term(term.left)} {emit_term(term.right)})"
    if isinstance(term, RMul):
        return "(* " + " ".join(emit_term(t) for t in term.args) + ")"
    raise TypeError(f"unknown term {term!r}")


def emit_formula(formula: RFormula) -> str:
    if isinstance(formula, RBool):
        return "true" if formula.value else "false"
    if isinstance(formula, RCmp):
        return f"({formula.op} {emit_term(formula.left)} {emit_term(formula.right)})"
    if isinstance(formula, RAnd):
        return "(and " + " ".join(emit_formula(f) for f in formula.args) + ")"
    if isinstance(formula, ROr):
        return "(or " + " ".join(emit_formula(f) for f in formula.args) + ")"
    if isinstance(formula, RNot):
        return f"(not {emit_formula(formula.body)})"
    if isinstance(formula, RImplies):
        return f"(=> {emit_formula(formula.left)} {emit_formula(formula.right)})"
    if isinstance(formula, (RExists, RForall)):
        kind = "exists" if isinstance(formula, RExists) else "forall"
        binders = " ".join(f"({name} Real)" for name in formula.names)
        return f"({kind} ({binders}) {emit_formula(formula.body)})"
    raise TypeError(f"unknown formula {formula!r}")


def emit_script(
    body: RFormula,
    declared: Sequence[str],
    logic: str,
    value_vars: Optional[Sequence[str]] = None,
    extra_options: Sequence[str] = (),
) -> str:
    """Deterministic full script for one satisfiability query.

    All of ``declared`` become Real constants; ``value_vars`` (default: all
    declared) are queried with get-value after a sat answer.
    """
    lines = [f"(set-logic {logic})", "(set-option :produce-models true)"]
    lines.extend(extra_options)
    for name in declared:
        lines.append(f"(declare-const {name} Real)")
    lines.append(f"(assert {emit_formula(body)})")
    lines.append("(check-sat)")
    targets = list(value_vars) if value_vars is not None else list(declared)
    if targets:
        lines.append("(get-value (" + " ".join(targets) + "))")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Results


@dataclass(frozen=True)
class Algebraic:
    """An irrational model value, kept as the solver's expression plus a
    rational approximation when one could be derived."""

    raw: str
    approx: Optional[Fraction] = None

    def __str__(self):
        return self.raw


ModelValue = Union[Fraction, Algebraic]


def has_irrational_values(assignment: Mapping[str, "ModelValue"]) -> bool:
    return any(
        isinstance(v, Algebraic) and v.approx is None for v in assignment.values()
    )


@dataclass(frozen=True)
class SolverResult:
    status: str  # "sat" | "unsat" | "unknown" | "timeout" | "error"
    assignment: Mapping[str, ModelValue] = field(default_factory=dict)
    reason: str = ""
    elapsed: float = 0.0

    @property
    def is_sat(self) -> bool:
        return self.status == "sat"

    @property
    def is_unsat(self) -> bool:
        return self.status == "unsat"


# --- S-expression reading ---------------------------------------------------


def _tokenize_sexp(text: str) -> list[str]:
    out: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch in "()":
            out.append(ch)
            i += 1
        elif ch.isspace():
            i += 1
        elif ch == '"':
            j = i + 1
            while j < len(text) and text[j] != '"':
                j += 1
            out.append(text[i : j + 1])
            i = j + 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in "()":
                j += 1
            out.append(text[i:j])
            i = j
    return out


def _parse_sexp(tokens: list[str], pos: int = 0):
    if tokens[pos] == "(":
        items = []
        pos += 1
        while tokens[pos] != ")":
            item, pos = _parse_sexp(tokens, pos)
            items.append(item)
        return items, pos + 1
    return tokens[pos], pos + 1


def _sexp_to_text(sexp) -> str:
    if isinstance(sexp, list):
        return "(" + " ".join(_sexp_to_text(s) for s in sexp) + ")"
    return str(sexp)


def value_from_sexp(sexp) -> ModelValue:
    """Exact rational from a solver value; root-obj and friends stay opaque."""
    if isinstance(sexp, str):
        try:
            return Fraction(sexp)  # handles "3", "1.5", "3.0"
        except ValueError:
            return Algebraic(sexp)
    if isinstance(sexp, list) and sexp:
        head = sexp[0]
        if head == "-" and len(sexp) == 2:
            inner = value_from_sexp(sexp[1])
            if isinstance(inner, Fraction):
                return -inner
            return Algebraic(_sexp_to_text(sexp))
        if head == "/" and len(sexp) == 3:
            num = value_from_sexp(sexp[1])
            den = value_from_sexp(sexp[2])
            if isinstance(num, Fraction) and isinstance(den, Fraction) and den != 0:
                return num / den
            return Algebraic(_sexp_to_text(sexp))
    return Algebraic(_sexp_to_text(sexp))


def parse_get_value(text: str) -> dict[str, ModelValue]:
    """Parse the association list printed after a sat answer."""
    tokens = _tokenize_sexp(text)
    if not tokens:
        return {}
    sexp, _ = _parse_sexp(tokens)
    out: dict[str, ModelValue] = {}
    if isinstance(sexp, list):
        for pair in sexp:
            if isinstance(pair, list) and len(pair) == 2 and isinstance(pair[0], str):
                out[pair[0]] = value_from_sexp(pair[1])
    return out


def run_solver(script: str, config: SolverConfig) -> SolverResult:
    """One solver process per query: feed the script, parse the answer."""
    started = time.monotonic()
    try:
        proc = subprocess.run(
            list(config.command),
            input=script.encode(),
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            timeout=config.timeout,
        )
    except subprocess.TimeoutExpired:
        return SolverResult("timeout", reason=f"no answer within {config.timeout}s",
                            elapsed=time.monotonic() - started)
    except OSError as exc:
        raise SolverError(f"cannot run solver {config.command}: {exc}") from exc
    elapsed = time.monotonic() - started
    stdout = proc.stdout.decode(errors="replace")
    lines = [line for line in stdout.splitlines() if line.strip()]
    status = None
    rest: list[str] = []
    for line in lines:
        stripped = line.strip()
        if status is None and stripped in ("sat", "unsat", "unknown"):
            status = stripped
            continue
        if status is not None:
            rest.append(line)
    if status is None:
        detail = stdout.strip() or proc.stderr.decode(errors="replace").strip()
        return SolverResult("error", reason=f"unrecognized solver output: {detail[:500]}",
                            elapsed=elapsed)
    if status == "unknown":
        return SolverResult("unknown", reason="solver answered unknown", elapsed=elapsed)
    if status == "unsat":
        return SolverResult("unsat", elapsed=elapsed)
    assignment = parse_get_value("\n".join(rest))
    return SolverResult("sat", assignment=assignment, elapsed=elapsed)


def _decimal_to_fraction(text: str) -> Optional[Fraction]:
    cleaned = text.rstrip("?")
    try:
        return Fraction(cleaned)
    except ValueError:
        return None


def _approx_from_sexp(sexp) -> Optional[Fraction]:
    if isinstance(sexp, str):
        return _decimal_to_fraction(sexp)
    if isinstance(sexp, list) and sexp:
        if sexp[0] == "-" and len(sexp) == 2:
            inner = _approx_from_sexp(sexp[1])
            return -inner if inner is not None else None
        if sexp[0] == "/" and len(sexp) == 3:
            num = _approx_from_sexp(sexp[1])
            den = _approx_from_sexp(sexp[2])
            if num is not None and den:
                return num / den
    return None


def approximate_algebraics(
    script: str, config: SolverConfig, precision: int = 40
) -> dict[str, Fraction]:
    """Re-run a sat query asking for decimal model values.

    Irrational algebraic values then print as truncated decimals (marked
    with a trailing "?" by z3), which we read back as rational
    approximations.  Only variables with a parseable value are returned.
    """
    options = (
        "(set-option :pp.decimal true)\n"
        f"(set-option :pp.decimal_precision {precision})\n"
    )
    result_text = subprocess.run(
        list(config.command),
        input=(options + script).encode(),
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        timeout=config.timeout,
    ).stdout.decode(errors="replace")
    lines = [l for l in result_text.splitlines() if l.strip() and l.strip() != "sat"]
    tokens = _tokenize_sexp("\n".join(lines))
    if not tokens:
        return {}
    try:
        sexp, _ = _parse_sexp(tokens)
    except IndexError:
        return {}
    out: dict[str, Fraction] = {}
    if isinstance(sexp, list):
        for pair in sexp:
            if isinstance(pair, list) and len(pair) == 2 and isinstance(pair[0], str):
                approx = _approx_from_sexp(pair[1])
                if approx is not None:
                    out[pair[0]] = approx
    return out


def merge_approximations(
    result: SolverResult, approx: Mapping[str, Fraction]
) -> SolverResult:
    merged: dict[str, ModelValue] = {}
    for name, value in result.assignment.items():
        if isinstance(value, Algebraic) and value.approx is None and name in approx:
            merged[name] = Algebraic(value.raw, approx[name])
        else:
            merged[name] = value
    return SolverResult("sat", assignment=merged, elapsed=result.elapsed)

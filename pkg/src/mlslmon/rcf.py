"""First-order real-arithmetic formulas: the compilation target.

Terms stay inside the polynomial signature over the reals: variables,
rational constants, sums, differences and products.  Division only ever
appears with a nonzero rational divisor and is folded into a constant factor
at construction time.  Formulas add =, <, <= and the boolean/quantifier
layer.

Construction helpers do light, deterministic simplification (flattening
nested conjunctions, dropping neutral literals, collapsing double negation)
so that emitted scripts stay readable; nothing here depends on it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class RVar:
    name: str


@dataclass(frozen=True)
class RConst:
    value: Fraction


@dataclass(frozen=True)
class RAdd:
    args: tuple["RTerm", ...]


@dataclass(frozen=True)
class RSub:
    left: "RTerm"
    right: "RTerm"


@dataclass(frozen=True)
class RMul:
    args: tuple["RTerm", ...]


RTerm = Union[RVar, RConst, RAdd, RSub, RMul]


def const(value) -> RConst:
    return RConst(Fraction(value))


def var(name: str) -> RVar:
    return RVar(name)


def _coerce(value) -> RTerm:
    if isinstance(value, (RVar, RConst, RAdd, RSub, RMul)):
        return value
    return const(value)


def add(*args) -> RTerm:
    terms = [_coerce(a) for a in args]
    if len(terms) == 1:
        return terms[0]
    return RAdd(tuple(terms))


def sub(left, right) -> RTerm:
    return RSub(_coerce(left), _coerce(right))


def mul(*args) -> RTerm:
    terms = [_coerce(a) for a in args]
    if len(terms) == 1:
        return terms[0]
    return RMul(tuple(terms))


def div_const(term, divisor) -> RTerm:
    """Division restricted to nonzero rational constant divisors."""
    divisor = Fraction(divisor)
    if divisor == 0:
        raise ZeroDivisionError("rcf terms only divide by nonzero rational constants")
    return mul(const(Fraction(1) / divisor), _coerce(term))


# ---------------------------------------------------------------------------
# Formulas


@dataclass(frozen=True)
class RBool:
    value: bool


@dataclass(frozen=True)
class RCmp:
    op: str  # "=", "<", "<="
    left: RTerm
    right: RTerm


@dataclass(frozen=True)
class RAnd:
    args: tuple["RFormula", ...]


@dataclass(frozen=True)
class ROr:
    args: tuple["RFormula", ...]


@dataclass(frozen=True)
class RNot:
    body: "RFormula"


@dataclass(frozen=True)
class RImplies:
    left: "RFormula"
    right: "RFormula"


@dataclass(frozen=True)
class RExists:
    names: tuple[str, ...]
    body: "RFormula"


@dataclass(frozen=True)
class RForall:
    names: tuple[str, ...]
    body: "RFormula"


RFormula = Union[RBool, RCmp, RAnd, ROr, RNot, RImplies, RExists, RForall]

TRUE = RBool(True)
FALSE = RBool(False)


def eq(left, right) -> RFormula:
    return RCmp("=", _coerce(left), _coerce(right))


def lt(left, right) -> RFormula:
    return RCmp("<", _coerce(left), _coerce(right))


def le(left, right) -> RFormula:
    return RCmp("<=", _coerce(left), _coerce(right))


def rand(*args: RFormula) -> RFormula:
    flat: list[RFormula] = []
    for f in args:
        if isinstance(f, RBool):
            if not f.value:
                return FALSE
            continue
        if isinstance(f, RAnd):
            flat.extend(f.args)
        else:
            flat.append(f)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return RAnd(tuple(flat))


def ror(*args: RFormula) -> RFormula:
    flat: list[RFormula] = []
    for f in args:
        if isinstance(f, RBool):
            if f.value:
                return TRUE
            continue
        if isinstance(f, ROr):
            flat.extend(f.args)
        else:
            flat.append(f)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return ROr(tuple(flat))


def rnot(body: RFormula) -> RFormula:
    if isinstance(body, RBool):
        return RBool(not body.value)
    if isinstance(body, RNot):
        return body.body
    return RNot(body)


def rimplies(left: RFormula, right: RFormula) -> RFormula:
    if isinstance(left, RBool):
        return right if left.value else TRUE
    if isinstance(right, RBool) and right.value:
        return TRUE
    return RImplies(left, right)


def in_box(term, center, radius) -> RFormula:
    """center - radius <= term <= center + radius."""
    t = _coerce(term)
    return rand(le(sub(center, radius), t), le(t, add(center, radius)))


# ---------------------------------------------------------------------------
# Structure queries and transformations


def term_vars(term: RTerm, acc: set[str]) -> None:
    if isinstance(term, RVar):
        acc.add(term.name)
    elif isinstance(term, (RAdd, RMul)):
        for t in term.args:
            term_vars(t, acc)
    elif isinstance(term, RSub):
        term_vars(term.left, acc)
        term_vars(term.right, acc)


def free_vars(formula: RFormula) -> set[str]:
    acc: set[str] = set()

    def go(f: RFormula, bound: frozenset[str]):
        if isinstance(f, RBool):
            return
        if isinstance(f, RCmp):
            sub_acc: set[str] = set()
            term_vars(f.left, sub_acc)
            term_vars(f.right, sub_acc)
            acc.update(sub_acc - bound)
        elif isinstance(f, (RAnd, ROr)):
            for g in f.args:
                go(g, bound)
        elif isinstance(f, RNot):
            go(f.body, bound)
        elif isinstance(f, RImplies):
            go(f.left, bound)
            go(f.right, bound)
        elif isinstance(f, (RExists, RForall)):
            go(f.body, bound | set(f.names))

    go(formula, frozenset())
    return acc


def nnf(formula: RFormula, negate: bool = False) -> RFormula:
    """Negation normal form; comparisons stay as (possibly negated) atoms."""
    if isinstance(formula, RBool):
        return RBool(formula.value != negate)
    if isinstance(formula, RCmp):
        return RNot(formula) if negate else formula
    if isinstance(formula, RNot):
        return nnf(formula.body, not negate)
    if isinstance(formula, RAnd):
        parts = tuple(nnf(f, negate) for f in formula.args)
        return ror(*parts) if negate else rand(*parts)
    if isinstance(formula, ROr):
        parts = tuple(nnf(f, negate) for f in formula.args)
        return rand(*parts) if negate else ror(*parts)
    if isinstance(formula, RImplies):
        if negate:
            return rand(nnf(formula.left, False), nnf(formula.right, True))
        return ror(nnf(formula.left, True), nnf(formula.right, False))
    if isinstance(formula, RExists):
        body = nnf(formula.body, negate)
        return RForall(formula.names, body) if negate else RExists(formula.names, body)
    if isinstance(formula, RForall):
        body = nnf(formula.body, negate)
        return RExists(formula.names, body) if negate else RForall(formula.names, body)
    raise TypeError(f"unknown rcf formula {formula!r}")


class UniversalQuantifier(ValueError):
    """Raised when a formula expected to be existential contains a universal."""


def hoist_existentials(formula: RFormula) -> tuple[RFormula, list[str]]:
    """Strip all quantifiers from an NNF'd purely-existential formula.

    Binder names must be globally unique (the encoder guarantees this);
    the stripped names are returned in traversal order so they can be
    declared as free constants.  Raises UniversalQuantifier otherwise.
    """
    normal = nnf(formula)
    names: list[str] = []
    seen: set[str] = set()

    def go(f: RFormula) -> RFormula:
        if isinstance(f, (RBool, RCmp)):
            return f
        if isinstance(f, RNot):
            return RNot(go(f.body))
        if isinstance(f, RAnd):
            return rand(*(go(g) for g in f.args))
        if isinstance(f, ROr):
            return ror(*(go(g) for g in f.args))
        if isinstance(f, RImplies):
            return rimplies(go(f.left), go(f.right))
        if isinstance(f, RExists):
            for name in f.names:
                if name in seen:
                    raise ValueError(f"duplicate binder name {name!r}; cannot hoist")
                seen.add(name)
                names.append(name)
            return go(f.body)
        if isinstance(f, RForall):
            raise UniversalQuantifier(
                "formula contains a universally quantified variable after negation"
            )
        raise TypeError(f"unknown rcf formula {f!r}")

    return go(normal), names


def count_quantifiers(formula: RFormula) -> int:
    if isinstance(formula, (RBool, RCmp)):
        return 0
    if isinstance(formula, RNot):
        return count_quantifiers(formula.body)
    if isinstance(formula, (RAnd, ROr)):
        return sum(count_quantifiers(f) for f in formula.args)
    if isinstance(formula, RImplies):
        return count_quantifiers(formula.left) + count_quantifiers(formula.right)
    if isinstance(formula, (RExists, RForall)):
        return len(formula.names) + count_quantifiers(formula.body)
    raise TypeError(f"unknown rcf formula {formula!r}")


# ---------------------------------------------------------------------------
# Debug rendering (infix)


def format_term(term: RTerm) -> str:
    if isinstance(term, RVar):
        return term.name
    if isinstance(term, RConst):
        return str(term.value)
    if isinstance(term, RAdd):
        return "(" + " + ".join(format_term(t) for t in term.args) + ")"
    if isinstance(term, RSub):
        return f"({format_term(term.left)} - {format_term(term.right)})"
    if isinstance(term, RMul):
        return "(" + "*".join(format_term(t) for t in term.args) + ")"
    raise TypeError(f"unknown rcf term {term!r}")


def format_formula(formula: RFormula, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(formula, RBool):
        return pad + ("true" if formula.value else "false")
    if isinstance(formula, RCmp):
        return f"{pad}{format_term(formula.left)} {formula.op} {format_term(formula.right)}"
    if isinstance(formula, RNot):
        return f"{pad}!(\n{format_formula(formula.body, indent + 1)}\n{pad})"
    if isinstance(formula, (RAnd, ROr)):
        word = "and" if isinstance(formula, RAnd) else "or"
        inner = "\n".join(format_formula(f, indent + 1) for f in formula.args)
        return f"{pad}({word}\n{inner}\n{pad})"
    if isinstance(formula, RImplies):
        return (
            f"{pad}(implies\n{format_formula(formula.left, indent + 1)}\n"
            f"{format_formula(formula.right, indent + 1)}\n{pad})"
        )
    if isinstance(formula, (RExists, RForall)):
        word = "exists" if isinstance(formula, RExists) else "forall"
        return f"{pad}({word} {' '.join(formula.names)} .\n{format_formula(formula.body, indent + 1)}\n{pad})"
    raise TypeError(f"unknown rcf formula {formula!r}")

"""Core AST of the spatial logic plus the usual derived forms.

The core grammar is deliberately small: variable equality, ``free``,
``re(x)``, ``cl(x)``, a length atom, negation, conjunction, existential
quantification over cars, and the two chop operators.  Everything else
(``or``, ``->``, ``forall``, ``true``/``false``, the *somewhere* modality)
is sugar expanded at construction time, so downstream passes only ever see
the ten core node kinds.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .rational import format_rational


class MlslFormula:
    """Base class; all nodes are frozen and hashable."""

    __slots__ = ()

    def __and__(self, other):
        return And(self, other)

    def __invert__(self):
        return Not(self)


@dataclass(frozen=True)
class VarEq(MlslFormula):
    left: str
    right: str


@dataclass(frozen=True)
class Free(MlslFormula):
    pass


@dataclass(frozen=True)
class Re(MlslFormula):
    var: str


@dataclass(frozen=True)
class Cl(MlslFormula):
    var: str


@dataclass(frozen=True)
class LengthEq(MlslFormula):
    value: Fraction


@dataclass(frozen=True)
class Not(MlslFormula):
    body: MlslFormula


@dataclass(frozen=True)
class And(MlslFormula):
    left: MlslFormula
    right: MlslFormula


@dataclass(frozen=True)
class Exists(MlslFormula):
    var: str
    body: MlslFormula


@dataclass(frozen=True)
class HChop(MlslFormula):
    """Split the extension at some point: left part, right part."""

    left: MlslFormula
    right: MlslFormula


@dataclass(frozen=True)
class VChop(MlslFormula):
    """Split the lane interval: ``lower`` below the cut, ``upper`` above."""

    lower: MlslFormula
    upper: MlslFormula


FREE = Free()

# "false" is a plain contradiction over core atoms, "true" its negation;
# keeping them inside the core grammar avoids a dedicated constant node.
FALSE = And(FREE, Not(FREE))
TRUE = Not(FALSE)


def or_(left: MlslFormula, right: MlslFormula) -> MlslFormula:
    return Not(And(Not(left), Not(right)))


def implies(premise: MlslFormula, conclusion: MlslFormula) -> MlslFormula:
    return or_(Not(premise), conclusion)


def forall(var: str, body: MlslFormula) -> MlslFormula:
    return Not(Exists(var, Not(body)))


def somewhere(body: MlslFormula) -> MlslFormula:
    """Somewhere in the view: pad horizontally and vertically with ``true``.

    Expands to ``true ~ [true // body // true] ~ true`` over the core chops.
    """
    stack = VChop(TRUE, VChop(body, TRUE))
    return HChop(TRUE, HChop(stack, TRUE))


def walk(formula: MlslFormula) -> Iterator[MlslFormula]:
    """Pre-order traversal."""
    stack = [formula]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Not):
            stack.append(node.body)
        elif isinstance(node, (And, HChop)):
            stack.append(node.right)
            stack.append(node.left)
        elif isinstance(node, VChop):
            stack.append(node.upper)
            stack.append(node.lower)
        elif isinstance(node, Exists):
            stack.append(node.body)


def free_variables(formula: MlslFormula) -> set[str]:
    """Variables not bound by any enclosing quantifier."""

    def go(node: MlslFormula, bound: frozenset[str], acc: set[str]):
        if isinstance(node, VarEq):
            acc.update({node.left, node.right} - bound)
        elif isinstance(node, (Re, Cl)):
            if node.var not in bound:
                acc.add(node.var)
        elif isinstance(node, Not):
            go(node.body, bound, acc)
        elif isinstance(node, And):
            go(node.left, bound, acc)
            go(node.right, bound, acc)
        elif isinstance(node, HChop):
            go(node.left, bound, acc)
            go(node.right, bound, acc)
        elif isinstance(node, VChop):
            go(node.lower, bound, acc)
            go(node.upper, bound, acc)
        elif isinstance(node, Exists):
            go(node.body, bound | {node.var}, acc)

    acc: set[str] = set()
    go(formula, frozenset(), acc)
    return acc


def unbound_variables(formula: MlslFormula, valuation) -> set[str]:
    return {v for v in free_variables(formula) if v not in valuation}


def length_constants(formula: MlslFormula) -> list[Fraction]:
    """Multiset of length-atom constants, one entry per occurrence."""
    return [n.value for n in walk(formula) if isinstance(n, LengthEq)]


def format_formula(formula: MlslFormula) -> str:
    """Core-syntax rendering (sugar is not re-folded)."""
    if isinstance(formula, VarEq):
        return f"{formula.left} = {formula.right}"
    if isinstance(formula, Free):
        return "free"
    if isinstance(formula, Re):
        return f"re({formula.var})"
    if isinstance(formula, Cl):
        return f"cl({formula.var})"
    if isinstance(formula, LengthEq):
        return f"len = {format_rational(formula.value)}"
    if isinstance(formula, Not):
        return f"!({format_formula(formula.body)})"
    if isinstance(formula, And):
        return f"({format_formula(formula.left)} & {format_formula(formula.right)})"
    if isinstance(formula, Exists):
        return f"exists {formula.var} . ({format_formula(formula.body)})"
    if isinstance(formula, HChop):
        return f"({format_formula(formula.left)} ~ {format_formula(formula.right)})"
    if isinstance(formula, VChop):
        return f"[{format_formula(formula.lower)} // {format_formula(formula.upper)}]"
    raise TypeError(f"unknown formula node {formula!r}")

"""Direct evaluation of spatial formulas on a model.

This is the reference decision procedure: no solver, exact rationals.  The
only non-obvious ingredient is the horizontal chop.  Its semantics demand a
cut point ``s`` anywhere in the (continuous) extension, but atom truth over a
subinterval only depends on how the endpoints relate to finitely many
boundary values: the view edges, each car's rear and front, and — when length
atoms occur — those values shifted by signed sums of the length constants.
Testing the boundary values themselves plus one interior point per gap is
therefore exhaustive.  ``chop_candidates`` builds that finite set; a
randomized test elsewhere checks that enlarging it never changes a verdict.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from .formula import (
    And,
    Cl,
    Exists,
    Free,
    HChop,
    LengthEq,
    MlslFormula,
    Not,
    Re,
    VChop,
    VarEq,
    length_constants,
)
from .traffic import Model


def signed_subset_sums(constants: Sequence[Fraction]) -> set[Fraction]:
    """All sums over sub-multisets with per-element signs, 0 included.

    Each length-atom occurrence contributes at most once per sum; for k
    occurrences this is bounded by 3^k values.
    """
    sums = {Fraction(0)}
    for q in constants:
        sums |= {s + q for s in sums} | {s - q for s in sums}
    return sums


def chop_candidates(
    model: Model,
    formula: MlslFormula,
    extra: Iterable[Fraction] = (),
) -> list[Fraction]:
    """Finite ascending set of cut points sufficient for the chop existential.

    Base points: view edges and every car boundary; shifted by the signed
    subset sums of the formula's length constants; clipped to the extension;
    plus one interior point per gap between consecutive base points.
    """
    r, t = model.view.extension
    base = {r, t}
    for state in model.snapshot.cars.values():
        base.add(state.pos)
        base.add(state.front)
    shifts = signed_subset_sums(length_constants(formula))
    points = {b + s for b in base for s in shifts}
    points = {p for p in points if r <= p <= t}
    points.update(q for q in extra if r <= q <= t)
    ordered = sorted(points)
    midpoints = [
        (a + b) / 2 for a, b in zip(ordered, ordered[1:])
    ]
    return sorted(set(ordered) | set(midpoints))


def evaluate(
    model: Model,
    formula: MlslFormula,
    extra_chop_points: Iterable[Fraction] = (),
) -> bool:
    """Decide whether the model satisfies the formula.

    ``extra_chop_points`` widens every horizontal-chop candidate set; results
    must be insensitive to it (used by the candidate-robustness test).
    """
    extra = tuple(extra_chop_points)
    view = model.view
    (l, n) = view.lanes
    (r, t) = view.extension
    snapshot = model.snapshot

    if isinstance(formula, VarEq):
        return model.resolve(formula.left) == model.resolve(formula.right)

    if isinstance(formula, Free):
        if l != n or not (r < t):
            return False
        for state in snapshot.cars.values():
            if not state.occupies(l):
                continue
            # closed car segment vs open extension: disjoint iff it ends
            # before the view starts or starts after it ends
            if state.front <= r or state.pos >= t:
                continue
            return False
        return True

    if isinstance(formula, (Re, Cl)):
        if l != n or not (r < t):
            return False
        state = snapshot.cars[model.resolve(formula.var)]
        lanes = state.res if isinstance(formula, Re) else state.clm
        return l in lanes and state.pos <= r and t <= state.front

    if isinstance(formula, LengthEq):
        return t - r == formula.value

    if isinstance(formula, Not):
        return not evaluate(model, formula.body, extra)

    if isinstance(formula, And):
        return evaluate(model, formula.left, extra) and evaluate(model, formula.right, extra)

    if isinstance(formula, Exists):
        for car in snapshot.car_ids():
            valuation = dict(model.valuation)
            valuation[formula.var] = car
            bound = Model(snapshot, view, valuation)
            if evaluate(bound, formula.body, extra):
                return True
        return False

    if isinstance(formula, HChop):
        for s in chop_candidates(model, formula, extra):
            left = Model(snapshot, view.with_extension(r, s), model.valuation)
            right = Model(snapshot, view.with_extension(s, t), model.valuation)
            if evaluate(left, formula.left, extra) and evaluate(right, formula.right, extra):
                return True
        return False

    if isinstance(formula, VChop):
        if l > n:
            return evaluate(model, formula.lower, extra) and evaluate(model, formula.upper, extra)
        for m in range(l - 1, n + 1):
            lower = Model(snapshot, view.with_lanes(l, m), model.valuation)
            upper = Model(snapshot, view.with_lanes(m + 1, n), model.valuation)
            if evaluate(lower, formula.lower, extra) and evaluate(upper, formula.upper, extra):
                return True
        return False

    raise TypeError(f"unknown formula node {formula!r}")

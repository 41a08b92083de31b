"""Solver-free global check: discretize time, evaluate at critical instants.

Between two consecutive word events every car boundary (rear, front) and both
view edges are quadratic functions of time, because acceleration is constant
there.  The truth value of a spatial formula at time t only depends on the
ordering pattern of these boundary values (shifted by signed sums of the
formula's length constants), so it can only flip where two such curves cross.
We therefore test: every event stamp, every rational crossing, and one sample
inside every crossing-free open interval.

Irrational crossings (possible once accelerations are nonzero) are not solved
exactly; they are isolated between rational brackets and the verdict is
flagged as best-effort at those isolated instants.  With all accelerations
zero every crossing is rational and the verdict is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Optional

from .formula import MlslFormula, length_constants
from .scenario import Scenario
from .semantics import evaluate, signed_subset_sums
from .traffic import Model, model_at, snapshot_at

_SQRT_DIGITS = 40


def quadratic_roots(
    a: Fraction, b: Fraction, c: Fraction
) -> tuple[list[Fraction], list[tuple[Fraction, Fraction]]]:
    """Real roots of a*u^2 + b*u + c.

    Returns (exact rational roots, brackets around irrational roots); the
    brackets are rational intervals of width about 10^-40.
    """
    if a == 0:
        if b == 0:
            return [], []
        return [Fraction(-c) / b], []
    disc = b * b - 4 * a * c
    if disc < 0:
        return [], []
    if disc == 0:
        return [Fraction(-b) / (2 * a)], []
    num, den = disc.numerator, disc.denominator
    rn, rd = isqrt(num), isqrt(den)
    if rn * rn == num and rd * rd == den:
        s = Fraction(rn, rd)
        return sorted([(-b - s) / (2 * a), (-b + s) / (2 * a)]), []
    scale = 10 ** _SQRT_DIGITS
    floor_int = isqrt(num * scale * scale // den)
    s_lo = Fraction(floor_int, scale)
    s_hi = Fraction(floor_int + 1, scale)
    brackets = []
    for sign in (-1, 1):
        ends = ((-b + sign * s_lo) / (2 * a), (-b + sign * s_hi) / (2 * a))
        brackets.append((min(ends), max(ends)))
    return [], sorted(brackets)


@dataclass(frozen=True)
class CriticalTimes:
    """Time points to test, ascending, plus an exactness flag.

    ``exact`` is False when some boundary crossing is irrational; truth at
    such an instant is only approximated by its neighbours.
    """

    points: tuple[Fraction, ...]
    exact: bool


def _segment_quadratics(scenario: Scenario, start: Fraction) -> list[tuple[Fraction, Fraction, Fraction]]:
    """Boundary curves on the segment beginning at ``start``, as coefficient
    triples (c2, c1, c0) in u = t - start: every car's rear and front plus
    the two co-moving view edges."""
    snap = snapshot_at(scenario.word, scenario.initial, start, scenario.params)
    a_max = scenario.max_deceleration
    curves = []
    for car in scenario.car_ids():
        st = snap[car]
        rear = (st.acc / 2, st.spd, st.pos)
        # front = pos + sf with sf(u) = (spd + acc*u)^2 / A + L
        front = (
            st.acc / 2 + st.acc * st.acc / a_max,
            st.spd + 2 * st.spd * st.acc / a_max,
            st.pos + st.sf,
        )
        curves.append(rear)
        curves.append(front)
    owner = scenario.view.owner
    own = snap[owner]
    shift = (own.acc / 2, own.spd, own.pos - scenario.initial[owner].pos)
    r, t = scenario.view.extension
    curves.append((shift[0], shift[1], r + shift[2]))
    curves.append((shift[0], shift[1], t + shift[2]))
    return curves


def critical_times(scenario: Scenario, formula: MlslFormula) -> CriticalTimes:
    word = scenario.word
    events = sorted({Fraction(0), word.end_time, *(t for _, t in word.entries)})
    shifts = sorted(signed_subset_sums(length_constants(formula)))
    points: set[Fraction] = set(events)
    exact = True

    for seg_start, seg_end in zip(events, events[1:]):
        length = seg_end - seg_start
        if length == 0:
            continue
        curves = _segment_quadratics(scenario, seg_start)
        markers: set[Fraction] = set()
        for i in range(len(curves)):
            for j in range(i + 1, len(curves)):
                da = curves[i][0] - curves[j][0]
                db = curves[i][1] - curves[j][1]
                dc0 = curves[i][2] - curves[j][2]
                for shift in shifts:
                    roots, brackets = quadratic_roots(da, db, dc0 - shift)
                    for u in roots:
                        if 0 < u < length:
                            points.add(seg_start + u)
                            markers.add(u)
                    for lo, hi in brackets:
                        if hi <= 0 or lo >= length:
                            continue
                        exact = False
                        markers.add(max(lo, Fraction(0)))
                        markers.add(min(hi, length))
        cuts = [Fraction(0), *sorted(m for m in markers if 0 < m < length), length]
        for left, right in zip(cuts, cuts[1:]):
            if left < right:
                points.add(seg_start + (left + right) / 2)

    return CriticalTimes(tuple(sorted(points)), exact)


@dataclass(frozen=True)
class Verdict:
    """Outcome of a global check."""

    holds: bool
    time: Optional[Fraction] = None
    model: Optional[Model] = None
    explanation: str = ""
    exact: bool = True
    tested_points: int = 0


def global_check_direct(scenario: Scenario, formula: MlslFormula) -> Verdict:
    """Evaluate the formula at every critical instant of the scenario.

    Holds iff true at all of them; otherwise reports the smallest tested
    witness time with the violating model.
    """
    crit = critical_times(scenario, formula)
    base = scenario.model
    for t in crit.points:
        model = model_at(scenario.word, base, t, scenario.params)
        if not evaluate(model, formula):
            return Verdict(
                holds=False,
                time=t,
                model=model,
                explanation=f"formula is false at time {t}",
                exact=crit.exact,
                tested_points=len(crit.points),
            )
    return Verdict(holds=True, exact=crit.exact, tested_points=len(crit.points))

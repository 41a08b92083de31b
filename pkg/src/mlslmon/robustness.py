"""Action independence, trace equivalence, and the similarity metrics.

Two actions are independent when they belong to different cars, or to the
same car with exactly one of them an acceleration change (lane bookkeeping
and dynamics commute).  Words are causally equivalent when one can be turned
into the other by repeatedly swapping adjacent independent letters; instead
of searching we compare canonical representatives: the lexicographically
least topological order of the dependence DAG, the standard normal form of a
trace.  Timed words are compared per car, on the non-acceleration
projection, after requiring equal causality, equal acceleration projections
and an equal timespan; models are compared by positions, fronts and view
edges, with any bookkeeping difference collapsing to infinite distance.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence, Union

from .traffic import (
    Action,
    EndMarker,
    Model,
    TimedWord,
    action_car,
    is_acceleration,
    project,
)

INF = float("inf")
Distance = Union[Fraction, float]


class SeparationError(ValueError):
    """The word's same-car action stamps are too close for the requested
    temporal margin."""


def independent(a: Action, b: Action) -> bool:
    """Whether the order of two adjacent actions is irrelevant."""
    if isinstance(a, EndMarker) or isinstance(b, EndMarker):
        raise ValueError("the end marker is not subject to reordering")
    if action_car(a) != action_car(b):
        return True
    return is_acceleration(a) != is_acceleration(b)


def _dependent(a: Action, b: Action) -> bool:
    # end markers are kept ordered against everything
    if isinstance(a, EndMarker) or isinstance(b, EndMarker):
        return True
    return not independent(a, b)


def _letter_key(action: Action) -> tuple:
    car = action_car(action)
    return (
        car if car is not None else "￿",
        type(action).__name__,
        str(action),
    )


def canonical_form(word: Sequence[Action]) -> tuple[Action, ...]:
    """Lexicographically least linearization of the dependence DAG.

    Occurrences of the same letter are mutually dependent, so the greedy
    choice (smallest enabled letter first) is well defined and yields the
    unique normal form of the word's trace class.
    """
    n = len(word)
    preds = [0] * n
    succs: list[list[int]] = [[] for _ in range(n)]
    for j in range(n):
        for i in range(j):
            if _dependent(word[i], word[j]):
                succs[i].append(j)
                preds[j] += 1
    ready = sorted(
        (i for i in range(n) if preds[i] == 0),
        key=lambda i: (_letter_key(word[i]), i),
    )
    out: list[Action] = []
    while ready:
        i = min(ready, key=lambda k: (_letter_key(word[k]), k))
        ready.remove(i)
        out.append(word[i])
        for j in succs[i]:
            preds[j] -= 1
            if preds[j] == 0:
                ready.append(j)
    return tuple(out)


def causally_equivalent(a: Sequence[Action], b: Sequence[Action]) -> bool:
    """Same trace class: reachable from one another by adjacent swaps of
    independent letters.  Both sequences must end with the end marker."""
    for word in (a, b):
        if not word or not isinstance(word[-1], EndMarker):
            raise ValueError("action sequences must end with the end marker")
    if len(a) != len(b):
        return False
    return canonical_form(tuple(a)) == canonical_form(tuple(b))


# ---------------------------------------------------------------------------
# Metrics


def d_model(m1: Model, m2: Model) -> Distance:
    """Spatial distance: max deviation of positions, fronts and view edges;
    infinite when lane bookkeeping, lanes, or the valuation differ."""
    cars1, cars2 = m1.snapshot.cars, m2.snapshot.cars
    if set(cars1) != set(cars2):
        return INF
    if m1.view.lanes != m2.view.lanes:
        return INF
    if dict(m1.valuation) != dict(m2.valuation):
        return INF
    for car in cars1:
        if cars1[car].res != cars2[car].res or cars1[car].clm != cars2[car].clm:
            return INF
    deltas = [Fraction(0)]
    for car in cars1:
        deltas.append(abs(cars1[car].pos - cars2[car].pos))
        deltas.append(abs(cars1[car].front - cars2[car].front))
    r1, t1 = m1.view.extension
    r2, t2 = m2.view.extension
    deltas.append(abs(r1 - r2))
    deltas.append(abs(t1 - t2))
    return max(deltas)


def _acceleration_projection(word: TimedWord) -> tuple:
    return tuple(
        (a, t) for a, t in word.entries if is_acceleration(a) or isinstance(a, EndMarker)
    )


def _car_stamps_without_acc(word: TimedWord, car: str) -> list[tuple[Action, Fraction]]:
    return [
        (a, t)
        for a, t in project(word, car).entries
        if not is_acceleration(a) and not isinstance(a, EndMarker)
    ]


def d_time(w1: TimedWord, w2: TimedWord) -> Distance:
    """Temporal distance: max per-car stamp deviation on the
    non-acceleration projections.

    Infinite when the words are not causally equivalent, their acceleration
    projections differ (letters or stamps), or their timespans differ.
    """
    if w1.timespan() != w2.timespan():
        return INF
    if _acceleration_projection(w1) != _acceleration_projection(w2):
        return INF
    if not causally_equivalent(w1.actions(), w2.actions()):
        return INF
    cars = {action_car(a) for a in w1.actions()} - {None}
    worst = Fraction(0)
    for car in cars:
        seq1 = _car_stamps_without_acc(w1, car)
        seq2 = _car_stamps_without_acc(w2, car)
        # equal letter sequences are guaranteed by causal equivalence
        if [a for a, _ in seq1] != [a for a, _ in seq2]:
            return INF
        for (_, t1), (_, t2) in zip(seq1, seq2):
            worst = max(worst, abs(t1 - t2))
    return worst


def d_seq(m1: Model, w1: TimedWord, m2: Model, w2: TimedWord) -> Distance:
    """Distance of two evolutions: infinite unless the initial models agree
    exactly, otherwise the temporal distance of the words."""
    if m1 != m2:
        return INF
    return d_time(w1, w2)


def check_separation(word: TimedWord, eps: Fraction) -> bool:
    """Every pair of same-car action stamps (end marker aside) must be more
    than 2*eps apart, so an eps-perturbation cannot reorder a car's actions."""
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    cars = {action_car(a) for a in word.actions()} - {None}
    for car in cars:
        stamps = [
            t for a, t in project(word, car).entries if not isinstance(a, EndMarker)
        ]
        for i in range(len(stamps)):
            for j in range(i + 1, len(stamps)):
                if abs(stamps[i] - stamps[j]) <= 2 * eps:
                    return False
    return True

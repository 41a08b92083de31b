"""Turn a satisfying solver assignment back into a concrete counterexample.

A witness names the freeze time, the violating frozen model (with perturbed
data in robust mode) and, in robust mode, the induced perturbed timed word.
Every witness is replay-checked: the negated formula must hold on the
reconstructed model under the direct evaluator, otherwise the encoder and
the evaluator disagree and we fail loudly.  Robust witnesses additionally
re-verify the metric bounds exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional

from .encode import GlobalEncoding
from .formula import Not
from .robustness import Distance, d_model, d_time
from .semantics import evaluate
from .smt import Algebraic, ModelValue, SolverResult
from .traffic import (
    END,
    CarState,
    EndMarker,
    Model,
    TimedWord,
    TrafficSnapshot,
    View,
)


class WitnessError(RuntimeError):
    """The solver said sat but no sound witness could be reconstructed."""


class ReplayMismatch(WitnessError):
    """Internal consistency failure: the reconstructed model does not
    violate the formula under direct evaluation (encoder bug signal)."""


@dataclass(frozen=True)
class Witness:
    freeze_time: Fraction
    model: Model
    final_data: Mapping[str, Mapping[str, Fraction]]
    mode: str  # "exact" | "robust"
    replay_verified: bool
    perturbed_word: Optional[TimedWord] = None
    time_distance: Optional[Distance] = None
    model_distance: Optional[Distance] = None
    approximate: bool = False
    note: str = ""


def _exact(assignment: Mapping[str, ModelValue], name: str) -> Fraction:
    try:
        value = assignment[name]
    except KeyError:
        raise WitnessError(f"solver assignment misses variable {name!r}") from None
    if isinstance(value, Algebraic):
        if value.approx is None:
            raise WitnessError(f"variable {name!r} has an irrational value {value.raw}")
        return value.approx
    return value


def _lane(value: Fraction, name: str) -> int:
    if value.denominator != 1:
        raise WitnessError(f"lane variable {name!r} carries non-integer value {value}")
    return int(value)


def _final_states(
    encoding: GlobalEncoding, assignment: Mapping[str, ModelValue], perturbed: bool
) -> dict[str, CarState]:
    layout = encoding.layout
    states = {}
    for car in layout.cars:
        idx = layout.final_index(car)
        if perturbed:
            name_of = lambda f, car=car: layout.perturbed_final(car, f)
        else:
            name_of = lambda f, car=car, idx=idx: layout.data(car, idx, f)
        pos = _exact(assignment, name_of("pos"))
        sf = _exact(assignment, name_of("sf"))
        res_a = _lane(_exact(assignment, name_of("res")), name_of("res"))
        res_b = _lane(_exact(assignment, name_of("res2")), name_of("res2"))
        claimed = _lane(_exact(assignment, name_of("clm")), name_of("clm"))
        res = frozenset(x for x in (res_a, res_b) if x != -1)
        clm = frozenset(x for x in (claimed,) if x != -1)
        spd = _exact(assignment, layout.data(car, idx, "spd"))
        acc = _exact(assignment, layout.data(car, idx, "acc"))
        states[car] = CarState(pos=pos, sf=sf, spd=spd, acc=acc, res=res, clm=clm)
    return states


def _perturbed_word(encoding: GlobalEncoding, assignment: Mapping[str, ModelValue]) -> TimedWord:
    layout = encoding.layout
    scenario = encoding.scenario
    stamped: list[tuple[Fraction, int]] = []
    letters = {}
    order = {entry: i for i, entry in enumerate(scenario.word.entries)}
    for car in layout.cars:
        entries = layout.projections[car].entries
        for i, (action, _stamp) in enumerate(entries, start=1):
            if isinstance(action, EndMarker):
                continue
            new_stamp = _exact(assignment, layout.perturbed_time(car, i + 1))
            key = order[(action, _stamp)]
            stamped.append((new_stamp, key))
            letters[key] = action
    stamped.sort()
    pairs = [(letters[key], stamp) for stamp, key in stamped]
    pairs.append((END, scenario.word.end_time))
    return TimedWord(tuple(pairs))


def extract_witness(
    result: SolverResult, encoding: GlobalEncoding, approximate: bool = False
) -> Witness:
    """Reconstruct, replay-check and (in robust mode) metric-check a witness.

    With ``approximate`` the values may stem from decimal approximations of
    algebraic numbers; the replay and metric checks then downgrade from hard
    failures to a recorded note.
    """
    if not result.is_sat:
        raise WitnessError(f"no witness to extract from a {result.status} result")
    assignment = result.assignment
    scenario = encoding.scenario
    layout = encoding.layout
    robust = encoding.mode == "robust"

    freeze = _exact(assignment, layout.tf)
    states = _final_states(encoding, assignment, perturbed=robust)
    if robust:
        x_l = _exact(assignment, layout.perturbed_view_left)
        x_r = _exact(assignment, layout.perturbed_view_right)
    else:
        x_l = _exact(assignment, layout.view_left)
        x_r = _exact(assignment, layout.view_right)
    view = View(scenario.view.lanes, (x_l, x_r), scenario.view.owner)
    model = Model(TrafficSnapshot(states), view, scenario.valuation)

    violates = evaluate(model, Not(encoding.formula))
    note = ""
    if not violates:
        if not approximate:
            raise ReplayMismatch(
                "reconstructed witness does not violate the formula under direct "
                "evaluation; the encoding and the evaluator disagree"
            )
        note = (
            "witness built from decimal approximations of algebraic values; "
            "replay on the rounded model did not confirm the violation"
        )

    final_data = {
        car: {
            "pos": states[car].pos,
            "sf": states[car].sf,
            "spd": states[car].spd,
            "acc": states[car].acc,
        }
        for car in layout.cars
    }

    perturbed_word = None
    time_dist: Optional[Distance] = None
    model_dist: Optional[Distance] = None
    if robust:
        perturbed_word = _perturbed_word(encoding, assignment)
        time_dist = d_time(scenario.word, perturbed_word)
        if not (time_dist <= encoding.eps) and not approximate:
            raise WitnessError(
                f"perturbed word distance {time_dist} exceeds eps {encoding.eps}"
            )
        exact_states = _final_states(encoding, assignment, perturbed=False)
        owner = scenario.view.owner
        drift = (
            _exact(assignment, layout.data(owner, layout.final_index(owner), "pos"))
            - scenario.initial[owner].pos
        )
        r, t = scenario.view.extension
        exact_view = View(scenario.view.lanes, (r + drift, t + drift), owner)
        exact_model = Model(TrafficSnapshot(exact_states), exact_view, scenario.valuation)
        model_dist = d_model(exact_model, model)
        if not (model_dist <= encoding.delta) and not approximate:
            raise WitnessError(
                f"frozen-model perturbation {model_dist} exceeds delta {encoding.delta}"
            )

    return Witness(
        freeze_time=freeze,
        model=model,
        final_data=final_data,
        mode=encoding.mode,
        replay_verified=violates,
        perturbed_word=perturbed_word,
        time_distance=time_dist,
        model_distance=model_dist,
        approximate=approximate,
        note=note,
    )

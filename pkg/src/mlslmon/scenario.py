"""Scenario files: one JSON document bundling road constants, the initial
snapshot, the observation window and the recorded timed word.

Format::

    {
      "maxDeceleration": 12,
      "lanes": [1, 3],
      "cars": [
        {"id": "C", "pos": 60, "speed": 6, "acc": 0, "physicalLength": 3,
         "res": [2], "clm": [3]},
        ...
      ],
      "view": {"owner": "E", "lanes": [1, 3], "extension": [0, 90]},
      "valuation": {"ego": "E", "c": "C"},
      "word": [
        {"action": "wdReservation", "car": "D", "lane": 3, "time": 1},
        {"action": "setReservation", "car": "E", "time": "1.1"},
        {"action": "end", "time": "6.1"}
      ]
    }

Rationals may be written as integers or as strings ("7/6", "1.1"); both are
parsed exactly.  Plain JSON decimals are also read exactly (the decoder is
configured to hand their source text to Fraction).  The reservation length of
each car is derived from its speed; a redundant "sf" field is accepted but
must match the derived value exactly.  The end marker entry is optional: the
last stamp closes the word either way.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .rational import parse_rational
from .traffic import (
    END,
    Action,
    CarState,
    EndMarker,
    Model,
    RoadParams,
    SetAcceleration,
    SetClaim,
    SetReservation,
    TimedWord,
    TrafficSnapshot,
    ValidationError,
    View,
    WithdrawClaim,
    WithdrawReservation,
    action_car,
    project,
    to_transition_sequence,
    validate_snapshot,
)

ACTION_NAMES = ("setClaim", "setReservation", "wdClaim", "wdReservation", "setAcc", "end")


@dataclass(frozen=True)
class Scenario:
    """A validated monitoring problem instance."""

    max_deceleration: Fraction
    lanes: tuple[int, int]
    physical_length: Mapping[str, Fraction]
    initial: TrafficSnapshot
    word: TimedWord
    view: View
    valuation: Mapping[str, str]

    @property
    def params(self) -> RoadParams:
        return RoadParams(self.max_deceleration, self.physical_length)

    @property
    def model(self) -> Model:
        return Model(self.initial, self.view, self.valuation)

    def car_ids(self) -> list[str]:
        return sorted(self.initial.car_ids())


def _parse_action(entry: dict, index: int) -> tuple[Action, Fraction]:
    try:
        name = entry["action"]
        time = parse_rational(entry["time"])
    except KeyError as exc:
        raise ValidationError(f"word entry {index}: missing field {exc}") from None
    if name == "end":
        return END, time
    try:
        car = entry["car"]
    except KeyError:
        raise ValidationError(f"word entry {index}: action {name!r} needs a car") from None
    if name == "setClaim":
        return SetClaim(car, int(entry["lane"])), time
    if name == "setReservation":
        return SetReservation(car), time
    if name == "wdClaim":
        return WithdrawClaim(car), time
    if name == "wdReservation":
        return WithdrawReservation(car, int(entry["lane"])), time
    if name == "setAcc":
        return SetAcceleration(car, parse_rational(entry["value"])), time
    raise ValidationError(f"word entry {index}: unknown action {name!r} (expected one of {ACTION_NAMES})")


def scenario_from_dict(doc: dict) -> Scenario:
    for key in ("maxDeceleration", "lanes", "cars", "view", "word"):
        if key not in doc:
            raise ValidationError(f"scenario: missing top-level field {key!r}")

    max_dec = parse_rational(doc["maxDeceleration"])
    if max_dec <= 0:
        raise ValidationError(f"maxDeceleration must be positive, got {max_dec}")
    lane_lo, lane_hi = (int(x) for x in doc["lanes"])
    if lane_lo < 1 or lane_hi < lane_lo:
        raise ValidationError(f"lane interval [{lane_lo}, {lane_hi}] invalid")

    lengths: dict[str, Fraction] = {}
    cars: dict[str, CarState] = {}
    for car in doc["cars"]:
        cid = car["id"]
        if not cid or not isinstance(cid, str):
            raise ValidationError(f"car id {cid!r} must be a nonempty string")
        if cid in cars:
            raise ValidationError(f"duplicate car id {cid!r}")
        length = parse_rational(car["physicalLength"])
        if length <= 0:
            raise ValidationError(f"car {cid}: physicalLength must be positive")
        lengths[cid] = length
        speed = parse_rational(car["speed"])
        sf = speed * speed / max_dec + length
        if "sf" in car:
            stated = parse_rational(car["sf"])
            if stated != sf:
                raise ValidationError(
                    f"car {cid}: stated reservation length {stated} != derived {sf} "
                    f"(speed^2/maxDeceleration + physicalLength)"
                )
        cars[cid] = CarState(
            pos=parse_rational(car["pos"]),
            spd=speed,
            acc=parse_rational(car.get("acc", 0)),
            sf=sf,
            res=frozenset(int(n) for n in car["res"]),
            clm=frozenset(int(n) for n in car.get("clm", ())),
        )
    snapshot = TrafficSnapshot(cars)
    validate_snapshot(snapshot, (lane_lo, lane_hi))

    view_doc = doc["view"]
    owner = view_doc["owner"]
    if owner not in cars:
        raise ValidationError(f"view owner {owner!r} is not a car")
    vlo, vhi = (int(x) for x in view_doc["lanes"])
    if not (lane_lo <= vlo and vhi <= lane_hi):
        raise ValidationError(f"view lanes [{vlo}, {vhi}] outside road [{lane_lo}, {lane_hi}]")
    ext_l, ext_r = (parse_rational(x) for x in view_doc["extension"])
    view = View((vlo, vhi), (ext_l, ext_r), owner)

    valuation = dict(doc.get("valuation", {}))
    for var, target in valuation.items():
        if target not in cars:
            raise ValidationError(f"valuation maps {var!r} to unknown car {target!r}")
    valuation.setdefault("ego", owner)
    if valuation["ego"] != owner:
        raise ValidationError(
            f"valuation maps ego to {valuation['ego']!r}, view owner is {owner!r}"
        )

    entries = [_parse_action(e, i) for i, e in enumerate(doc["word"])]
    for action, stamp in entries:
        car = action_car(action)
        if car is not None and car not in cars:
            raise ValidationError(f"word action {action} refers to unknown car {car!r}")
        if stamp < 0:
            raise ValidationError(f"word action {action} has negative stamp {stamp}")
    if not entries or not isinstance(entries[-1][0], EndMarker):
        last_stamp = entries[-1][1] if entries else Fraction(0)
        entries.append((END, last_stamp))
    word = TimedWord(tuple(entries))

    scenario = Scenario(
        max_deceleration=max_dec,
        lanes=(lane_lo, lane_hi),
        physical_length=lengths,
        initial=snapshot,
        word=word,
        view=view,
        valuation=valuation,
    )
    _validate_word(scenario)
    return scenario


def _validate_word(scenario: Scenario) -> None:
    # Same-car actions need pairwise distinct stamps; stamps of different
    # cars may coincide.  The replay below surfaces any guard violation.
    for car in scenario.car_ids():
        stamps = [t for a, t in project(scenario.word, car).entries
                  if not isinstance(a, EndMarker)]
        if len(stamps) != len(set(stamps)):
            raise ValidationError(f"car {car}: two discrete actions share a time stamp")
    for lane_action in scenario.word.actions():
        lane = getattr(lane_action, "lane", getattr(lane_action, "kept_lane", None))
        if lane is not None:
            lo, hi = scenario.lanes
            if not (lo <= lane <= hi):
                raise ValidationError(f"word action {lane_action}: lane outside road interval")
    to_transition_sequence(scenario.word, scenario.initial, scenario.params)


def load_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as handle:
        doc = json.load(handle, parse_float=Fraction)
    return scenario_from_dict(doc)

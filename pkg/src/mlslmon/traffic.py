"""Traffic snapshots, car actions, timed words and the transition sequences
they induce.

The motorway abstraction is two-dimensional: discrete lanes (positive
integers) and a continuous position axis.  Every car owns a *reservation*
(the space it occupies plus its braking distance) on one or two adjacent
lanes, and may additionally *claim* one adjacent lane, the formal stand-in
for a turn signal.  All numeric state is exact rational; evolving a snapshot
by a delay or a discrete action is a pure function.

Conventions that are easy to get wrong:

* ``WithdrawReservation(car, lane)`` KEEPS ``lane`` and drops the other one.
  The action name follows the traditional reading ("withdraw a reservation,
  staying on lane n"); the parameter is the lane retained, not the lane
  removed.
* A timed word always ends with a single ``EndMarker`` whose time stamp
  closes the word's timespan; the marker acts as a zero-time no-op.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Union

CarId = str
LaneId = int

ZERO = Fraction(0)


class ValidationError(ValueError):
    """A scenario or snapshot violates a structural invariant."""


class GuardError(ValidationError):
    """A discrete action was applied in a state where its guard fails."""


# ---------------------------------------------------------------------------
# Actions


@dataclass(frozen=True)
class SetClaim:
    car: CarId
    lane: LaneId

    def __str__(self):
        return f"c({self.car},{self.lane})"


@dataclass(frozen=True)
class SetReservation:
    car: CarId

    def __str__(self):
        return f"r({self.car})"


@dataclass(frozen=True)
class WithdrawClaim:
    car: CarId

    def __str__(self):
        return f"wdc({self.car})"


@dataclass(frozen=True)
class WithdrawReservation:
    """Shrink a two-lane reservation to the single lane that is KEPT."""

    car: CarId
    kept_lane: LaneId

    def __str__(self):
        return f"wdr({self.car},{self.kept_lane})"


@dataclass(frozen=True)
class SetAcceleration:
    car: CarId
    value: Fraction

    def __str__(self):
        return f"acc({self.car},{self.value})"


@dataclass(frozen=True)
class EndMarker:
    """Word terminator; carries no car and changes nothing."""

    def __str__(self):
        return "end"


Action = Union[
    SetClaim, SetReservation, WithdrawClaim, WithdrawReservation,
    SetAcceleration, EndMarker,
]

END = EndMarker()


def action_car(action: Action) -> CarId | None:
    return getattr(action, "car", None)


def is_acceleration(action: Action) -> bool:
    return isinstance(action, SetAcceleration)


# ---------------------------------------------------------------------------
# Snapshots


@dataclass(frozen=True)
class CarState:
    """Per-car data of one traffic snapshot.

    ``sf`` is the reservation length: braking distance plus physical length.
    ``res`` holds one or two adjacent lanes, ``clm`` at most one lane.
    """

    pos: Fraction
    sf: Fraction
    spd: Fraction
    acc: Fraction
    res: frozenset[LaneId]
    clm: frozenset[LaneId]

    def occupies(self, lane: LaneId) -> bool:
        return lane in self.res or lane in self.clm

    @property
    def front(self) -> Fraction:
        return self.pos + self.sf


class TrafficSnapshot:
    """Immutable map from car id to :class:`CarState`."""

    __slots__ = ("_cars",)

    def __init__(self, cars: Mapping[CarId, CarState]):
        object.__setattr__(self, "_cars", dict(cars))

    @property
    def cars(self) -> Mapping[CarId, CarState]:
        return self._cars

    def car_ids(self) -> list[CarId]:
        return list(self._cars)

    def __getitem__(self, car: CarId) -> CarState:
        return self._cars[car]

    def __contains__(self, car: CarId) -> bool:
        return car in self._cars

    def __iter__(self):
        return iter(self._cars)

    def replace(self, car: CarId, **changes) -> "TrafficSnapshot":
        new = dict(self._cars)
        state = new[car]
        new[car] = CarState(
            pos=changes.get("pos", state.pos),
            sf=changes.get("sf", state.sf),
            spd=changes.get("spd", state.spd),
            acc=changes.get("acc", state.acc),
            res=frozenset(changes.get("res", state.res)),
            clm=frozenset(changes.get("clm", state.clm)),
        )
        return TrafficSnapshot(new)

    def __eq__(self, other):
        return isinstance(other, TrafficSnapshot) and self._cars == other._cars

    def __hash__(self):
        return hash(tuple(sorted(self._cars.items())))

    def __repr__(self):
        parts = ", ".join(f"{c}: {s}" for c, s in sorted(self._cars.items()))
        return f"TrafficSnapshot({parts})"


@dataclass(frozen=True)
class RoadParams:
    """Scenario-wide dynamics constants: the shared maximal deceleration and
    each car's physical length."""

    max_deceleration: Fraction
    physical_length: Mapping[CarId, Fraction]

    def braking_reach(self, car: CarId, speed: Fraction) -> Fraction:
        """Reservation length at the given speed: spd^2/A plus body length."""
        return speed * speed / self.max_deceleration + self.physical_length[car]


def validate_snapshot(ts: TrafficSnapshot, lanes: tuple[int, int] | None = None) -> None:
    """Check the per-car structural invariants; raise ValidationError."""
    for car, st in ts.cars.items():
        if st.sf <= 0:
            raise ValidationError(f"car {car}: reservation length {st.sf} must be > 0")
        if len(st.res) not in (1, 2):
            raise ValidationError(f"car {car}: needs 1 or 2 reserved lanes, has {sorted(st.res)}")
        if len(st.clm) > 1:
            raise ValidationError(f"car {car}: more than one claimed lane {sorted(st.clm)}")
        if st.res & st.clm:
            raise ValidationError(f"car {car}: claim {sorted(st.clm)} overlaps reservation {sorted(st.res)}")
        if len(st.res) == 2:
            lo, hi = sorted(st.res)
            if hi - lo != 1:
                raise ValidationError(f"car {car}: reserved lanes {lo},{hi} are not adjacent")
            if st.clm:
                raise ValidationError(f"car {car}: claim present alongside a two-lane reservation")
        elif st.clm:
            (claimed,) = st.clm
            (reserved,) = st.res
            if abs(claimed - reserved) != 1:
                raise ValidationError(
                    f"car {car}: claimed lane {claimed} not adjacent to reserved lane {reserved}"
                )
        if lanes is not None:
            lo, hi = lanes
            for lane in st.res | st.clm:
                if not (lo <= lane <= hi):
                    raise ValidationError(f"car {car}: lane {lane} outside road interval [{lo}, {hi}]")


def apply_delay(ts: TrafficSnapshot, z: Fraction, params: RoadParams) -> TrafficSnapshot:
    """Let ``z`` time units pass: uniform acceleration kinematics, exact.

    pos' = pos + spd*z + acc*z^2/2, spd' = spd + acc*z, and the reservation
    length is recomputed from the new speed.  Lane bookkeeping is untouched.
    """
    if z < 0:
        raise ValidationError(f"negative delay {z}")
    new = {}
    for car, st in ts.cars.items():
        spd2 = st.spd + st.acc * z
        new[car] = CarState(
            pos=st.pos + st.spd * z + st.acc * z * z / 2,
            spd=spd2,
            sf=params.braking_reach(car, spd2),
            acc=st.acc,
            res=st.res,
            clm=st.clm,
        )
    return TrafficSnapshot(new)


def apply_discrete(ts: TrafficSnapshot, action: Action) -> TrafficSnapshot:
    """Apply one discrete action, checking its guard.

    Guards: a claim may only be set from a single-lane reservation on an
    adjacent lane with no standing claim; reservations are only set from a
    claim; claims are only withdrawn when present; a reservation is only
    withdrawn from a two-lane reservation, naming the lane kept.
    """
    if isinstance(action, EndMarker):
        return ts
    car = action.car
    if car not in ts:
        raise GuardError(f"{action}: unknown car {car!r}")
    st = ts[car]
    if isinstance(action, SetAcceleration):
        return ts.replace(car, acc=action.value)
    if isinstance(action, SetClaim):
        if st.clm:
            raise GuardError(f"{action}: car {car} already claims lane {sorted(st.clm)}")
        if len(st.res) != 1:
            raise GuardError(f"{action}: car {car} reserves {sorted(st.res)}, not a single lane")
        (reserved,) = st.res
        if abs(action.lane - reserved) != 1:
            raise GuardError(
                f"{action}: lane {action.lane} not adjacent to reserved lane {reserved}"
            )
        return ts.replace(car, clm={action.lane})
    if isinstance(action, SetReservation):
        if not st.clm:
            raise GuardError(f"{action}: car {car} has no claim to turn into a reservation")
        return ts.replace(car, res=st.res | st.clm, clm=frozenset())
    if isinstance(action, WithdrawClaim):
        if not st.clm:
            raise GuardError(f"{action}: car {car} has no claim to withdraw")
        return ts.replace(car, clm=frozenset())
    if isinstance(action, WithdrawReservation):
        if len(st.res) != 2:
            raise GuardError(f"{action}: car {car} reserves {sorted(st.res)}, nothing to withdraw")
        if action.kept_lane not in st.res:
            raise GuardError(
                f"{action}: kept lane {action.kept_lane} not among reserved {sorted(st.res)}"
            )
        return ts.replace(car, res={action.kept_lane})
    raise TypeError(f"unknown action {action!r}")


# ---------------------------------------------------------------------------
# Timed words


@dataclass(frozen=True)
class TimedWord:
    """Sequence of (action, time) pairs with weakly increasing stamps,
    terminated by the unique end marker."""

    entries: tuple[tuple[Action, Fraction], ...]

    def __post_init__(self):
        if not self.entries:
            raise ValidationError("timed word must at least contain the end marker")
        prev = ZERO
        for action, stamp in self.entries:
            if stamp < prev:
                raise ValidationError(f"time stamps not weakly increasing at {action} @ {stamp}")
            prev = stamp
        *body, (last, _) = self.entries
        if not isinstance(last, EndMarker):
            raise ValidationError("timed word must end with the end marker")
        for action, _ in body:
            if isinstance(action, EndMarker):
                raise ValidationError("end marker may only appear once, at the end")
        if self.entries[0][1] < 0:
            raise ValidationError("time stamps must be nonnegative")

    @property
    def end_time(self) -> Fraction:
        return self.entries[-1][1]

    def timespan(self) -> tuple[Fraction, Fraction]:
        return (ZERO, self.end_time)

    def actions(self) -> list[Action]:
        return [a for a, _ in self.entries]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def make_word(pairs: Iterable[tuple[Action, Fraction]]) -> TimedWord:
    return TimedWord(tuple((a, Fraction(t)) for a, t in pairs))


def project(word: TimedWord, car: CarId) -> TimedWord:
    """Keep exactly the given car's letters (plus the end marker), with their
    original time stamps."""
    kept = tuple(
        (a, t) for a, t in word.entries
        if isinstance(a, EndMarker) or action_car(a) == car
    )
    return TimedWord(kept)


def time_bounded_prefix(word: TimedWord, t: Fraction) -> TimedWord:
    """All pairs stamped <= t, re-terminated by an end marker at t."""
    t = Fraction(t)
    lo, hi = word.timespan()
    if not (lo <= t <= hi):
        raise ValidationError(f"time {t} outside word timespan [{lo}, {hi}]")
    kept = [
        (a, stamp) for a, stamp in word.entries[:-1] if stamp <= t
    ]
    kept.append((END, t))
    return TimedWord(tuple(kept))


# ---------------------------------------------------------------------------
# Transition sequences

Label = Union[Action, Fraction]  # discrete action or delay duration


@dataclass(frozen=True)
class TransitionSequence:
    """Alternating delay/action chain TS_1 ->d1 TS_2 ->a1 TS_3 -> ...

    For a word with n letters there are 2n labels: n delays interleaved with
    the n-1 proper actions, then a final zero delay that repeats the last
    snapshot.  ``snapshots`` lists the 2n distinct positions TS_1 .. TS_2n;
    the trailing zero delay maps TS_2n to itself.
    """

    snapshots: tuple[TrafficSnapshot, ...]
    labels: tuple[Label, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.snapshots):
            raise ValidationError("transition sequence shape mismatch")

    @property
    def final(self) -> TrafficSnapshot:
        return self.snapshots[-1]

    def steps(self):
        """Yield (before, label, after) triples, final zero delay included."""
        for i, label in enumerate(self.labels):
            before = self.snapshots[i]
            after = self.snapshots[i + 1] if i + 1 < len(self.snapshots) else self.snapshots[-1]
            yield before, label, after


def to_transition_sequence(
    word: TimedWord, ts: TrafficSnapshot, params: RoadParams
) -> TransitionSequence:
    """Run the word: delay to each stamp, then fire the discrete action.

    The end marker contributes its delay and a final zero-time step.
    """
    snapshots = [ts]
    labels: list[Label] = []
    clock = ZERO
    current = ts
    for action, stamp in word.entries:
        delay = stamp - clock
        clock = stamp
        current = apply_delay(current, delay, params)
        labels.append(delay)
        snapshots.append(current)
        if isinstance(action, EndMarker):
            labels.append(ZERO)  # the marker itself: zero-time no-op
        else:
            current = apply_discrete(current, action)
            labels.append(action)
            snapshots.append(current)
    return TransitionSequence(tuple(snapshots), tuple(labels))


def snapshot_at(
    word: TimedWord, ts: TrafficSnapshot, t: Fraction, params: RoadParams
) -> TrafficSnapshot:
    """The snapshot reached at time t: run the time-bounded prefix."""
    prefix = time_bounded_prefix(word, t)
    return to_transition_sequence(prefix, ts, params).final


# ---------------------------------------------------------------------------
# Views and models


@dataclass(frozen=True)
class View:
    """A car-owned window: a lane interval and a position extension.

    The lane interval may be empty (low > high); the extension never is.
    """

    lanes: tuple[int, int]
    extension: tuple[Fraction, Fraction]
    owner: CarId

    def __post_init__(self):
        r, t = self.extension
        if r > t:
            raise ValidationError(f"view extension [{r}, {t}] reversed")

    @property
    def lane_count(self) -> int:
        lo, hi = self.lanes
        return max(0, hi - lo + 1)

    def with_lanes(self, lo: int, hi: int) -> "View":
        return View((lo, hi), self.extension, self.owner)

    def with_extension(self, r: Fraction, t: Fraction) -> "View":
        return View(self.lanes, (r, t), self.owner)


@dataclass(frozen=True)
class Model:
    """A snapshot seen through a view under a variable valuation."""

    snapshot: TrafficSnapshot
    view: View
    valuation: Mapping[str, CarId] = field(default_factory=dict)

    def __post_init__(self):
        val = dict(self.valuation)
        val.setdefault("ego", self.view.owner)
        if val["ego"] != self.view.owner:
            raise ValidationError(
                f"valuation maps ego to {val['ego']!r} but the view owner is {self.view.owner!r}"
            )
        object.__setattr__(self, "valuation", val)

    def resolve(self, variable: str) -> CarId:
        try:
            return self.valuation[variable]
        except KeyError:
            raise ValidationError(f"variable {variable!r} unbound by the valuation") from None

    def with_snapshot_and_shift(self, ts: TrafficSnapshot, shift: Fraction) -> "Model":
        r, t = self.view.extension
        return Model(ts, self.view.with_extension(r + shift, t + shift), self.valuation)

    def __eq__(self, other):
        return (
            isinstance(other, Model)
            and self.snapshot == other.snapshot
            and self.view == other.view
            and dict(self.valuation) == dict(other.valuation)
        )

    def __hash__(self):
        return hash((self.snapshot, self.view, tuple(sorted(self.valuation.items()))))


def model_at(word: TimedWord, model: Model, t: Fraction, params: RoadParams) -> Model:
    """Model at time t: snapshot evolved, view co-moving with its owner."""
    ts = snapshot_at(word, model.snapshot, t, params)
    owner = model.view.owner
    shift = ts[owner].pos - model.snapshot[owner].pos
    return model.with_snapshot_and_shift(ts, shift)

"""Compile a scenario and a spatial formula into real arithmetic.

The layout gives every car one column of state variables per letter of its
own projected word, plus one initial column (cars see only their own actions;
their columns differ in length).  A free real ``tf`` freezes the evolution:
for every step, exactly one of three guards applies — the step lies fully
before the freeze and takes effect, the freeze interrupts the delay, or the
step lies beyond the freeze and is replaced by a zero-time no-op.  The
spatial formula is then translated over the final column, with the view
shifted by the owner's displacement.

The robust variant additionally lets the time stamps of non-acceleration
actions float inside +-eps (acceleration stamps and the end marker stay
fixed), and gives the final column a +-delta shadow copy of every position
and front while lane bookkeeping is copied exactly; the formula is evaluated
on the shadow.

Lane-valued variables range over the reals and are only ever compared with
lane numerals; "no lane" is the numeral -1 (lanes start at 1).
"""

from __future__ import annotations

import re as _re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

from . import rcf
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
)
from .rcf import RFormula, RTerm, add, const, div_const, eq, le, lt, mul, sub, var
from .robustness import SeparationError, check_separation
from .scenario import Scenario
from .traffic import (
    Action,
    EndMarker,
    SetAcceleration,
    SetClaim,
    SetReservation,
    TimedWord,
    TrafficSnapshot,
    ValidationError,
    WithdrawClaim,
    WithdrawReservation,
    project,
)

NO_LANE = const(-1)

DATA_FIELDS = ("res", "res2", "pos", "sf", "clm", "acc", "spd")


def _sanitize(token: str) -> str:
    cleaned = _re.sub(r"[^A-Za-z0-9_]", "_", token)
    if not cleaned or not (cleaned[0].isalpha() or cleaned[0] == "_"):
        cleaned = "c_" + cleaned
    return cleaned


@dataclass(frozen=True)
class VarLayout:
    """Variable naming for one encoding.

    Per car: columns 1..n+1 of the seven data fields, and time variables
    t_1..t_{n+1} (t_1 is the scenario start, t_{i+1} carries the stamp of the
    car's i-th letter).  The final column is simply the last one.  Robust
    layouts add perturbed time variables and a perturbed final data column.
    """

    cars: tuple[str, ...]
    tokens: Mapping[str, str]
    projections: Mapping[str, TimedWord]
    robust: bool

    @property
    def tf(self) -> str:
        return "tf"

    def columns(self, car: str) -> int:
        return len(self.projections[car].entries) + 1

    def final_index(self, car: str) -> int:
        return self.columns(car)

    def data(self, car: str, index: int, field_name: str) -> str:
        return f"{field_name}_{self.tokens[car]}_{index}"

    def time(self, car: str, index: int) -> str:
        return f"t_{self.tokens[car]}_{index}"

    def perturbed_time(self, car: str, index: int) -> str:
        return f"pt_{self.tokens[car]}_{index}"

    def perturbed_final(self, car: str, field_name: str) -> str:
        return f"p{field_name}_{self.tokens[car]}_{self.final_index(car)}"

    @property
    def view_left(self) -> str:
        return "xfl"

    @property
    def view_right(self) -> str:
        return "xfr"

    @property
    def perturbed_view_left(self) -> str:
        return "pxfl"

    @property
    def perturbed_view_right(self) -> str:
        return "pxfr"

    def declared(self) -> list[str]:
        """All layout variables in deterministic declaration order."""
        names: list[str] = []
        for car in self.cars:
            for i in range(1, self.columns(car) + 1):
                names.extend(self.data(car, i, f) for f in DATA_FIELDS)
        for car in self.cars:
            for i in range(1, self.columns(car) + 1):
                names.append(self.time(car, i))
        names += [self.tf, self.view_left, self.view_right]
        if self.robust:
            for car in self.cars:
                for i in range(1, self.columns(car) + 1):
                    names.append(self.perturbed_time(car, i))
            for car in self.cars:
                for f in ("pos", "sf", "res", "res2", "clm"):
                    names.append(self.perturbed_final(car, f))
            names += [self.perturbed_view_left, self.perturbed_view_right]
        return names

    def final_column_terms(self, car: str, perturbed: bool = False) -> dict[str, RTerm]:
        idx = self.final_index(car)
        if perturbed:
            return {f: var(self.perturbed_final(car, f)) for f in ("res", "res2", "pos", "sf", "clm")}
        return {f: var(self.data(car, idx, f)) for f in DATA_FIELDS}

    def initial_column_terms(self, car: str) -> dict[str, RTerm]:
        return {f: var(self.data(car, 1, f)) for f in DATA_FIELDS}


def layout_vars(word: TimedWord, cars, robust: bool = False) -> VarLayout:
    ordered = tuple(sorted(cars))
    tokens: dict[str, str] = {}
    used: set[str] = set()
    for car in ordered:
        token = _sanitize(car)
        while token in used:
            token += "_"
        used.add(token)
        tokens[car] = token
    projections = {car: project(word, car) for car in ordered}
    return VarLayout(cars=ordered, tokens=tokens, projections=projections, robust=robust)


# ---------------------------------------------------------------------------
# State transformations


def _res_slots(res: frozenset[int]) -> tuple[int, int]:
    lanes = sorted(res)
    if len(lanes) == 1:
        return lanes[0], -1
    return lanes[0], lanes[1]


def transform_init(ts: TrafficSnapshot, layout: VarLayout) -> RFormula:
    """Pin every car's first column to the snapshot values."""
    parts = []
    for car in layout.cars:
        st = ts[car]
        first, second = _res_slots(st.res)
        claimed = next(iter(st.clm)) if st.clm else -1
        col = layout.initial_column_terms(car)
        parts += [
            eq(col["pos"], const(st.pos)),
            eq(col["res"], const(first)),
            eq(col["res2"], const(second)),
            eq(col["spd"], const(st.spd)),
            eq(col["acc"], const(st.acc)),
            eq(col["clm"], const(claimed)),
            eq(col["sf"], const(st.sf)),
        ]
    return rcf.rand(*parts)


def transform_delay(
    layout: VarLayout, car: str, index: int, z: RTerm, scenario: Scenario
) -> RFormula:
    """Continuous update of column index -> index+1 under delay term z."""
    pos_i = var(layout.data(car, index, "pos"))
    spd_i = var(layout.data(car, index, "spd"))
    acc_i = var(layout.data(car, index, "acc"))
    nxt = index + 1
    new_speed = add(mul(acc_i, z), spd_i)
    return rcf.rand(
        eq(
            var(layout.data(car, nxt, "pos")),
            add(pos_i, mul(spd_i, z), mul(const(Fraction(1, 2)), acc_i, z, z)),
        ),
        eq(var(layout.data(car, nxt, "spd")), new_speed),
        eq(
            var(layout.data(car, nxt, "sf")),
            add(
                div_const(mul(new_speed, new_speed), scenario.max_deceleration),
                const(scenario.physical_length[car]),
            ),
        ),
    )


def _identity(layout: VarLayout, car: str, index: int, fields: tuple[str, ...]) -> list[RFormula]:
    nxt = index + 1
    return [
        eq(var(layout.data(car, nxt, f)), var(layout.data(car, index, f)))
        for f in fields
    ]


def transform_discrete(layout: VarLayout, car: str, index: int, action: Action) -> RFormula:
    """Discrete update of the bookkeeping fields for one action."""
    nxt = index + 1
    if isinstance(action, SetClaim):
        parts = [eq(var(layout.data(car, nxt, "clm")), const(action.lane))]
        parts += _identity(layout, car, index, ("res", "res2", "acc"))
    elif isinstance(action, SetReservation):
        parts = [
            eq(var(layout.data(car, nxt, "res2")), var(layout.data(car, index, "clm"))),
            eq(var(layout.data(car, nxt, "clm")), NO_LANE),
        ]
        parts += _identity(layout, car, index, ("res", "acc"))
    elif isinstance(action, WithdrawReservation):
        parts = [
            eq(var(layout.data(car, nxt, "res")), const(action.kept_lane)),
            eq(var(layout.data(car, nxt, "res2")), NO_LANE),
        ]
        parts += _identity(layout, car, index, ("clm", "acc"))
    elif isinstance(action, WithdrawClaim):
        parts = [eq(var(layout.data(car, nxt, "clm")), NO_LANE)]
        parts += _identity(layout, car, index, ("res", "res2", "acc"))
    elif isinstance(action, SetAcceleration):
        parts = [eq(var(layout.data(car, nxt, "acc")), const(action.value))]
        parts += _identity(layout, car, index, ("res", "res2", "clm"))
    elif isinstance(action, EndMarker):
        parts = _identity(layout, car, index, ("res", "res2", "clm", "acc"))
    else:
        raise TypeError(f"unknown action {action!r}")
    return rcf.rand(*parts)


def transform_act(
    layout: VarLayout, car: str, index: int, action: Action, z: RTerm, scenario: Scenario
) -> RFormula:
    return rcf.rand(
        transform_discrete(layout, car, index, action),
        transform_delay(layout, car, index, z, scenario),
    )


END_ACTION = EndMarker()


def transform_word(
    layout: VarLayout, scenario: Scenario, perturbed_times: bool = False
) -> RFormula:
    """Per car, per step: the three freeze guards.

    (1) step completes at or before tf: apply delay and action;
    (2) the freeze falls inside the delay: delay to tf, no action;
    (3) the step starts after tf: zero-time no-op.
    """
    tf = var(layout.tf)
    time_of: Callable[[str, int], RTerm]
    if perturbed_times:
        time_of = lambda car, i: var(layout.perturbed_time(car, i))
    else:
        time_of = lambda car, i: var(layout.time(car, i))
    parts: list[RFormula] = []
    for car in layout.cars:
        entries = layout.projections[car].entries
        for i, (action, _stamp) in enumerate(entries, start=1):
            t_cur = time_of(car, i)
            t_next = time_of(car, i + 1)
            parts.append(
                rcf.rimplies(
                    rcf.rand(le(t_cur, t_next), le(t_next, tf)),
                    transform_act(layout, car, i, action, sub(t_next, t_cur), scenario),
                )
            )
            parts.append(
                rcf.rimplies(
                    rcf.rand(le(t_cur, tf), lt(tf, t_next)),
                    transform_act(layout, car, i, END_ACTION, sub(tf, t_cur), scenario),
                )
            )
            parts.append(
                rcf.rimplies(
                    lt(tf, t_cur),
                    transform_act(layout, car, i, END_ACTION, const(0), scenario),
                )
            )
    return rcf.rand(*parts)


def time_bindings(layout: VarLayout) -> RFormula:
    """t_{C,1} = 0 and t_{C,i+1} = the stamp of the car's i-th letter."""
    parts = []
    for car in layout.cars:
        parts.append(eq(var(layout.time(car, 1)), const(0)))
        for i, (_action, stamp) in enumerate(layout.projections[car].entries, start=1):
            parts.append(eq(var(layout.time(car, i + 1)), const(stamp)))
    return rcf.rand(*parts)


def shake_times(layout: VarLayout, scenario: Scenario, eps: Fraction) -> RFormula:
    """Constrain the perturbed stamps.

    Non-acceleration stamps float inside +-eps of their recorded value,
    clamped to the word's timespan; acceleration stamps and the end marker
    are pinned.  The second conjunct of the source definition repeats the
    non-acceleration guard; only the complementary reading (acceleration
    stamps are frozen) is consistent with equal acceleration projections,
    so that is what is encoded here.
    """
    horizon = scenario.word.end_time
    parts = []
    for car in layout.cars:
        parts.append(eq(var(layout.perturbed_time(car, 1)), const(0)))
        entries = layout.projections[car].entries
        for i, (action, stamp) in enumerate(entries, start=1):
            t_var = var(layout.perturbed_time(car, i + 1))
            if isinstance(action, (EndMarker, SetAcceleration)):
                parts.append(eq(t_var, const(stamp)))
            else:
                parts.append(rcf.in_box(t_var, const(stamp), const(eps)))
                parts.append(le(const(0), t_var))
                parts.append(le(t_var, const(horizon)))
    return rcf.rand(*parts)


def shake_space(layout: VarLayout, scenario: Scenario, delta: Fraction) -> RFormula:
    """Tie the perturbed final column to the exact one.

    Positions and fronts may deviate by +-delta, the view edges by +-delta
    around the owner-shifted extension; reservations and claims are copied.
    """
    parts: list[RFormula] = []
    for car in layout.cars:
        exact = layout.final_column_terms(car)
        shadow = layout.final_column_terms(car, perturbed=True)
        parts.append(rcf.in_box(shadow["pos"], exact["pos"], const(delta)))
        parts.append(
            rcf.in_box(
                add(shadow["pos"], shadow["sf"]),
                add(exact["pos"], exact["sf"]),
                const(delta),
            )
        )
        parts.append(eq(shadow["clm"], exact["clm"]))
        parts.append(eq(shadow["res"], exact["res"]))
        parts.append(eq(shadow["res2"], exact["res2"]))
    owner = scenario.view.owner
    r, t = scenario.view.extension
    drift = sub(
        var(layout.data(owner, layout.final_index(owner), "pos")),
        var(layout.data(owner, 1, "pos")),
    )
    parts.append(
        rcf.in_box(var(layout.perturbed_view_left), add(const(r), drift), const(delta))
    )
    parts.append(
        rcf.in_box(var(layout.perturbed_view_right), add(const(t), drift), const(delta))
    )
    return rcf.rand(*parts)


def view_bindings(layout: VarLayout, scenario: Scenario) -> RFormula:
    """Exact mode: the view edges follow the owner's displacement."""
    owner = scenario.view.owner
    r, t = scenario.view.extension
    drift = sub(
        var(layout.data(owner, layout.final_index(owner), "pos")),
        var(layout.data(owner, 1, "pos")),
    )
    return rcf.rand(
        eq(var(layout.view_left), add(const(r), drift)),
        eq(var(layout.view_right), add(const(t), drift)),
    )


# ---------------------------------------------------------------------------
# Formula translation


class _FreshNames:
    def __init__(self, prefix: str = "s"):
        self.prefix = prefix
        self.counter = 0

    def next(self) -> str:
        self.counter += 1
        return f"{self.prefix}{self.counter}"


@dataclass(frozen=True)
class EncodingContext:
    """Recursion state of the formula translation: the car universe, the
    static lane interval, the extension terms and the valuation, plus a
    data-column accessor."""

    cars: tuple[str, ...]
    lanes: tuple[int, int]
    x_left: RTerm
    x_right: RTerm
    valuation: Mapping[str, str]
    column: Callable[[str, str], RTerm]  # (car, field) -> term
    fresh: _FreshNames = field(default_factory=_FreshNames, compare=False)

    def with_lanes(self, lo: int, hi: int) -> "EncodingContext":
        return EncodingContext(self.cars, (lo, hi), self.x_left, self.x_right,
                               self.valuation, self.column, self.fresh)

    def with_extension(self, x_left: RTerm, x_right: RTerm) -> "EncodingContext":
        return EncodingContext(self.cars, self.lanes, x_left, x_right,
                               self.valuation, self.column, self.fresh)

    def with_binding(self, name: str, car: str) -> "EncodingContext":
        valuation = dict(self.valuation)
        valuation[name] = car
        return EncodingContext(self.cars, self.lanes, self.x_left, self.x_right,
                               valuation, self.column, self.fresh)

    def resolve(self, variable: str) -> str:
        try:
            return self.valuation[variable]
        except KeyError:
            raise ValidationError(f"variable {variable!r} unbound by the valuation") from None


def _lane_member(ctx: EncodingContext, car: str, lane: int) -> RFormula:
    return rcf.ror(
        eq(ctx.column(car, "res"), const(lane)),
        eq(ctx.column(car, "res2"), const(lane)),
        eq(ctx.column(car, "clm"), const(lane)),
    )


def transform_formula(ctx: EncodingContext, formula: MlslFormula) -> RFormula:
    """Translate the spatial formula over the context's data column.

    Negation maps to negation, so ``transform_formula(ctx, Not(f))`` is
    structurally the negation of ``transform_formula(ctx, f)``.
    """
    l, n = ctx.lanes

    if isinstance(formula, VarEq):
        return rcf.RBool(ctx.resolve(formula.left) == ctx.resolve(formula.right))

    if isinstance(formula, Free):
        if l != n:
            return rcf.FALSE
        parts: list[RFormula] = [lt(ctx.x_left, ctx.x_right)]
        for car in ctx.cars:
            front = add(ctx.column(car, "pos"), ctx.column(car, "sf"))
            parts.append(
                rcf.ror(
                    rcf.rnot(_lane_member(ctx, car, l)),
                    le(front, ctx.x_left),
                    le(ctx.x_right, ctx.column(car, "pos")),
                )
            )
        return rcf.rand(*parts)

    if isinstance(formula, (Re, Cl)):
        if l != n:
            return rcf.FALSE
        car = ctx.resolve(formula.var)
        if isinstance(formula, Re):
            on_lane = rcf.ror(
                eq(ctx.column(car, "res"), const(l)),
                eq(ctx.column(car, "res2"), const(l)),
            )
        else:
            on_lane = eq(ctx.column(car, "clm"), const(l))
        return rcf.rand(
            lt(ctx.x_left, ctx.x_right),
            on_lane,
            le(ctx.column(car, "pos"), ctx.x_left),
            le(ctx.x_right, add(ctx.column(car, "pos"), ctx.column(car, "sf"))),
        )

    if isinstance(formula, LengthEq):
        return eq(sub(ctx.x_right, ctx.x_left), const(formula.value))

    if isinstance(formula, Not):
        return rcf.rnot(transform_formula(ctx, formula.body))

    if isinstance(formula, And):
        return rcf.rand(
            transform_formula(ctx, formula.left),
            transform_formula(ctx, formula.right),
        )

    if isinstance(formula, Exists):
        return rcf.ror(
            *(
                transform_formula(ctx.with_binding(formula.var, car), formula.body)
                for car in ctx.cars
            )
        )

    if isinstance(formula, HChop):
        cut = ctx.fresh.next()
        cut_term = var(cut)
        left = transform_formula(ctx.with_extension(ctx.x_left, cut_term), formula.left)
        right = transform_formula(ctx.with_extension(cut_term, ctx.x_right), formula.right)
        return rcf.RExists(
            (cut,),
            rcf.rand(le(ctx.x_left, cut_term), le(cut_term, ctx.x_right), left, right),
        )

    if isinstance(formula, VChop):
        if l > n:
            return rcf.rand(
                transform_formula(ctx, formula.lower),
                transform_formula(ctx, formula.upper),
            )
        return rcf.ror(
            *(
                rcf.rand(
                    transform_formula(ctx.with_lanes(l, m), formula.lower),
                    transform_formula(ctx.with_lanes(m + 1, n), formula.upper),
                )
                for m in range(l - 1, n + 1)
            )
        )

    raise TypeError(f"unknown formula node {formula!r}")


# ---------------------------------------------------------------------------
# Global encodings


def quantifier_polarity(formula: MlslFormula) -> str:
    """"qf-after-negation" when every horizontal chop sits under an odd
    number of negations (the negated monitoring formula is then purely
    existential); "quantified" otherwise."""

    def go(node: MlslFormula, negations: int) -> bool:
        if isinstance(node, HChop):
            if negations % 2 == 0:
                return False
            return go(node.left, negations) and go(node.right, negations)
        if isinstance(node, Not):
            return go(node.body, negations + 1)
        if isinstance(node, And):
            return go(node.left, negations) and go(node.right, negations)
        if isinstance(node, VChop):
            return go(node.lower, negations) and go(node.upper, negations)
        if isinstance(node, Exists):
            return go(node.body, negations)
        return True

    return "qf-after-negation" if go(formula, 0) else "quantified"


@dataclass(frozen=True)
class GlobalEncoding:
    """Result of compiling one global check."""

    scenario: Scenario
    formula: MlslFormula
    layout: VarLayout
    mode: str  # "exact" | "robust"
    hypotheses: RFormula  # init & word & bindings & freeze bounds
    goal: RFormula  # transform of the formula over the designated column
    polarity: str
    eps: Fraction | None = None
    delta: Fraction | None = None

    def universal(self) -> RFormula:
        """The validity form: for all valuations, hypotheses imply the goal."""
        names = tuple(self.layout.declared())
        return rcf.RForall(names, rcf.rimplies(self.hypotheses, self.goal))

    def negated(self) -> RFormula:
        """The satisfiability form: hypotheses plus the negated goal, all
        variables free."""
        return rcf.rand(self.hypotheses, rcf.rnot(self.goal))


def _freeze_bounds(layout: VarLayout, scenario: Scenario) -> RFormula:
    tf = var(layout.tf)
    return rcf.rand(le(const(0), tf), le(tf, const(scenario.word.end_time)))


def transform_globally(scenario: Scenario, formula: MlslFormula) -> GlobalEncoding:
    """Exact global check: formula must hold at every freeze time."""
    layout = layout_vars(scenario.word, scenario.initial.car_ids())
    hypotheses = rcf.rand(
        _freeze_bounds(layout, scenario),
        time_bindings(layout),
        transform_init(scenario.initial, layout),
        transform_word(layout, scenario),
        view_bindings(layout, scenario),
    )
    ctx = EncodingContext(
        cars=layout.cars,
        lanes=scenario.view.lanes,
        x_left=var(layout.view_left),
        x_right=var(layout.view_right),
        valuation=dict(scenario.valuation),
        column=lambda car, field_name: var(
            layout.data(car, layout.final_index(car), field_name)
        ),
    )
    goal = transform_formula(ctx, formula)
    return GlobalEncoding(
        scenario=scenario,
        formula=formula,
        layout=layout,
        mode="exact",
        hypotheses=hypotheses,
        goal=goal,
        polarity=quantifier_polarity(formula),
    )


def transform_globally_robust(
    scenario: Scenario, formula: MlslFormula, eps: Fraction, delta: Fraction
) -> GlobalEncoding:
    """Robust global check: the formula must hold on every +-delta shadow of
    every +-eps time perturbation, at every freeze time."""
    eps = Fraction(eps)
    delta = Fraction(delta)
    if eps <= 0 or delta <= 0:
        raise ValidationError("robustness margins must be positive")
    if not check_separation(scenario.word, eps):
        raise SeparationError(
            f"same-car actions closer than 2*eps = {2 * eps}; "
            "the perturbation could reorder them"
        )
    layout = layout_vars(scenario.word, scenario.initial.car_ids(), robust=True)
    hypotheses = rcf.rand(
        _freeze_bounds(layout, scenario),
        shake_times(layout, scenario, eps),
        transform_init(scenario.initial, layout),
        transform_word(layout, scenario, perturbed_times=True),
        shake_space(layout, scenario, delta),
    )
    ctx = EncodingContext(
        cars=layout.cars,
        lanes=scenario.view.lanes,
        x_left=var(layout.perturbed_view_left),
        x_right=var(layout.perturbed_view_right),
        valuation=dict(scenario.valuation),
        column=lambda car, field_name: var(layout.perturbed_final(car, field_name)),
    )
    goal = transform_formula(ctx, formula)
    return GlobalEncoding(
        scenario=scenario,
        formula=formula,
        layout=layout,
        mode="robust",
        hypotheses=hypotheses,
        goal=goal,
        polarity=quantifier_polarity(formula),
        eps=eps,
        delta=delta,
    )


def transform_instant(
    scenario: Scenario, formula: MlslFormula
) -> tuple[VarLayout, RFormula, RFormula]:
    """Single-instant harness: initial column pinned, extension fixed.

    Returns (layout, init constraints, formula transform over column 1);
    ``init & !goal`` is unsatisfiable exactly when the initial model
    satisfies the formula.
    """
    layout = layout_vars(scenario.word, scenario.initial.car_ids())
    init = transform_init(scenario.initial, layout)
    r, t = scenario.view.extension
    ctx = EncodingContext(
        cars=layout.cars,
        lanes=scenario.view.lanes,
        x_left=const(r),
        x_right=const(t),
        valuation=dict(scenario.valuation),
        column=lambda car, field_name: var(layout.data(car, 1, field_name)),
    )
    return layout, init, transform_formula(ctx, formula)

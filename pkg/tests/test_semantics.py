"""Direct evaluation: worked examples, clause edge cases, chop candidates,
and the randomized robustness properties backing the finite-cut design."""

import random
from fractions import Fraction as F

import pytest

from mlslmon.formula import Free, HChop, LengthEq, Not, somewhere
from mlslmon.parser import parse_formula
from mlslmon.scenario import scenario_from_dict
from mlslmon.semantics import chop_candidates, evaluate, signed_subset_sums
from mlslmon.traffic import CarState, Model, TrafficSnapshot, View

from generators import random_formula, random_scenario


@pytest.fixture
def intro_model():
    """Three cars as in the running scenario, seen through the two visible
    lanes of the introductory figure."""
    doc = {
        "maxDeceleration": 12,
        "lanes": [1, 3],
        "cars": [
            {"id": "C", "pos": 60, "speed": 6, "acc": 0, "physicalLength": 3, "res": [2], "clm": [3]},
            {"id": "D", "pos": 16, "speed": 18, "acc": 0, "physicalLength": 3, "res": [2, 3], "clm": []},
            {"id": "E", "pos": 6, "speed": 12, "acc": 0, "physicalLength": 3, "res": [1], "clm": [2]},
        ],
        "view": {"owner": "E", "lanes": [1, 2], "extension": [0, 90]},
        "valuation": {"ego": "E", "c": "C", "d": "D", "e": "E"},
        "word": [{"action": "end", "time": 0}],
    }
    return scenario_from_dict(doc).model


class TestIntroFormulas:
    def test_somewhere_free_re_free(self, intro_model):
        assert evaluate(intro_model, parse_formula("<< free ~ re(e) ~ free >>"))

    def test_somewhere_six_segment_lane_two(self, intro_model):
        phi = parse_formula("<< free ~ cl(e) ~ re(d) ~ free ~ re(c) ~ free >>")
        assert evaluate(intro_model, phi)

    def test_two_lane_stack_on_the_complete_view(self, intro_model):
        phi = parse_formula(
            "[ free ~ re(e) ~ free // free ~ cl(e) ~ re(d) ~ free ~ re(c) ~ free ]"
        )
        assert evaluate(intro_model, phi)

    def test_stack_needs_exactly_the_two_lanes(self, intro_model):
        three_lane = Model(
            intro_model.snapshot,
            View((1, 3), intro_model.view.extension, "E"),
            intro_model.valuation,
        )
        phi = parse_formula(
            "[ free ~ re(e) ~ free // free ~ cl(e) ~ re(d) ~ free ~ re(c) ~ free ]"
        )
        assert not evaluate(three_lane, phi)

    def test_overlap_satisfies_claim_and_reservation_at_once(self, intro_model):
        assert evaluate(intro_model, parse_formula("<< cl(e) & re(d) >>"))


class TestAtomClauses:
    def single_lane_model(self, r, t, cars=None, lanes=(1, 1)):
        snapshot = TrafficSnapshot(cars or {
            "A": CarState(F(2), F(3), F(0), F(0), frozenset({1}), frozenset()),
        })
        view = View(lanes, (F(r), F(t)), "A")
        return Model(snapshot, view, {"ego": "A", "a": "A"})

    def test_free_requires_positive_extension(self):
        m = self.single_lane_model(5, 5)
        assert not evaluate(m, Free())

    def test_free_requires_single_lane(self):
        m = self.single_lane_model(6, 10, lanes=(1, 2))
        assert not evaluate(m, Free())

    def test_free_ignores_touching_endpoints(self):
        # car occupies [2, 5]; the open extension (5, 9) only touches it
        m = self.single_lane_model(5, 9)
        assert evaluate(m, Free())

    def test_free_sees_claims_too(self):
        cars = {"A": CarState(F(2), F(3), F(0), F(0), frozenset({2}), frozenset({1}))}
        m = Model(TrafficSnapshot(cars), View((1, 1), (F(3), F(4)), "A"), {"ego": "A"})
        assert not evaluate(m, Free())

    def test_reservation_needs_full_cover(self):
        m = self.single_lane_model(2, 5)
        assert evaluate(m, parse_formula("re(a)"))
        wider = self.single_lane_model(2, 6)
        assert not evaluate(wider, parse_formula("re(a)"))

    def test_reservation_on_wrong_lane(self):
        cars = {"A": CarState(F(2), F(3), F(0), F(0), frozenset({2}), frozenset())}
        m = Model(TrafficSnapshot(cars), View((1, 1), (F(2), F(5)), "A"), {"ego": "A", "a": "A"})
        assert not evaluate(m, parse_formula("re(a)"))

    def test_length_atom_tolerates_degenerate_view(self):
        m = self.single_lane_model(4, 4)
        assert evaluate(m, LengthEq(F(0)))
        assert not evaluate(m, LengthEq(F(1)))

    def test_exists_ranges_over_all_cars(self):
        cars = {
            "A": CarState(F(0), F(2), F(0), F(0), frozenset({1}), frozenset()),
            "B": CarState(F(4), F(2), F(0), F(0), frozenset({1}), frozenset()),
        }
        m = Model(TrafficSnapshot(cars), View((1, 1), (F(4), F(6)), "A"), {"ego": "A"})
        assert evaluate(m, parse_formula("exists x . re(x)"))
        assert not evaluate(m, parse_formula("forall x . re(x)"))

    def test_vchop_on_empty_lane_interval(self):
        cars = {"A": CarState(F(0), F(2), F(0), F(0), frozenset({1}), frozenset())}
        m = Model(TrafficSnapshot(cars), View((2, 1), (F(0), F(1)), "A"), {"ego": "A"})
        # both parts are evaluated on the same empty view
        assert evaluate(m, parse_formula("[ true // true ]"))
        assert not evaluate(m, parse_formula("[ free // true ]"))


class TestChopCandidates:
    def test_length_free_single_car(self):
        cars = {"A": CarState(F(2), F(3), F(0), F(0), frozenset({1}), frozenset())}
        m = Model(TrafficSnapshot(cars), View((1, 1), (F(0), F(10)), "A"), {"ego": "A"})
        got = chop_candidates(m, Free())
        base = [F(0), F(2), F(5), F(10)]
        mids = [F(1), F(7, 2), F(15, 2)]
        assert got == sorted(base + mids)

    def test_length_constants_shift_the_base(self):
        cars = {"A": CarState(F(50), F(1), F(0), F(0), frozenset({1}), frozenset())}
        m = Model(TrafficSnapshot(cars), View((1, 1), (F(0), F(10)), "A"), {"ego": "A"})
        phi = HChop(LengthEq(F(3)), Not(LengthEq(F(3))))
        got = chop_candidates(m, phi)
        assert F(3) in got and F(7) in got
        assert got[0] == F(0) and got[-1] == F(10)

    def test_no_cars_no_lengths(self):
        cars = {"A": CarState(F(50), F(1), F(0), F(0), frozenset({1}), frozenset())}
        m = Model(TrafficSnapshot(cars), View((2, 2), (F(0), F(4)), "A"), {"ego": "A"})
        # the car's boundaries lie outside the extension, so only the view
        # edges and one midpoint remain
        assert chop_candidates(m, Free()) == [F(0), F(2), F(4)]

    def test_signed_subset_sums(self):
        assert signed_subset_sums([]) == {F(0)}
        assert signed_subset_sums([F(1)]) == {F(-1), F(0), F(1)}
        sums = signed_subset_sums([F(1), F(2)])
        assert sums == {F(x) for x in (-3, -2, -1, 0, 1, 2, 3)}
        # repeated constants count per occurrence
        assert F(2) in signed_subset_sums([F(1), F(1)])


class TestRandomizedProperties:
    def test_negation_is_complement(self):
        rng = random.Random(424242)
        for _ in range(60):
            scenario = random_scenario(rng, max_actions=0)
            scope = tuple(scenario.valuation)
            phi = random_formula(rng, rng.randint(1, 3), scope, allow_length=True)
            model = scenario.model
            assert evaluate(model, Not(phi)) == (not evaluate(model, phi))

    def test_extra_chop_points_never_change_the_verdict(self):
        rng = random.Random(31337)
        for _ in range(60):
            scenario = random_scenario(rng, max_actions=0)
            scope = tuple(scenario.valuation)
            phi = random_formula(rng, rng.randint(1, 4), scope, allow_length=True)
            model = scenario.model
            r, t = model.view.extension
            extra = tuple(
                r + (t - r) * F(rng.randint(0, 1000), 1000) for _ in range(5)
            )
            assert evaluate(model, phi) == evaluate(model, phi, extra_chop_points=extra)

    def test_somewhere_is_monotone_in_the_view(self):
        rng = random.Random(777)
        hits = 0
        for _ in range(80):
            scenario = random_scenario(rng, max_actions=0)
            scope = tuple(scenario.valuation)
            phi = somewhere(random_formula(rng, 2, scope))
            model = scenario.model
            if not evaluate(model, phi):
                continue
            hits += 1
            r, t = model.view.extension
            grown = Model(
                model.snapshot,
                View(model.view.lanes, (r - F(5), t + F(7)), model.view.owner),
                model.valuation,
            )
            assert evaluate(grown, phi)
        assert hits > 5  # the property must actually have been exercised

"""Dominance geometry, staircase volumes, and the sequential bounder."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rarebound.bench import make_example1, make_linear_toy
from rarebound.core import DETERMINISTIC, HIGH_PROBABILITY, RandomStream
from rarebound.monotone import (
    CPWLFunction,
    LabeledDesign,
    MonotonicityViolation,
    OverlappingRegions,
    RejectionSampler,
    SamplerStalled,
    SelectionConfig,
    StaircaseRegion,
    bounds_from_design,
    dominates,
    is_antichain,
    load_design,
    lower_orthant_volume,
    maximal_points,
    minimal_points,
    monotonicity_directions,
    orthant_volume_mc,
    save_design,
    save_trace,
    sequential_bounder,
    upper_orthant_volume,
)


def incl_excl_lower(P):
    """Union-of-boxes volume by inclusion-exclusion; independent oracle."""
    m = P.shape[0]
    total = 0.0
    for mask in range(1, 2 ** m):
        idx = [i for i in range(m) if (mask >> i) & 1]
        mins = P[idx].min(axis=0)
        total += (-1.0) ** (len(idx) + 1) * float(np.prod(mins))
    return total


def random_points(seed, m, d):
    return np.random.default_rng(seed).random((m, d))


class TestDominance:
    def test_dominates(self):
        assert dominates([0.1, 0.2], [0.1, 0.3])
        assert dominates([0.1, 0.2], [0.1, 0.2])
        assert not dominates([0.2, 0.2], [0.1, 0.3])

    def test_antichain(self):
        assert is_antichain(np.array([[0.2, 0.8], [0.8, 0.2]]))
        assert not is_antichain(np.array([[0.2, 0.2], [0.8, 0.8]]))
        assert is_antichain(np.empty((0, 3)))

    def test_maximal_minimal(self):
        P = np.array([[0.2, 0.2], [0.5, 0.5], [0.3, 0.1]])
        assert maximal_points(P).tolist() == [[0.5, 0.5]]
        mn = minimal_points(P)
        assert sorted(mn.tolist()) == [[0.2, 0.2], [0.3, 0.1]]

    @given(st.integers(0, 10_000), st.integers(1, 12), st.integers(2, 4))
    @settings(max_examples=40, deadline=None)
    def test_maximal_preserves_union_volume(self, seed, m, d):
        P = random_points(seed, m, d)
        Q = maximal_points(P)
        assert is_antichain(Q)
        assert lower_orthant_volume(Q) == pytest.approx(
            lower_orthant_volume(P), abs=1e-12)


class TestOrthantVolumes:
    def test_hand_cases(self):
        assert lower_orthant_volume(np.array([[0.5, 0.5]])) == pytest.approx(0.25)
        assert lower_orthant_volume(np.array([[0.8, 0.2]])) == pytest.approx(0.16)
        # overlap of the two boxes is 0.5 * 0.2
        both = np.array([[0.5, 0.5], [0.8, 0.2]])
        assert lower_orthant_volume(both) == pytest.approx(0.25 + 0.16 - 0.10)
        assert upper_orthant_volume(np.array([[0.2, 0.8]])) == pytest.approx(0.16)
        assert lower_orthant_volume(np.array([[0.5, 0.5, 0.5]])) == \
            pytest.approx(0.125)
        assert lower_orthant_volume(np.empty((0, 2))) == 0.0

    @given(st.integers(0, 10_000), st.integers(1, 8), st.integers(2, 6))
    @settings(max_examples=60, deadline=None)
    def test_matches_inclusion_exclusion(self, seed, m, d):
        P = random_points(seed, m, d)
        assert lower_orthant_volume(P) == pytest.approx(
            incl_excl_lower(P), abs=1e-10)

    @given(st.integers(0, 10_000), st.integers(1, 8), st.integers(2, 4))
    @settings(max_examples=30, deadline=None)
    def test_upper_is_flipped_lower(self, seed, m, d):
        P = random_points(seed, m, d)
        assert upper_orthant_volume(P) == pytest.approx(
            lower_orthant_volume(1.0 - P), abs=1e-12)

    @given(st.integers(0, 10_000), st.integers(1, 8), st.integers(2, 4))
    @settings(max_examples=30, deadline=None)
    def test_adding_a_point_grows_the_union(self, seed, m, d):
        P = random_points(seed, m + 1, d)
        assert lower_orthant_volume(P) >= \
            lower_orthant_volume(P[:-1]) - 1e-12

    def test_mc_estimate_agrees(self):
        P = random_points(3, 5, 3)
        exact = lower_orthant_volume(P)
        est, se = orthant_volume_mc(P, upper=False, rng=RandomStream(12, 0))
        assert abs(est - exact) < 5 * se + 1e-9

    def test_rejects_outside_cube(self):
        with pytest.raises(ValueError):
            lower_orthant_volume(np.array([[1.2, 0.5]]))


class TestLabeledDesign:
    def test_shape_checks(self):
        with pytest.raises(ValueError):
            LabeledDesign(np.zeros((3, 2)), np.array([True, False]))
        with pytest.raises(ValueError):
            LabeledDesign(np.zeros((2, 2)), np.array([True, False]),
                          values=np.array([1.0]))
        with pytest.raises(ValueError):
            LabeledDesign(np.array([[1.5, 0.5]]), np.array([True]))

    def test_consistency_check(self):
        # safe point dominated by a fail point breaks monotonicity
        pts = np.array([[0.6, 0.6], [0.4, 0.4]])
        bad = LabeledDesign(pts, np.array([True, False]))
        with pytest.raises(MonotonicityViolation):
            bad.check_consistency()
        ok = LabeledDesign(pts, np.array([False, True]))
        ok.check_consistency()


class TestStaircaseRegion:
    def region(self):
        design = LabeledDesign(np.array([[0.2, 0.3], [0.6, 0.7]]),
                               np.array([True, False]))
        return StaircaseRegion.from_design(design)

    def test_empty_contains_everything(self):
        r = StaircaseRegion.empty(3)
        assert r.contains([0.5, 0.5, 0.5])
        assert r.volume_bounds() == (0.0, 1.0)

    def test_membership(self):
        r = self.region()
        assert not r.contains([0.1, 0.1])      # below the fail generator
        assert not r.contains([0.9, 0.9])      # above the safe generator
        assert r.contains([0.5, 0.1])
        X = np.array([[0.1, 0.1], [0.9, 0.9], [0.5, 0.1], [0.2, 0.3]])
        assert r.contains_batch(X).tolist() == [False, False, True, False]

    def test_batch_matches_scalar(self):
        r = self.region()
        X = random_points(7, 200, 2)
        batch = r.contains_batch(X)
        assert all(r.contains(x) == b for x, b in zip(X, batch))

    def test_updates_shrink(self):
        r = self.region()
        r2 = r.with_fail(np.array([0.5, 0.1]))
        assert not r2.contains([0.5, 0.1])
        assert not r2.contains([0.3, 0.05])
        r3 = r.with_safe(np.array([0.5, 0.1]))
        assert not r3.contains([0.6, 0.5])
        lo, hi = r.volume_bounds()
        lo2, hi2 = r2.volume_bounds()
        assert lo2 > lo and hi2 == hi

    def test_update_conflicts(self):
        r = self.region()
        with pytest.raises(MonotonicityViolation):
            r.with_fail(np.array([0.9, 0.9]))
        with pytest.raises(MonotonicityViolation):
            r.with_safe(np.array([0.1, 0.1]))

    def test_overlapping_construction(self):
        with pytest.raises(OverlappingRegions):
            StaircaseRegion(np.array([[0.6, 0.6]]), np.array([[0.4, 0.4]]), 2)

    def test_volume_bounds_hand_case(self):
        lo, hi = self.region().volume_bounds()
        assert lo == pytest.approx(0.06)
        assert hi == pytest.approx(1.0 - 0.4 * 0.3)

    def test_sandwich_against_true_monotone_function(self):
        # every certified-fail point must actually fail, every certified-safe
        # point must be safe; the undecided region holds whatever is left
        prob = make_linear_toy(2, 0.8)
        gen = RandomStream(31, 0).generator()
        X = gen.random((60, 2))
        vals = prob.function.evaluator(X)
        design = LabeledDesign(X, vals < prob.function.threshold, vals)
        r = StaircaseRegion.from_design(design)
        Z = gen.random((5_000, 2))
        g = prob.function.evaluator(Z)
        in_fail = np.any(np.all(Z[:, None, :] <= r.fail_generators[None, :, :],
                                axis=2), axis=1)
        in_safe = np.any(np.all(Z[:, None, :] >= r.safe_generators[None, :, :],
                                axis=2), axis=1)
        assert np.all(g[in_fail] < prob.function.threshold)
        assert np.all(g[in_safe] >= prob.function.threshold)
        lo, hi = r.volume_bounds()
        assert lo <= prob.p_exact <= hi


class TestBoundsFromDesign:
    def test_hand_case(self):
        design = LabeledDesign(np.array([[0.2, 0.3], [0.6, 0.7]]),
                               np.array([True, False]))
        b = bounds_from_design(design)
        assert b.lower == pytest.approx(0.06)
        assert b.upper == pytest.approx(0.88)
        assert b.kind == DETERMINISTIC
        assert b.queries_used == 2

    def test_high_dimension_falls_back_to_mc(self):
        d = 7
        design = LabeledDesign(np.vstack([np.full((1, d), 0.4),
                                          np.full((1, d), 0.6)]),
                               np.array([True, False]))
        b = bounds_from_design(design, rng=RandomStream(8, 0))
        assert b.kind == HIGH_PROBABILITY
        assert b.alpha is not None and b.alpha < 1e-4
        # true values 0.4^7 and 1 - 0.4^7 are inside the widened interval
        assert b.lower <= 0.4 ** 7 <= 1.0 - 0.4 ** 7 <= b.upper


class TestRejectionSampler:
    def test_draws_stay_in_region(self):
        r = StaircaseRegion.from_design(LabeledDesign(
            np.array([[0.3, 0.3], [0.7, 0.7]]), np.array([True, False])))
        s = RejectionSampler(chunk=256)
        gen = RandomStream(2, 0).generator()
        X = s.draw_batch(r, gen, 300)
        assert X.shape == (300, 2)
        assert r.contains_batch(X).all()
        assert 0.0 < s.acceptance_rate() <= 1.0

    def test_single_draws_match_region(self):
        r = StaircaseRegion.from_design(LabeledDesign(
            np.array([[0.5, 0.5]]), np.array([True])))
        s = RejectionSampler(chunk=64)
        gen = RandomStream(3, 0).generator()
        for _ in range(20):
            assert r.contains(s.draw(r, gen))

    def test_stalls_on_tiny_region(self):
        # undecided sliver of volume ~1e-4; cap attempts below 1/volume
        r = StaircaseRegion(np.array([[0.9999, 0.9999]]),
                            np.empty((0, 2)), 2)
        thin = StaircaseRegion(np.array([[0.99995, 1.0]]),
                               np.array([[1.0, 0.0001]]), 2)
        s = RejectionSampler(chunk=16, max_attempts=64)
        gen = RandomStream(4, 0).generator()
        with pytest.raises(SamplerStalled):
            s.draw_batch(thin, gen, 5)


class TestSequentialBounder:
    def test_contains_truth_and_traces_nest(self):
        prob = make_linear_toy(2, 0.5)
        run = sequential_bounder(prob.function, 80, RandomStream(100, 0))
        assert run.bounds.lower <= prob.p_exact <= run.bounds.upper
        assert run.bounds.kind == DETERMINISTIC
        lows = [t[1] for t in run.trace]
        highs = [t[2] for t in run.trace]
        assert all(b >= a for a, b in zip(lows, lows[1:]))
        assert all(b <= a for a, b in zip(highs, highs[1:]))
        assert run.queries_used == 80
        assert prob.function.query_count == 80
        assert run.design.points.shape == (80, 2)

    @pytest.mark.parametrize("rule", ["balance", "coverage", "maximin",
                                      "uniform"])
    def test_each_rule_is_sound(self, rule):
        prob = make_linear_toy(2, 0.6)
        run = sequential_bounder(
            prob.function, 50, RandomStream(200, 0),
            selection=SelectionConfig(rule=rule, pool_size=64,
                                      score_subsample=16))
        assert run.bounds.lower <= prob.p_exact <= run.bounds.upper
        assert run.selection_rule == rule

    def test_deterministic_replay(self):
        a = sequential_bounder(make_linear_toy(2, 0.5).function, 40,
                               RandomStream(55, 3))
        b = sequential_bounder(make_linear_toy(2, 0.5).function, 40,
                               RandomStream(55, 3))
        assert np.array_equal(a.design.points, b.design.points)
        assert a.trace == b.trace

    def test_example1_containment(self):
        prob = make_example1(3, 0.05)
        run = sequential_bounder(prob.function, 60, RandomStream(7, 0))
        assert run.bounds.lower <= prob.p_exact <= run.bounds.upper

    def test_custom_sampler_object(self):
        class CenterBiased:
            name = "center-biased"

            def draw(self, region, gen):
                while True:
                    x = 0.25 + 0.5 * gen.random(region.dimension)
                    if region.contains(x):
                        return x

        prob = make_linear_toy(2, 0.9)
        run = sequential_bounder(prob.function, 30, RandomStream(9, 0),
                                 sampler=CenterBiased())
        assert run.sampler_name == "center-biased"
        assert run.selection_rule == "uniform"
        assert run.bounds.lower <= prob.p_exact <= run.bounds.upper

    def test_errors(self):
        prob = make_linear_toy(2, 0.5)
        with pytest.raises(ValueError):
            sequential_bounder(prob.function, 0, RandomStream(1, 0))
        with pytest.raises(ValueError):
            sequential_bounder(prob.function, 10, RandomStream(1, 0),
                               sampler="metropolis")
        with pytest.raises(ValueError):
            sequential_bounder(prob.function, 10, RandomStream(1, 0),
                               selection=SelectionConfig(rule="best"))


class TestSelectionConfig:
    def test_auto_resolution(self):
        cfg = SelectionConfig()
        assert cfg.resolve(2) == ("balance", True)
        assert cfg.resolve(3) == ("coverage", False)

    def test_explicit(self):
        cfg = SelectionConfig(rule="maximin", exact_scores=True)
        assert cfg.resolve(5) == ("maximin", True)


class TestCPWL:
    def two_piece(self):
        # x1 + 2 x2 on the left half, 3 x1 + 2 x2 - 1 on the right half
        return CPWLFunction(
            lows=np.array([[0.0, 0.0], [0.5, 0.0]]),
            highs=np.array([[0.5, 1.0], [1.0, 1.0]]),
            coefficients=np.array([[1.0, 2.0], [3.0, 2.0]]),
            intercepts=np.array([0.0, -1.0]))

    def test_evaluation(self):
        f = self.two_piece()
        assert f([0.25, 0.5]) == pytest.approx(1.25)
        assert f([0.75, 0.5]) == pytest.approx(2.25)
        out = f(np.array([[0.25, 0.5], [0.75, 0.5]]))
        assert np.allclose(out, [1.25, 2.25])
        with pytest.raises(ValueError):
            f([1.5, 0.5])

    def test_monotone_report(self):
        rep = monotonicity_directions(self.two_piece())
        assert rep.is_monotone
        assert rep.directions.tolist() == [1, 1]
        assert rep.orientation.tolist() == [1, 1]

    def test_mixed_coordinate(self):
        f = CPWLFunction(
            lows=np.array([[0.0, 0.0], [0.5, 0.0]]),
            highs=np.array([[0.5, 1.0], [1.0, 1.0]]),
            coefficients=np.array([[1.0, 2.0], [-1.0, 2.0]]),
            intercepts=np.array([0.0, 1.0]))
        rep = monotonicity_directions(f)
        assert not rep.is_monotone
        assert rep.mixed.tolist() == [True, False]
        assert rep.orientation is None

    def test_decreasing_orientation(self):
        f = CPWLFunction(lows=np.array([[0.0, 0.0]]),
                         highs=np.array([[1.0, 1.0]]),
                         coefficients=np.array([[-2.0, 0.0]]),
                         intercepts=np.array([1.0]))
        rep = monotonicity_directions(f)
        assert rep.directions.tolist() == [-1, 0]
        assert rep.orientation.tolist() == [-1, 1]

    def test_interior_overlap_rejected(self):
        with pytest.raises(OverlappingRegions):
            CPWLFunction(
                lows=np.array([[0.0, 0.0], [0.25, 0.25]]),
                highs=np.array([[0.5, 0.5], [0.75, 0.75]]),
                coefficients=np.array([[1.0, 0.0], [0.0, 1.0]]),
                intercepts=np.array([0.0, 0.0]))

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            CPWLFunction(lows=np.array([[0.2, 0.2]]),
                         highs=np.array([[0.1, 0.3]]),
                         coefficients=np.array([[1.0, 1.0]]),
                         intercepts=np.array([0.0]))


class TestPersistence:
    def test_design_roundtrip(self, tmp_path):
        design = LabeledDesign(np.array([[0.2, 0.3], [0.6, 0.7]]),
                               np.array([True, False]),
                               values=np.array([-0.4, 0.5]))
        path = tmp_path / "design.csv"
        save_design(design, path)
        header = path.read_text().splitlines()[0]
        assert header == "x1,x2,value,fail"
        back = load_design(path)
        assert np.array_equal(back.points, design.points)
        assert np.array_equal(back.fail, design.fail)
        assert np.array_equal(back.values, design.values)

    def test_design_roundtrip_without_values(self, tmp_path):
        design = LabeledDesign(np.array([[0.1, 0.9]]), np.array([True]))
        path = tmp_path / "design.csv"
        save_design(design, path)
        back = load_design(path)
        assert back.values is None
        assert np.array_equal(back.points, design.points)

    def test_load_rejects_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x1,x2,fail,value\n0.1,0.2,1,0.0\n")
        with pytest.raises(ValueError):
            load_design(path)

    def test_trace_schema(self, tmp_path):
        prob = make_linear_toy(2, 0.5)
        run = sequential_bounder(prob.function, 20, RandomStream(1, 0))
        path = tmp_path / "trace.csv"
        save_trace(run, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "queries,p_lower,p_upper"
        assert len(lines) == 1 + len(run.trace)

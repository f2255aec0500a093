"""Scoring function, priority prefixes, and the subset scanner."""

import math

import numpy as np
import pytest

from featscan.errors import (
    AlphaOutOfRangeError,
    DegenerateOutcomeError,
    EmptyRecordsError,
    NoFeaturesError,
)
from featscan.mdss import (
    ScanConfig,
    SubsetDescriptor,
    ValueRecord,
    aggregate_by_value,
    best_value_subset,
    scan,
    score_bernoulli,
)
from featscan.tabular import Dataset, DiscretizationSpec, FeatureKind, MissingPolicy, Schema, discretize

from oracles import brute_force_scan, brute_force_value_subset, grid_max_score


def categorical_dataset(columns, outcome):
    names = tuple(columns)
    kinds = {
        f: FeatureKind.BINARY if len(set(v)) <= 2 else FeatureKind.NOMINAL
        for f, v in columns.items()
    }
    d = Dataset(
        Schema(names, kinds, "y"),
        {f: np.asarray(v, str) for f, v in columns.items()},
        np.asarray(outcome),
    )
    return discretize(d, DiscretizationSpec())


class TestScoreBernoulli:
    def test_observed_equals_expected(self):
        assert score_bernoulli(5, 10, 0.5) == (0.0, 1.0)

    def test_derived_value_against_grid(self):
        score, q = score_bernoulli(40, 100, 0.2)
        assert q == pytest.approx(8 / 3, abs=1e-12)
        assert score == pytest.approx(grid_max_score(40, 100, 0.2), abs=1e-6)
        assert score == pytest.approx(10.465, abs=1e-3)

    def test_zero_positives(self):
        assert score_bernoulli(0, 25, 0.3) == (0.0, 1.0)

    def test_all_positives_limit(self):
        score, q = score_bernoulli(8, 8, 0.25)
        assert q == math.inf
        assert score == pytest.approx(8 * math.log(4.0), abs=1e-12)

    def test_empty(self):
        assert score_bernoulli(0, 0, 0.4) == (0.0, 1.0)

    def test_alpha_domain(self):
        with pytest.raises(AlphaOutOfRangeError):
            score_bernoulli(1, 2, 0.0)
        with pytest.raises(AlphaOutOfRangeError):
            score_bernoulli(1, 2, 1.0)

    def test_invalid_counts(self):
        with pytest.raises(ValueError):
            score_bernoulli(5, 3, 0.5)

    def test_below_expectation_scores_zero(self):
        assert score_bernoulli(10, 100, 0.5) == (0.0, 1.0)


class TestAggregateByValue:
    def fixture(self):
        # 12 rows, 3-value feature g, binary feature b, hand-tabulated
        g = ["a", "a", "a", "a", "b", "b", "b", "c", "c", "c", "c", "c"]
        b = ["0", "1", "0", "1", "0", "1", "0", "1", "0", "1", "0", "1"]
        y = [1, 1, 0, 0, 1, 0, 0, 0, 0, 1, 1, 1]
        return categorical_dataset({"g": g, "b": b}, y)

    def test_unconditioned_counts(self):
        recs = aggregate_by_value(self.fixture(), "g", SubsetDescriptor())
        assert [(r.value, r.n, r.sum_y) for r in recs] == [
            ("a", 4, 2), ("b", 3, 1), ("c", 5, 3),
        ]

    def test_conditioned_counts(self):
        cond = SubsetDescriptor({"b": frozenset({"1"})})
        recs = aggregate_by_value(self.fixture(), "g", cond)
        # rows with b=1: indices 1,3,5,7,9,11 -> g a,a,b,c,c,c y 1,0,0,0,1,1
        assert [(r.value, r.n, r.sum_y) for r in recs] == [
            ("a", 2, 1), ("b", 1, 0), ("c", 3, 2),
        ]

    def test_empty_conditioning(self):
        d = categorical_dataset(
            {"g": ["a", "b"], "b": ["0", "0"]}, [0, 1]
        )
        cond = SubsetDescriptor({"b": frozenset({"1"})})
        with pytest.raises(Exception):
            # b only has level "0" in this tiny table
            aggregate_by_value(d, "g", cond)

    def test_zero_rows_all_zero(self):
        d = categorical_dataset(
            {"g": ["a", "b", "a"], "b": ["0", "0", "1"]}, [0, 1, 1]
        )
        cond = SubsetDescriptor({"g": frozenset({"b"})})
        recs = aggregate_by_value(d, "b", cond)
        # only row 1 matches g=b; b column there is "0"
        assert [(r.value, r.n, r.sum_y) for r in recs] == [("0", 1, 1), ("1", 0, 0)]

    def test_restricted_feature_rejected(self):
        d = self.fixture()
        with pytest.raises(ValueError):
            aggregate_by_value(d, "g", SubsetDescriptor({"g": frozenset({"a"})}))


def record(value, n, s):
    return ValueRecord(value, n, s)


class TestBestValueSubset:
    def test_single_value(self):
        values, score = best_value_subset([record("a", 10, 7)], 0.5)
        assert values == frozenset({"a"})
        assert score == pytest.approx(score_bernoulli(7, 10, 0.5)[0])

    def test_two_values_brute_forced(self):
        recs = [record("A", 10, 9), record("B", 10, 1)]
        values, score = best_value_subset(recs, 0.5)
        want_score, want_combo = brute_force_value_subset([10, 10], [9, 1], 0.5)
        assert values == frozenset({"A"})
        assert score == want_score
        assert want_combo == (0,)

    def test_all_at_expectation_returns_full_domain(self):
        recs = [record("a", 10, 5), record("b", 4, 2), record("c", 2, 1)]
        values, score = best_value_subset(recs, 0.5)
        assert score == 0.0
        assert values == frozenset({"a", "b", "c"})

    def test_zero_count_values_excluded(self):
        recs = [record("a", 10, 8), record("ghost", 0, 0)]
        values, _ = best_value_subset(recs, 0.5)
        assert values == frozenset({"a"})

    def test_empty_records_error(self):
        with pytest.raises(EmptyRecordsError):
            best_value_subset([record("a", 0, 0)], 0.5)

    def test_ltss_prefix_matches_brute_force(self):
        rng = np.random.default_rng(111)
        for _ in range(60):
            j = int(rng.integers(1, 9))
            counts = rng.integers(0, 12, size=j)
            sums = np.array([rng.integers(0, c + 1) for c in counts])
            if counts.sum() == 0:
                continue
            alpha = float(rng.uniform(0.05, 0.95))
            recs = [record(f"v{i}", int(counts[i]), int(sums[i]))
                    for i in range(j)]
            _, got = best_value_subset(recs, alpha)
            want, _ = brute_force_value_subset(counts.tolist(), sums.tolist(),
                                               alpha)
            assert got == want


class TestSubsetDescriptor:
    def test_canonicalized_drops_full_domain(self):
        d = categorical_dataset({"g": ["a", "b", "a"]}, [0, 1, 0])
        desc = SubsetDescriptor({"g": frozenset({"a", "b"})})
        assert desc.canonicalized(d).restrictions == {}

    def test_encode_sorted(self):
        desc = SubsetDescriptor({"b": frozenset({"2", "1"}), "a": frozenset({"x"})})
        assert desc.encode() == "a=x;b=1|2"

    def test_matches_counts(self):
        d = categorical_dataset(
            {"g": ["a", "b", "a", "c"], "h": ["0", "0", "1", "1"]}, [0, 1, 0, 1]
        )
        desc = SubsetDescriptor({"g": frozenset({"a"})})
        np.testing.assert_array_equal(desc.matches(d), [True, False, True, False])

    def test_json_round_trip(self):
        desc = SubsetDescriptor({"g": frozenset({"a", "c"})})
        assert SubsetDescriptor.from_json_dict(desc.to_json_dict()) == desc

    def test_empty_values_rejected(self):
        with pytest.raises(ValueError):
            SubsetDescriptor({"g": frozenset()})


def planted_dataset(seed, n=1200, alpha=0.2, q_star=6.0):
    rng = np.random.default_rng(seed)
    f1 = rng.choice(list("abc"), size=n)
    f2 = rng.choice(list("xyz"), size=n)
    f3 = rng.choice(list("pq"), size=n)
    mask = (f1 == "a") & (f2 == "x")
    p1 = q_star * alpha / (1 - alpha + q_star * alpha)
    y = (rng.random(n) < np.where(mask, p1, alpha)).astype(int)
    return categorical_dataset({"f1": f1, "f2": f2, "f3": f3}, y)


class TestScan:
    def test_recovers_planted_subgroup(self):
        d = planted_dataset(seed=42)
        result = scan(d, ["f1", "f2", "f3"], ScanConfig(n_restarts=20, seed=0))
        assert result.subset.restrictions == {
            "f1": frozenset({"a"}), "f2": frozenset({"x"}),
        }
        assert result.score > 20.0

    def test_matches_brute_force_on_fixture(self):
        rng = np.random.default_rng(7)
        n = 60
        cols = {
            "u": rng.choice(list("ab"), size=n),
            "v": rng.choice(list("lmn"), size=n),
            "w": rng.choice(list("st"), size=n),
        }
        y = rng.integers(0, 2, size=n)
        d = categorical_dataset(cols, y)
        result = scan(d, ["u", "v", "w"], ScanConfig(n_restarts=20, seed=1))
        want_score, _ = brute_force_scan(d, ["u", "v", "w"])
        assert result.score == want_score

    def test_constant_outcome_rejected(self):
        d = categorical_dataset({"g": ["a", "b", "a"]}, [0, 0, 0])
        with pytest.raises(DegenerateOutcomeError):
            scan(d, ["g"], ScanConfig())

    def test_no_features_rejected(self):
        d = planted_dataset(seed=1, n=100)
        with pytest.raises(NoFeaturesError):
            scan(d, [], ScanConfig())

    def test_deterministic(self):
        d = planted_dataset(seed=3, n=400)
        cfg = ScanConfig(n_restarts=8, seed=9)
        r1 = scan(d, ["f1", "f2", "f3"], cfg)
        r2 = scan(d, ["f1", "f2", "f3"], cfg)
        assert r1 == r2

    def test_restart_dominance(self):
        d = planted_dataset(seed=5, n=300)
        feats = ["f1", "f2", "f3"]
        s1 = scan(d, feats, ScanConfig(n_restarts=2, seed=4)).score
        s2 = scan(d, feats, ScanConfig(n_restarts=10, seed=4)).score
        assert s2 >= s1

    def test_score_recomputable_and_membership(self):
        d = planted_dataset(seed=8, n=500)
        result = scan(d, ["f1", "f2", "f3"], ScanConfig(n_restarts=5, seed=2))
        mask = result.subset.matches(d)
        assert int(mask.sum()) == result.n_members
        assert int(d.outcome[mask].sum()) == result.sum_outcomes
        want, want_q = score_bernoulli(result.sum_outcomes, result.n_members,
                                       result.alpha_g)
        assert result.score == want
        assert result.q_mle == want_q
        assert result.n_members + int((~mask).sum()) == d.n_rows

    def test_beats_single_coordinate_moves(self):
        # one ascent pass can only improve on the best single-feature move
        d = planted_dataset(seed=13, n=400)
        feats = ["f1", "f2", "f3"]
        result = scan(d, feats, ScanConfig(n_restarts=1, seed=0))
        for f in feats:
            recs = aggregate_by_value(d, f, SubsetDescriptor())
            _, single = best_value_subset(recs, d.outcome_mean())
            assert result.score >= single - 1e-12

    def test_restrictions_never_full_domain(self):
        d = planted_dataset(seed=21, n=300)
        result = scan(d, ["f1", "f2", "f3"], ScanConfig(n_restarts=6, seed=3))
        for f, values in result.subset.restrictions.items():
            assert values != frozenset(d.levels(f))

    def test_all_features_dominate_subsets_at_optimum(self):
        # widening the search space cannot lower the global maximum; both
        # sides are solved exactly on instances this small
        rng = np.random.default_rng(37)
        for trial in range(10):
            n = 80
            cols = {
                "a": rng.choice(list("pq"), size=n),
                "b": rng.choice(list("lmn"), size=n),
                "c": rng.choice(list("xy"), size=n),
            }
            y = rng.integers(0, 2, size=n)
            d = categorical_dataset(cols, y)
            full = scan(d, ["a", "b", "c"], ScanConfig(n_restarts=20, seed=trial))
            assert full.score == brute_force_scan(d, ["a", "b", "c"])[0]
            for subset in (["a"], ["a", "b"], ["b", "c"]):
                partial = scan(d, subset, ScanConfig(n_restarts=20, seed=trial))
                assert full.score >= partial.score

    def test_binned_continuous_features_scan(self):
        rng = np.random.default_rng(31)
        n = 800
        x = rng.normal(size=n)
        g = rng.choice(list("ab"), size=n)
        y = (rng.random(n) < np.where(x > 1.0, 0.7, 0.15)).astype(int)
        schema = Schema(
            ("x", "g"),
            {"x": FeatureKind.CONTINUOUS, "g": FeatureKind.BINARY},
            "y", MissingPolicy.ERROR,
        )
        raw = Dataset(schema, {"x": x, "g": g}, y)
        dd = discretize(raw, DiscretizationSpec(n_bins=5))
        result = scan(dd, ["x", "g"], ScanConfig(n_restarts=10, seed=7))
        assert "x" in result.subset.restrictions
        # top bin (code 4) must be among the retained values
        assert "4" in result.subset.restrictions["x"]

import json
import math
from collections import Counter

import numpy as np
import pytest

from ttsplateau import (
    AnalysisError,
    CorrelationReport,
    GenerationRecord,
    LogFormatError,
    ScalingCurve,
    SimConfig,
    Strategy,
    accuracy_at_n,
    accuracy_curve,
    first_success_pmf,
    hit_at_n,
    hit_curve,
    pearson,
    saturation_histogram,
    simulate,
)
from ttsplateau.metrics import curve_to_csv, curve_to_json, histogram_to_csv, histogram_to_json
from ttsplateau import ScalingModel


def problem(pid, keys, gold="GOLD", strategy=Strategy.PARALLEL):
    return [
        GenerationRecord(pid, strategy, i + 1, key == gold, key)
        for i, key in enumerate(keys)
    ]


class TestHitAtN:
    def test_all_correct(self):
        records = problem("a", ["GOLD", "GOLD"]) + problem("b", ["GOLD", "GOLD"])
        for n in (1, 2):
            assert hit_at_n(records, n) == 1.0

    def test_table_fixture_value(self):
        records = []
        for i in range(30):
            key = "GOLD" if i < 9 else "W1"
            records += problem(f"q{i:02d}", [key])
        assert hit_at_n(records, 1) == 0.300

    def test_simulated_value(self):
        n = 100_000
        trace = simulate(SimConfig(strategy="parallel", p_x=0.3, n_max=8, num_problems=n, seed=2))
        expected = 1 - 0.7**8
        se = math.sqrt(expected * (1 - expected) / n)
        assert abs(hit_at_n(trace.frame(), 8) - expected) <= 3 * se

    def test_incomplete_log_rejected(self):
        records = problem("a", ["GOLD", "W1"]) + problem("b", ["W1"])
        with pytest.raises(LogFormatError, match="incomplete.*'b'"):
            hit_at_n(records, 2)

    def test_hit_at_full_budget_complements_unsolved(self):
        from ttsplateau import observed_saturations

        trace = simulate(
            SimConfig(strategy="sequential", p_x=0.08, n_max=16, num_problems=4000, seed=5)
        )
        frame = trace.frame()
        unsolved = sum(1 for o in observed_saturations(frame) if o.unsolved)
        assert unsolved > 0
        assert hit_at_n(frame, 16) == pytest.approx(
            1.0 - unsolved / frame.n_problems, abs=1e-12
        )


class TestAccuracyParallel:
    def test_majority_wins(self):
        records = problem("a", ["GOLD", "GOLD", "X"])
        assert accuracy_at_n(records, 3, "parallel") == 1.0

    def test_two_vote_tie_goes_to_unit_one(self):
        assert accuracy_at_n(problem("a", ["GOLD", "X"]), 2, "parallel") == 1.0
        assert accuracy_at_n(problem("a", ["X", "GOLD"]), 2, "parallel") == 0.0

    def test_against_vote_enumeration(self):
        rng = np.random.default_rng(23)
        vocab = ["GOLD", "W1", "W2", "W3"]
        for trial in range(50):
            width = int(rng.integers(1, 9))
            recs = []
            expected_wins = Counter()
            for i in range(12):
                keys = [vocab[int(k)] for k in rng.integers(0, 4, size=width)]
                recs += problem(f"q{i}", keys)
                for n in range(1, width + 1):
                    prefix = keys[:n]
                    counts = Counter(prefix)
                    winner = max(counts, key=lambda k: (counts[k], -prefix.index(k)))
                    if winner == "GOLD":
                        expected_wins[n] += 1
            for n in range(1, width + 1):
                assert accuracy_at_n(recs, n, "parallel") == expected_wins[n] / 12

    def test_missing_keys_rejected(self):
        records = [GenerationRecord("a", Strategy.PARALLEL, 1, True)]
        with pytest.raises(LogFormatError, match="no answer_key"):
            accuracy_at_n(records, 1, "parallel")

    def test_inconsistent_gold_rejected(self):
        records = [
            GenerationRecord("a", Strategy.PARALLEL, 1, True, "G1"),
            GenerationRecord("a", Strategy.PARALLEL, 2, True, "G2"),
        ]
        with pytest.raises(LogFormatError, match="multiple keys"):
            accuracy_at_n(records, 2, "parallel")

    def test_key_on_both_sides_rejected(self):
        records = [
            GenerationRecord("a", Strategy.PARALLEL, 1, True, "G"),
            GenerationRecord("a", Strategy.PARALLEL, 2, False, "G"),
        ]
        with pytest.raises(LogFormatError, match="both correct and incorrect"):
            accuracy_at_n(records, 2, "parallel")

    def test_strategy_mismatch_rejected(self):
        records = problem("a", ["GOLD"], strategy=Strategy.SEQUENTIAL)
        with pytest.raises(LogFormatError, match="sequential records"):
            accuracy_at_n(records, 1, "parallel")


class TestAccuracySequential:
    def test_round_n_answer(self):
        records = [
            GenerationRecord("a", Strategy.SEQUENTIAL, 1, False),
            GenerationRecord("a", Strategy.SEQUENTIAL, 2, True),
        ]
        assert accuracy_at_n(records, 1, "sequential") == 0.0
        assert accuracy_at_n(records, 2, "sequential") == 1.0

    def test_absorbing_accuracy_equals_hit(self):
        trace = simulate(
            SimConfig(strategy="sequential", p_x=0.3, n_max=12, num_problems=500, seed=3)
        )
        frame = trace.frame()
        for n in range(1, 13):
            assert accuracy_at_n(frame, n, "sequential") == hit_at_n(frame, n)

    def test_non_absorbing_dip_allowed(self):
        # real rethinking logs may lose a previously-correct answer
        records = [
            GenerationRecord("a", Strategy.SEQUENTIAL, 1, True),
            GenerationRecord("a", Strategy.SEQUENTIAL, 2, False),
            GenerationRecord("a", Strategy.SEQUENTIAL, 3, True),
        ]
        values = [v for _, v in accuracy_curve(records, 3, "sequential").points]
        assert values == [1.0, 0.0, 1.0]
        assert hit_at_n(records, 2) == 1.0


class TestCurves:
    def test_hit_curve_nondecreasing_for_any_log(self):
        trace = simulate(
            SimConfig(strategy="parallel", p_x=(0.05, 0.9), n_max=16, num_problems=300, seed=8)
        )
        values = [v for _, v in hit_curve(trace.frame(), 16).points]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_curve_validation(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            ScalingCurve("hit", [(1, 0.1), (1, 0.2)])
        with pytest.raises(ValueError, match="nondecreasing"):
            ScalingCurve("hit", [(1, 0.5), (2, 0.4)])
        with pytest.raises(ValueError, match="outside"):
            ScalingCurve("hit", [(1, 1.5)])
        with pytest.raises(ValueError, match="metric"):
            ScalingCurve("pass", [(1, 0.5)])
        # accuracy curves may dip
        ScalingCurve("accuracy", [(1, 0.5), (2, 0.4)])

    def test_exports_are_deterministic(self):
        curve = ScalingCurve("hit", [(1, 0.25), (2, 0.5)])
        assert curve_to_csv(curve) == "n,value\n1,0.25\n2,0.5\n"
        assert curve_to_json(curve) == '{"metric":"hit","points":[[1,0.25],[2,0.5]]}\n'


class TestPearson:
    def test_perfect_agreement(self):
        report = pearson([1, 2, 3, 4], [1, 2, 3, 4])
        assert report.r == 1.0 and report.n_points == 4

    def test_perfect_reversal(self):
        assert pearson([1, 2, 3], [5, 3, 1]).r == -1.0

    def test_affine_invariance(self):
        rng = np.random.default_rng(4)
        a = rng.normal(size=100)
        b = 0.3 * a + rng.normal(size=100)
        base = pearson(a, b).r
        assert abs(pearson(2.5 * a + 7, b).r - base) <= 1e-12
        assert abs(pearson(a, 0.1 * b - 3).r - base) <= 1e-12

    def test_zero_variance_names_side(self):
        with pytest.raises(AnalysisError, match="predicted.*zero variance"):
            pearson([1, 1, 1], [1, 2, 3])
        with pytest.raises(AnalysisError, match="observed.*zero variance"):
            pearson([1, 2, 3], [4, 4, 4])

    def test_unsolved_exclusion_counted(self):
        report = pearson(
            [1, 2, 3, 9], [1, 2, 3, 4], unsolved=[False, False, False, True]
        )
        assert report.excluded_unsolved == 1 and report.n_points == 3 and report.r == 1.0

    def test_include_unsolved_keeps_pairs(self):
        report = pearson(
            [1, 2, 3, 9], [1, 2, 3, 4], unsolved=[False, False, False, True],
            include_unsolved=True,
        )
        assert report.excluded_unsolved == 0 and report.n_points == 4

    def test_too_few_points(self):
        with pytest.raises(AnalysisError, match="at least 2"):
            pearson([1.0], [2.0])

    def test_matches_scipy(self):
        scipy_stats = pytest.importorskip("scipy.stats")
        rng = np.random.default_rng(6)
        a, b = rng.normal(size=50), rng.normal(size=50)
        assert pearson(a, b).r == pytest.approx(scipy_stats.pearsonr(a, b).statistic, abs=1e-12)

    def test_report_validation(self):
        with pytest.raises(ValueError):
            CorrelationReport(r=1.5, n_points=3)
        with pytest.raises(ValueError):
            CorrelationReport(r=0.5, n_points=1)


class TestSaturationHistogram:
    def test_single_bin(self):
        assert saturation_histogram([1, 1, 1], 4) == [3, 0, 0, 0]

    def test_total_equals_problems(self):
        values = [1, 2, 2, 3, 5, 5, 5]
        assert sum(saturation_histogram(values, 5)) == len(values)

    def test_geometric_masses(self):
        from ttsplateau import observed_saturations

        n = 100_000
        trace = simulate(SimConfig(strategy="sequential", p_x=0.5, n_max=32, num_problems=n, seed=12))
        observations = observed_saturations(trace.frame())
        counts = saturation_histogram([o.n for o in observations], 32)
        model = ScalingModel(0.5)
        for k in range(1, 9):
            expected = first_success_pmf(model, k)
            se = math.sqrt(expected * (1 - expected) / n)
            assert abs(counts[k - 1] / n - expected) <= 3 * se

    def test_unsolved_mass_lands_in_last_bin(self):
        from ttsplateau import observed_saturations

        trace = simulate(
            SimConfig(strategy="sequential", p_x=0.05, n_max=8, num_problems=2000, seed=13)
        )
        observations = observed_saturations(trace.frame())
        counts = saturation_histogram([o.n for o in observations], 8)
        unsolved = sum(1 for o in observations if o.unsolved)
        solved_at_8 = sum(1 for o in observations if o.n == 8 and not o.unsolved)
        assert counts[7] == unsolved + solved_at_8
        assert unsolved > 0

    def test_bounds_and_empty(self):
        with pytest.raises(ValueError):
            saturation_histogram([], 4)
        with pytest.raises(ValueError):
            saturation_histogram([0], 4)
        with pytest.raises(ValueError):
            saturation_histogram([5], 4)

    def test_exports(self):
        assert histogram_to_csv([2, 0, 1]) == "n,count\n1,2\n2,0\n3,1\n"
        assert json.loads(histogram_to_json([2, 0, 1])) == {"n_max": 3, "counts": [2, 0, 1]}

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fitseq.errors import FeatureConfigMismatch, WindowTooShort
from fitseq.features import WindowSample
from fitseq.metrics import (
    CNN_VOTER,
    ConfusionMatrix,
    DNN_VOTER,
    FrameVoter,
    classification_report,
    confusion_matrix,
    evaluate,
    render_report_text,
    vote,
    write_confusion_csv,
    write_report_csv,
)


def brute_force_majority(block):
    """Mode of per-frame argmaxes, all with explicit loops; ties to lowest index."""
    votes = []
    for row in block:
        best, best_v = 0, row[0]
        for j, v in enumerate(row):
            if v > best_v:
                best, best_v = j, v
        votes.append(best)
    counts = [0] * len(block[0])
    for v in votes:
        counts[v] += 1
    best, best_c = 0, counts[0]
    for j, c in enumerate(counts):
        if c > best_c:
            best, best_c = j, c
    return best


def brute_force_soft(block):
    k = len(block[0])
    sums = [0.0] * k
    for row in block:
        for j, v in enumerate(row):
            sums[j] += v
    best, best_v = 0, sums[0]
    for j, v in enumerate(sums):
        if v > best_v:
            best, best_v = j, v
    return best


class TestConfusionAndReport:
    def test_perfect_predictions_diagonal(self):
        cm = confusion_matrix([0, 1, 2, 1], [0, 1, 2, 1], ("a", "b", "c"))
        assert cm.accuracy == 1.0
        assert np.trace(cm.counts) == cm.total == 4

    def test_hand_computed_eight_sample_fixture(self):
        true = [0, 0, 1, 1, 1, 2, 2, 2]
        pred = [0, 1, 1, 1, 2, 2, 0, 2]
        cm = confusion_matrix(true, pred, ("a", "b", "c"))
        np.testing.assert_array_equal(cm.counts, [[1, 1, 0], [0, 2, 1], [1, 0, 2]])
        report = classification_report(cm)
        assert report.accuracy == pytest.approx(5 / 8)
        a, b, c = (report.per_class[k] for k in ("a", "b", "c"))
        assert (a.precision, a.recall, a.f1, a.support) == pytest.approx((0.5, 0.5, 0.5, 2))
        assert (b.precision, b.recall, b.f1) == pytest.approx((2 / 3, 2 / 3, 2 / 3))
        assert (c.precision, c.recall, c.f1) == pytest.approx((2 / 3, 2 / 3, 2 / 3))
        assert report.macro_avg == pytest.approx(((0.5 + 2 / 3 + 2 / 3) / 3,) * 3)
        assert report.weighted_avg == pytest.approx((0.625, 0.625, 0.625))
        assert report.total_support == 8

    def test_zero_division_conventions(self):
        # class "b" never predicted and never true: all metrics zero
        cm = confusion_matrix([0, 0], [0, 0], ("a", "b"))
        report = classification_report(cm)
        m = report.per_class["b"]
        assert (m.precision, m.recall, m.f1, m.support) == (0.0, 0.0, 0.0, 0)

    @given(st.integers(0, 10_000))
    @settings(max_examples=60, deadline=None)
    def test_metric_identities(self, seed):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(2, 6))
        n = int(rng.integers(1, 60))
        true = rng.integers(0, k, n)
        pred = rng.integers(0, k, n)
        cm = confusion_matrix(true, pred, tuple(f"c{i}" for i in range(k)))
        report = classification_report(cm)
        # accuracy == trace / total
        assert report.accuracy == pytest.approx(np.trace(cm.counts) / n, abs=1e-12)
        # weighted averages == support-weighted means of per-class values
        supports = np.array([report.per_class[l].support for l in cm.labels])
        for avg, attr in zip(report.weighted_avg, ("precision", "recall", "f1")):
            values = np.array([getattr(report.per_class[l], attr) for l in cm.labels])
            assert avg == pytest.approx(float(values @ supports / n), abs=1e-9)
        assert cm.total == n
        # row sums give per-class support
        np.testing.assert_array_equal(cm.counts.sum(axis=1), supports)


class TestEvaluate:
    def test_feature_config_mismatch(self, tiny_model):
        bad = [WindowSample(np.zeros((30, 20)), "squat", "v", 0)]
        with pytest.raises(FeatureConfigMismatch):
            evaluate(tiny_model, bad)

    def test_deterministic_and_self_consistent(self, tiny_model, tiny_windows):
        report_a, cm_a = evaluate(tiny_model, tiny_windows)
        report_b, cm_b = evaluate(tiny_model, tiny_windows)
        np.testing.assert_array_equal(cm_a.counts, cm_b.counts)
        assert report_a.accuracy == report_b.accuracy
        assert cm_a.total == len(tiny_windows)
        assert report_a.accuracy == pytest.approx(
            np.trace(cm_a.counts) / cm_a.total, abs=1e-12
        )


class TestVote:
    def test_identical_distributions_both_modes(self):
        row = np.array([0.1, 0.6, 0.2, 0.1])
        block = np.tile(row, (10, 1))
        assert vote(block, FrameVoter("majority", 10, 1)) == [1]
        assert vote(block, FrameVoter("soft", 10, 1)) == [1]

    def test_majority_two_to_one(self):
        block = np.array([[0.9, 0.1], [0.8, 0.2], [0.2, 0.8]])
        assert vote(block, FrameVoter("majority", 3, 1)) == [0]

    def test_majority_tie_lowest_index(self):
        block = np.array(
            [[0.9, 0.05, 0.05], [0.1, 0.1, 0.8], [0.1, 0.1, 0.8], [0.8, 0.1, 0.1]]
        )
        # two votes for class 0, two for class 2 -> lowest index wins
        assert vote(block, FrameVoter("majority", 4, 1)) == [0]

    def test_window_too_short(self):
        with pytest.raises(WindowTooShort):
            vote(np.ones((5, 2)) / 2, FrameVoter("soft", 10, 1))

    def test_brute_force_equivalence_random(self):
        rng = np.random.default_rng(77)
        for _ in range(300):
            block = rng.random((10, 4))
            block /= block.sum(axis=1, keepdims=True)
            assert vote(block, FrameVoter("majority", 10, 1)) == [brute_force_majority(block)]
            assert vote(block, FrameVoter("soft", 10, 1)) == [brute_force_soft(block)]

    def test_stride_and_window_partitioning(self):
        rng = np.random.default_rng(3)
        block = rng.random((95, 4))
        labels = vote(block, CNN_VOTER)      # window 30 stride 30
        assert len(labels) == 3
        labels = vote(block, DNN_VOTER)      # window 10 stride 1
        assert len(labels) == 95 - 10 + 1

    @given(st.integers(0, 100_000))
    @settings(max_examples=50, deadline=None)
    def test_frame_permutation_invariance(self, seed):
        rng = np.random.default_rng(seed)
        block = rng.random((8, 3))
        perm = rng.permutation(8)
        for mode in ("majority", "soft"):
            voter = FrameVoter(mode, 8, 1)
            assert vote(block, voter) == vote(block[perm], voter)

    def test_soft_vote_scale_invariance(self):
        rng = np.random.default_rng(5)
        block = rng.random((6, 4))
        voter = FrameVoter("soft", 6, 1)
        assert vote(block, voter) == vote(block * 3.7, voter)

    def test_unanimous_windows_agree_across_modes(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            k = 4
            winner = int(rng.integers(0, k))
            block = rng.uniform(0, 0.2, (6, k))
            block[:, winner] += 1.0
            maj = vote(block, FrameVoter("majority", 6, 1))
            soft = vote(block, FrameVoter("soft", 6, 1))
            assert maj == soft == [winner]


class TestRendering:
    def fixture_report(self):
        cm = confusion_matrix([0, 0, 1, 1], [0, 1, 1, 1], ("push_up", "squat"))
        return classification_report(cm), cm

    def test_text_layout(self):
        report, _ = self.fixture_report()
        text = render_report_text(report)
        assert "precision" in text and "weighted avg" in text
        assert "push_up" in text and "accuracy" in text

    def test_csv_outputs(self):
        report, cm = self.fixture_report()
        rep_sink, cm_sink = io.BytesIO(), io.BytesIO()
        write_report_csv(report, rep_sink)
        write_confusion_csv(cm, cm_sink)
        rep_lines = rep_sink.getvalue().decode().splitlines()
        assert rep_lines[0] == "class,precision,recall,f1,support"
        assert len(rep_lines) == 1 + 2 + 3       # header + classes + summary rows
        cm_lines = cm_sink.getvalue().decode().splitlines()
        assert cm_lines[0] == "true\\pred,push_up,squat"
        assert cm_lines[1] == "push_up,1,1"
        assert cm_lines[2] == "squat,0,2"

    def test_counts_validation(self):
        with pytest.raises(Exception):
            ConfusionMatrix(np.zeros((2, 3)), ("a", "b"))

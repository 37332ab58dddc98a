"""Tests for gfstool's metrics module."""

import math

import numpy as np
import pytest

from gfstool.metrics import (
    SCORE_NAMES,
    ConfusionCounts,
    MetricsException,
    ScoreReport,
    capacity_term,
    confusion,
    empirical_risk,
    hss,
    recall,
    score,
    score_suite,
    specificity,
    summarize,
    tss,
)


def test_confusion() -> None:
    assert confusion([1, -1], [1, -1]) == ConfusionCounts(tn=1, fp=0, fn=0, tp=1)
    assert confusion([1, 1], [-1, -1]) == ConfusionCounts(0, 2, 0, 0)
    assert confusion([1, -1, -1, 1], [1, 1, -1, -1]) == ConfusionCounts(1, 1, 1, 1)


@pytest.mark.parametrize(
    "predicted, truth",
    [
        ([1, -1], [1]),
        ([1, 0], [1, -1]),
        ([1, -1], [2, -1]),
        ([], []),
    ],
)
def test_confusion_errors(predicted: list, truth: list) -> None:
    with pytest.raises(MetricsException):
        confusion(predicted, truth)


def test_tss() -> None:
    """Known TSS values."""
    assert tss(ConfusionCounts(1, 0, 0, 1)) == 1.0
    assert tss(ConfusionCounts(50, 50, 25, 25)) == 0.0
    assert tss(ConfusionCounts(90, 10, 5, 20)) == pytest.approx(0.7)


def test_score_suite_perfect() -> None:
    report = score_suite(ConfusionCounts(1, 0, 0, 1))
    for name in SCORE_NAMES:
        assert getattr(report, name) == pytest.approx(1.0)
    assert report.undefined == []


def test_score_suite_values() -> None:
    report = score_suite(ConfusionCounts(tn=90, fp=10, fn=5, tp=20))
    assert report.precision == pytest.approx(20 / 30)
    assert report.recall == pytest.approx(0.8)
    assert report.specificity == pytest.approx(0.9)
    assert report.f1 == pytest.approx(2 * (2 / 3 * 0.8) / (2 / 3 + 0.8))
    assert report.f1 == pytest.approx(0.7273, abs=1e-4)
    assert report.balanced_accuracy == pytest.approx(0.85)
    assert report.accuracy == pytest.approx(110 / 125)
    # 2 (20 * 90 - 10 * 5) / ((20 + 5)(5 + 90) + (20 + 10)(10 + 90))
    assert report.hss == pytest.approx(3500 / 5375)


def test_score_suite_missing_negatives() -> None:
    """Scores needing negatives are undefined when there are none."""
    report = score_suite(ConfusionCounts(0, 0, 0, 5))
    assert report.recall == 1.0
    assert report.specificity is None
    assert report.tss is None
    assert "tss" in report.undefined
    assert "specificity" in report.undefined
    assert report.to_dict()["tss"] is None


def test_scores_are_order_invariant() -> None:
    rng = np.random.default_rng(3)
    truth = rng.choice([-1, 1], size=50)
    predicted = rng.choice([-1, 1], size=50)
    order = rng.permutation(50)
    assert score_suite(confusion(predicted, truth)) == score_suite(
        confusion(predicted[order], truth[order])
    )


def test_class_swap() -> None:
    """Swapping the classes swaps recall and specificity."""
    rng = np.random.default_rng(4)
    truth = rng.choice([-1, 1], size=60)
    predicted = rng.choice([-1, 1], size=60)
    c = confusion(predicted, truth)
    swapped = confusion(-predicted, -truth)

    assert recall(swapped) == pytest.approx(specificity(c))
    assert specificity(swapped) == pytest.approx(recall(c))
    assert tss(swapped) == pytest.approx(tss(c))


def test_constant_predictors_have_zero_tss() -> None:
    """Always answering one class has no skill."""
    truth = np.array([1, -1, -1, 1, -1])
    assert tss(confusion(np.ones(5, dtype=int), truth)) == 0.0
    assert tss(confusion(-np.ones(5, dtype=int), truth)) == 0.0


def test_hss_zero_when_independent() -> None:
    # tp * tn == fp * fn
    assert hss(ConfusionCounts(tn=12, fp=4, fn=6, tp=2)) == 0.0
    assert hss(ConfusionCounts(tn=1, fp=0, fn=0, tp=1)) == 1.0


def test_score_lookup() -> None:
    c = ConfusionCounts(90, 10, 5, 20)
    assert score("tss", c) == tss(c)
    assert score("f1", c) == score_suite(c).f1
    with pytest.raises(MetricsException):
        score("auc", c)


def test_confusion_counts_validation() -> None:
    with pytest.raises(MetricsException):
        ConfusionCounts(-1, 0, 0, 1)
    with pytest.raises(MetricsException):
        ConfusionCounts(0, 0, 0, 0)


def test_summarize() -> None:
    """Mean and population std skip undefined reports."""
    perfect = score_suite(ConfusionCounts(5, 0, 0, 5))
    half = score_suite(ConfusionCounts(5, 0, 5, 0))
    summary = summarize([perfect, half])

    # TSS 1 and 0: mean 0.5, population std 0.5
    assert summary["tss"] == {"mean": 0.5, "std": 0.5, "count": 2}
    # precision undefined for the second report
    assert summary["precision"] == {"mean": 1.0, "std": 0.0, "count": 1}


def test_summarize_two_splits_std_is_half_the_difference() -> None:
    a = score_suite(ConfusionCounts(90, 10, 5, 20))
    b = score_suite(ConfusionCounts(50, 50, 25, 25))
    summary = summarize([a, b])
    for name in SCORE_NAMES:
        x, y = getattr(a, name), getattr(b, name)
        assert summary[name]["std"] == pytest.approx(abs(x - y) / 2)


def test_summarize_all_undefined() -> None:
    report = ScoreReport(None, None, None, None, None, None, None, 0.5)
    summary = summarize([report])
    assert summary["tss"] == {"mean": None, "std": None, "count": 0}
    assert summary["accuracy"]["mean"] == 0.5


def test_empirical_risk() -> None:
    assert empirical_risk([1, -1, 1, 1], [1, -1, -1, -1]) == 0.5
    assert empirical_risk([1, -1], [1, -1]) == 0.0


def test_capacity_term() -> None:
    """Capacity term values and domain errors."""
    expected = math.sqrt((3 * (math.log(2 * 100 / 3) + 1) + math.log(4 / 0.05)) / 100)
    assert capacity_term(3, 100, 0.05) == pytest.approx(expected)
    assert capacity_term(3, 1000, 0.05) < capacity_term(3, 100, 0.05)

    for s, n, delta in ((0, 10, 0.1), (10, 10, 0.1), (3, 10, 0.0), (3, 10, 1.0)):
        with pytest.raises(MetricsException):
            capacity_term(s, n, delta)


def test_tss_is_recall_plus_specificity_minus_one() -> None:
    """The identity holds on random counts."""
    rng = np.random.default_rng(5)
    for counts in rng.integers(1, 1000, size=(10_000, 4)):
        c = ConfusionCounts(*(int(v) for v in counts))
        assert tss(c) == pytest.approx(recall(c) + specificity(c) - 1, abs=1e-12)

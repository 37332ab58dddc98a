"""
Skill scores for binary classification

All scores are computed from a 2x2 confusion table with +1 as the positive
class. A score whose denominator is zero is undefined and reported as None
(null in JSON) instead of raising, since small validation sets can lack a
class.

The Heidke Skill Score uses the standard 2x2 form
``2 (TP TN - FP FN) / ((TP + FN)(FN + TN) + (TP + FP)(FP + TN))``.
"""

import math
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

SCORE_NAMES: Tuple[str, ...] = (
    "tss",
    "hss",
    "precision",
    "recall",
    "specificity",
    "f1",
    "balanced_accuracy",
    "accuracy",
)


class MetricsException(Exception):
    """
    Raised when predictions and truth cannot be compared
    """


@dataclass(frozen=True)
class ConfusionCounts:
    """
    True negatives, false positives, false negatives and true positives
    """

    tn: int
    fp: int
    fn: int
    tp: int

    def __post_init__(self) -> None:
        if min(self.tn, self.fp, self.fn, self.tp) < 0:
            raise MetricsException(f"Negative count in {self}")
        if self.tn + self.fp + self.fn + self.tp < 1:
            raise MetricsException("A confusion table needs at least one example")


@dataclass(frozen=True)
class ScoreReport:  # pylint: disable=too-many-instance-attributes
    """
    The full score suite; None marks an undefined score
    """

    tss: Optional[float]
    hss: Optional[float]
    precision: Optional[float]
    recall: Optional[float]
    specificity: Optional[float]
    f1: Optional[float]
    balanced_accuracy: Optional[float]
    accuracy: Optional[float]

    @property
    def undefined(self) -> List[str]:
        """Names of the scores that could not be computed"""
        return [name for name in SCORE_NAMES if getattr(self, name) is None]

    def to_dict(self) -> Dict[str, Optional[float]]:
        """Flat mapping from score name to value"""
        return asdict(self)


def _ratio(numerator: float, denominator: float) -> Optional[float]:
    return numerator / denominator if denominator else None


def _check_labels(values: np.ndarray, what: str) -> None:
    if not np.all(np.isin(values, (-1, 1))):
        raise MetricsException(f"{what} labels must be -1 or +1")


def confusion(predicted: Sequence[int], truth: Sequence[int]) -> ConfusionCounts:
    """
    Count the 2x2 table of predicted against true labels
    """
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape or predicted.ndim != 1:
        raise MetricsException(
            f"Length mismatch: {predicted.shape} predicted, {truth.shape} true"
        )
    if predicted.size < 1:
        raise MetricsException("At least one example is needed")
    _check_labels(predicted, "Predicted")
    _check_labels(truth, "True")

    positive = truth == 1
    hit = predicted == 1
    return ConfusionCounts(
        tn=int(np.sum(~positive & ~hit)),
        fp=int(np.sum(~positive & hit)),
        fn=int(np.sum(positive & ~hit)),
        tp=int(np.sum(positive & hit)),
    )


def recall(c: ConfusionCounts) -> Optional[float]:
    """TP / (FN + TP)"""
    return _ratio(c.tp, c.fn + c.tp)


def specificity(c: ConfusionCounts) -> Optional[float]:
    """TN / (FP + TN)"""
    return _ratio(c.tn, c.fp + c.tn)


def tss(c: ConfusionCounts) -> Optional[float]:
    """
    True Skill Statistic, recall + specificity - 1

    Undefined when either class is missing from the truth.
    """
    r, s = recall(c), specificity(c)
    if r is None or s is None:
        return None
    return r + s - 1


def hss(c: ConfusionCounts) -> Optional[float]:
    """Heidke Skill Score"""
    return _ratio(
        2 * (c.tp * c.tn - c.fp * c.fn),
        (c.tp + c.fn) * (c.fn + c.tn) + (c.tp + c.fp) * (c.fp + c.tn),
    )


def score_suite(c: ConfusionCounts) -> ScoreReport:
    """
    Compute every score of the suite for one confusion table
    """
    r, s = recall(c), specificity(c)
    precision = _ratio(c.tp, c.tp + c.fp)
    f1 = None
    if precision is not None and r is not None:
        f1 = _ratio(2 * precision * r, precision + r)
    return ScoreReport(
        tss=tss(c),
        hss=hss(c),
        precision=precision,
        recall=r,
        specificity=s,
        f1=f1,
        balanced_accuracy=None if r is None or s is None else (r + s) / 2,
        accuracy=(c.tp + c.tn) / (c.tn + c.fp + c.fn + c.tp),
    )


SCORERS = {
    "tss": tss,
    "hss": hss,
    "recall": recall,
    "specificity": specificity,
}


def score(name: str, c: ConfusionCounts) -> Optional[float]:
    """
    Look up a single score by name
    """
    if name in SCORERS:
        return SCORERS[name](c)
    if name in SCORE_NAMES:
        return getattr(score_suite(c), name)
    raise MetricsException(f"Unknown score '{name}', expected one of {SCORE_NAMES}")


def summarize(
    reports: Sequence[ScoreReport],
) -> Dict[str, Dict[str, Optional[float]]]:
    """
    Mean and population std of each score over several reports

    Undefined entries are skipped; ``count`` is the number of defined entries.
    """
    summary: Dict[str, Dict[str, Optional[float]]] = {}
    for name in SCORE_NAMES:
        values = [v for v in (getattr(r, name) for r in reports) if v is not None]
        summary[name] = {
            "mean": float(np.mean(values)) if values else None,
            "std": float(np.std(values)) if values else None,
            "count": len(values),
        }
    return summary


def empirical_risk(predicted: Sequence[int], truth: Sequence[int]) -> float:
    """
    Mean zero-one loss, (1/2)|f(x) - y| averaged over the examples
    """
    c = confusion(predicted, truth)
    return (c.fp + c.fn) / (c.tn + c.fp + c.fn + c.tp)


def capacity_term(s: int, n: int, delta: float) -> float:
    """
    Capacity term of the VC generalisation bound

    With probability 1 - delta the generalisation risk is at most the
    empirical risk plus sqrt((s (log(2n / s) + 1) + log(4 / delta)) / n)
    for a class of VC dimension s < n.
    """
    if not 0 < s < n:
        raise MetricsException(f"Need 0 < s < n, got s={s}, n={n}")
    if not 0 < delta < 1:
        raise MetricsException(f"Need 0 < delta < 1, got {delta}")
    return math.sqrt((s * (math.log(2 * n / s) + 1) + math.log(4 / delta)) / n)

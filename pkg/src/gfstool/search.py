"""
Randomized, cross-validated search over the SVM hyperparameters

Draws (C, gamma) pairs uniformly from the configured ranges and keeps the pair
with the best mean score over stratified folds.
"""

from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from gfstool._processing import _concurrent_map
from gfstool._seeding import derive_seed, substream
from gfstool.data import Dataset, Split, stratified_folds
from gfstool.logger import get_logger
from gfstool.metrics import confusion, score
from gfstool.models import (
    ModelConfigException,
    TrainingException,
    fit_pipeline,
)
from gfstool.svm import SvmClassifier, SvmConfig


class SearchException(Exception):
    """
    Raised when no hyperparameter candidate yields a defined score
    """


@dataclass(frozen=True)
class HyperSearchSpec:
    """
    Ranges for C and gamma, number of draws, folds and seed
    """

    C_range: Tuple[float, float] = (0.1, 1000.0)
    gamma_range: Tuple[float, float] = (0.001, 0.1)
    n_draws: int = 10
    folds: int = 3
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "C_range", tuple(float(v) for v in self.C_range))
        object.__setattr__(
            self, "gamma_range", tuple(float(v) for v in self.gamma_range)
        )
        for name, (low, high) in (("C", self.C_range), ("gamma", self.gamma_range)):
            if not 0 < low <= high:
                raise ModelConfigException(
                    f"{name} range must be positive and ordered, got [{low}, {high}]"
                )
        if self.n_draws < 1:
            raise ModelConfigException(
                f"n_draws must be at least 1, got {self.n_draws}"
            )
        if self.folds < 2:
            raise ModelConfigException(f"folds must be at least 2, got {self.folds}")


@dataclass(frozen=True)
class Candidate:
    """
    One drawn (C, gamma) pair and its mean fold score
    """

    C: float
    gamma: float
    mean: Optional[float]
    fold_scores: Tuple[Optional[float], ...]


def draw_candidates(spec: HyperSearchSpec) -> List[Tuple[float, float]]:
    """
    The (C, gamma) pairs of a search, in draw order
    """
    rng = substream(spec.seed, "search")
    return [
        (float(rng.uniform(*spec.C_range)), float(rng.uniform(*spec.gamma_range)))
        for _ in range(spec.n_draws)
    ]


def cv_score(
    train: Dataset,
    classifier: SvmClassifier,
    folds: Sequence[Split],
    metric: str = "tss",
) -> Tuple[Optional[float], Tuple[Optional[float], ...]]:
    """
    Mean score over folds, skipping folds where the score is undefined
    """
    scores: List[Optional[float]] = []
    for fold in folds:
        try:
            pipeline = fit_pipeline(classifier, train.take(fold.train_idx))
        except TrainingException:
            scores.append(None)
            continue
        valid = train.take(fold.valid_idx)
        scores.append(score(metric, confusion(pipeline.predict(valid.X), valid.y)))
    defined = [s for s in scores if s is not None]
    return (float(np.mean(defined)) if defined else None), tuple(scores)


def random_search_cv(
    train: Dataset,
    spec: HyperSearchSpec,
    metric: str = "tss",
    base: Optional[SvmConfig] = None,
    options: Optional[Dict[str, Any]] = None,
) -> SvmConfig:
    """
    Return ``base`` with the (C, gamma) pair of best mean fold score

    Ties go to the earliest draw.
    """
    return search_candidates(train, spec, metric, base, options)[0]


def search_candidates(
    train: Dataset,
    spec: HyperSearchSpec,
    metric: str = "tss",
    base: Optional[SvmConfig] = None,
    options: Optional[Dict[str, Any]] = None,
) -> Tuple[SvmConfig, List[Candidate]]:
    """
    Run the search and also return every evaluated candidate
    """
    options = options or {}
    log = get_logger(options)
    base = base or SvmConfig()
    folds = stratified_folds(train.y, spec.folds, derive_seed(spec.seed, "folds"))

    def _evaluate(pair: Tuple[float, float]) -> Candidate:
        C, gamma = pair
        classifier = SvmClassifier(base).with_params(C, gamma)
        mean, fold_scores = cv_score(train, classifier, folds, metric)
        log.debug(f"Search draw C={C:.4g} gamma={gamma:.4g}: mean {metric} {mean}")
        return Candidate(C, gamma, mean, fold_scores)

    candidates = _concurrent_map(
        _evaluate, draw_candidates(spec), options.get("concurrency", 1)
    )
    best: Optional[Candidate] = None
    best_mean = -np.inf
    for candidate in candidates:
        if candidate.mean is not None and candidate.mean > best_mean:
            best, best_mean = candidate, candidate.mean
    if best is None:
        raise SearchException(
            f"All {spec.n_draws} candidate(s) gave an undefined {metric}"
        )
    log.info(f"Search selected C={best.C:.4g}, gamma={best.gamma:.4g}")
    return replace(base, C=best.C, gamma=best.gamma), candidates

"""
Classifier-dependent greedy feature ranking

At step k every feature not yet selected is tried as an addition to the
selected prefix: a fresh classifier is trained on each of q train/validation
splits and scored on the validation part. The candidate with the best mean
score is selected. The same splits and model seeds are used for every
candidate of a step, so candidates are compared on paired data.

The ranking stops when adding a feature no longer changes the mean score
significantly,

    |m_{k+1} - m_k| / sqrt(sigma_{k+1}^2 + sigma_k^2) < tau,

and the selection is then cut at k*, the step with the largest mean score.
The step that triggered the stop stays in the trace for reporting.
"""

import json
from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from rich.table import Table

from gfstool._processing import _concurrent_map
from gfstool._seeding import derive_seed
from gfstool.data import (
    Dataset,
    DatasetException,
    Split,
    SplitPlan,
    make_splits,
    project_features,
)
from gfstool.logger import get_logger
from gfstool.metrics import SCORE_NAMES, confusion, score
from gfstool.mlp import MlpConfig
from gfstool.models import (
    CLASSIFIER_KINDS,
    Classifier,
    TrainingException,
    fit_pipeline,
    make_classifier,
)
from gfstool.search import HyperSearchSpec, random_search_cv
from gfstool.svm import SvmClassifier, SvmConfig

StopReason = str
ClassifierFactory = Callable[[int], Classifier]


class GreedyConfigException(Exception):
    """
    Raised when a greedy configuration is invalid for the data
    """


class StepException(Exception):
    """
    Raised when no candidate of a greedy step has a defined score
    """


@dataclass(frozen=True)
class GreedyConfig:  # pylint: disable=too-many-instance-attributes
    """
    Settings of a greedy ranking run
    """

    q: int = 7
    validation_fraction: float = 0.3
    tau: float = 9e-2
    metric: str = "tss"
    classifier: str = "svm"
    svm: SvmConfig = SvmConfig()
    mlp: MlpConfig = MlpConfig()
    search: Optional[HyperSearchSpec] = None
    search_per_step: bool = False
    max_features: Optional[int] = None
    seed: int = 0
    stratified: bool = True
    standardize: bool = True
    fixed_splits: bool = False

    def __post_init__(self) -> None:
        if self.q < 2:
            raise GreedyConfigException(
                f"q must be at least 2 so that the score spread exists, got {self.q}"
            )
        if not self.tau > 0:
            raise GreedyConfigException(f"tau must be positive, got {self.tau}")
        if self.metric not in SCORE_NAMES:
            raise GreedyConfigException(
                f"Unknown metric '{self.metric}', expected one of {SCORE_NAMES}"
            )
        if self.classifier not in CLASSIFIER_KINDS:
            raise GreedyConfigException(
                f"Unknown classifier '{self.classifier}', "
                f"expected one of {CLASSIFIER_KINDS}"
            )
        if self.search is not None and self.classifier != "svm":
            raise GreedyConfigException("Hyperparameter search is SVM-only")
        if self.max_features is not None and self.max_features < 1:
            raise GreedyConfigException(
                f"max_features must be at least 1, got {self.max_features}"
            )
        if not 0 < self.validation_fraction < 1:
            raise GreedyConfigException(
                "validation_fraction must lie in (0, 1), "
                f"got {self.validation_fraction}"
            )

    def to_dict(self) -> Dict[str, Any]:
        """Config echo for traces"""
        echo = asdict(self)
        echo["mlp"]["hidden_widths"] = list(self.mlp.hidden_widths)
        if self.search is not None:
            echo["search"]["C_range"] = list(self.search.C_range)
            echo["search"]["gamma_range"] = list(self.search.gamma_range)
        return echo


@dataclass(frozen=True)
class CandidateScore:
    """
    Per-split scores of one candidate feature; None marks an undefined split
    """

    feature: int
    scores: Tuple[Optional[float], ...]
    mean: Optional[float]
    std: Optional[float]

    @property
    def undefined(self) -> int:
        """Number of splits without a score"""
        return sum(s is None for s in self.scores)

    @classmethod
    def from_scores(
        cls, feature: int, scores: Sequence[Optional[float]]
    ) -> "CandidateScore":
        """Summarise the defined scores by mean and population std"""
        defined = [s for s in scores if s is not None]
        if not defined:
            return cls(feature, tuple(scores), None, None)
        return cls(
            feature, tuple(scores), float(np.mean(defined)), float(np.std(defined))
        )


@dataclass(frozen=True)
class StepRecord:
    """
    One greedy step: the chosen feature and the full candidate table
    """

    k: int
    chosen: int
    candidates: Tuple[CandidateScore, ...]
    m: float
    sigma: float


@dataclass(frozen=True)
class GreedyTrace:
    """
    Every recorded step, why the ranking stopped, and k*
    """

    steps: Tuple[StepRecord, ...]
    stop_reason: StopReason
    k_star: int
    feature_names: Tuple[str, ...]
    config: Dict[str, Any]

    @property
    def ranking(self) -> List[int]:
        """Features in the order they were chosen, including the stop step"""
        return [step.chosen for step in self.steps]

    @property
    def selected(self) -> List[int]:
        """The first k* chosen features"""
        return self.ranking[: self.k_star]

    @property
    def selected_names(self) -> List[str]:
        """Names of the selected features"""
        return [self.feature_names[j] for j in self.selected]

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready form"""
        names = self.feature_names
        return {
            "config": self.config,
            "seed": self.config.get("seed"),
            "feature_names": list(names),
            "steps": [
                {
                    "k": step.k,
                    "chosen": step.chosen,
                    "chosen_name": names[step.chosen],
                    "m": step.m,
                    "sigma": step.sigma,
                    "candidates": [
                        {
                            "feature": c.feature,
                            "name": names[c.feature],
                            "mean": c.mean,
                            "std": c.std,
                            "scores": list(c.scores),
                            "undefined": c.undefined,
                        }
                        for c in step.candidates
                    ],
                }
                for step in self.steps
            ],
            "stop_reason": self.stop_reason,
            "k_star": self.k_star,
            "selected": self.selected,
            "selected_names": self.selected_names,
        }

    def to_json(self) -> str:
        """Deterministic JSON text"""
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GreedyTrace":
        """Rebuild a trace from its JSON form"""
        steps = tuple(
            StepRecord(
                k=step["k"],
                chosen=step["chosen"],
                candidates=tuple(
                    CandidateScore(
                        c["feature"], tuple(c["scores"]), c["mean"], c["std"]
                    )
                    for c in step["candidates"]
                ),
                m=step["m"],
                sigma=step["sigma"],
            )
            for step in data["steps"]
        )
        return cls(
            steps,
            data["stop_reason"],
            data["k_star"],
            tuple(data["feature_names"]),
            data.get("config", {}),
        )


def format_table(trace: GreedyTrace, title: Optional[str] = None) -> Table:
    """
    Ranking table, one row per step, with a rule under the last selected step
    """
    metric = str(trace.config.get("metric", "tss")).upper()
    table = Table(title=title)
    table.add_column("Step", justify="right")
    table.add_column("Feature")
    table.add_column(f"{metric} mean ± std", justify="right")
    for step in trace.steps:
        table.add_row(
            str(step.k),
            trace.feature_names[step.chosen],
            f"{step.m:.3f} ± {step.sigma:.3f}",
            end_section=step.k == trace.k_star,
        )
    return table


def should_stop(
    m_k: float, sigma_k: float, m_k1: float, sigma_k1: float, tau: float
) -> bool:
    """
    True when the change of mean score between two steps is below tau spreads

    With both spreads zero the ranking stops only if the means are equal.
    """
    spread = float(np.sqrt(sigma_k1**2 + sigma_k**2))
    if spread == 0:
        return m_k1 == m_k
    return abs(m_k1 - m_k) / spread < tau


def select_k_star(means: Sequence[float]) -> int:
    """
    1-based index of the largest mean score, the earliest on ties
    """
    if not means:
        raise StepException("Cannot select k* from an empty trace")
    best = 0
    for j, m in enumerate(means):
        if m > means[best]:
            best = j
    return best + 1


def greedy_step(  # pylint: disable=too-many-arguments, too-many-positional-arguments
    ds: Dataset,
    selected: Sequence[int],
    factory: ClassifierFactory,
    splits: Sequence[Split],
    metric: str = "tss",
    k: Optional[int] = None,
    scale: bool = True,
    options: Optional[Dict[str, Any]] = None,
) -> StepRecord:
    """
    Try every remaining feature next to ``selected`` and pick the best

    ``factory(h)`` returns the classifier used on split ``h``; it is called
    with the same h for every candidate so the models are paired. Training
    failures and undefined scores leave the split unscored. Ties go to the
    smallest feature index.
    """
    options = options or {}
    log = get_logger(options)
    k = k if k is not None else len(selected) + 1
    remaining = [p for p in range(ds.d) if p not in set(selected)]
    if not remaining:
        raise StepException("No candidate features remain")

    def _evaluate(p: int) -> CandidateScore:
        sub = project_features(ds, [*selected, p])
        scores: List[Optional[float]] = []
        for h, split in enumerate(splits):
            try:
                pipeline = fit_pipeline(factory(h), sub.take(split.train_idx), scale)
            except TrainingException as e:
                log.warning(f"Step {k}, feature {ds.names[p]}, split {h}: {e}")
                scores.append(None)
                continue
            where = f"Step {k}, feature {ds.names[p]}, split {h}"
            if not getattr(pipeline.model, "converged", True):
                log.debug(f"{where}: SMO finished outside the KKT tolerance")
            if best_epoch := getattr(pipeline.model, "best_epoch", 0):
                log.debug(f"{where}: network kept epoch {best_epoch}")
            valid = sub.take(split.valid_idx)
            value = score(metric, confusion(pipeline.predict(valid.X), valid.y))
            if value is None:
                log.warning(
                    f"Step {k}, feature {ds.names[p]}, split {h}: "
                    f"{metric} undefined on the validation part"
                )
            scores.append(value)
        return CandidateScore.from_scores(p, scores)

    table = _concurrent_map(_evaluate, remaining, options.get("concurrency", 1))

    winner: Optional[CandidateScore] = None
    best = -np.inf
    for candidate in table:
        if candidate.mean is not None and candidate.mean > best:
            winner, best = candidate, candidate.mean
    if winner is None or winner.mean is None or winner.std is None:
        raise StepException(
            f"Step {k}: no candidate has a defined {metric} on any split"
        )
    return StepRecord(k, winner.feature, tuple(table), winner.mean, winner.std)


def _tune(
    ds: Dataset, spec: HyperSearchSpec, cfg: GreedyConfig, options: Dict[str, Any]
) -> SvmClassifier:
    return SvmClassifier(
        random_search_cv(ds, spec, cfg.metric, base=cfg.svm, options=options)
    )


def run_greedy(
    ds: Dataset, cfg: GreedyConfig, options: Optional[Dict[str, Any]] = None
) -> GreedyTrace:
    """
    Rank features greedily until the stopping rule, a cap, or exhaustion
    """
    options = options or {}
    log = get_logger(options)
    if ds.d < 2:
        raise GreedyConfigException(f"Ranking needs at least 2 features, got {ds.d}")
    if not ds.has_both_classes():
        raise DatasetException("Ranking needs examples of both classes")

    classifier: Classifier = make_classifier(
        cfg.classifier, cfg.svm if cfg.classifier == "svm" else cfg.mlp
    )
    echo = cfg.to_dict()
    tuned: List[Dict[str, Any]] = []
    if cfg.search is not None:
        svm = _tune(ds, cfg.search, cfg, options)
        tuned.append(asdict(svm.config))
        classifier = svm

    cap = min(cfg.max_features or ds.d, ds.d)
    selected: List[int] = []
    steps: List[StepRecord] = []
    stop_reason = "exhausted" if cap == ds.d else "cap"

    for k in range(1, cap + 1):
        plan = SplitPlan(
            cfg.q,
            cfg.validation_fraction,
            derive_seed(cfg.seed, "split", 0 if cfg.fixed_splits else k),
            cfg.stratified,
        )
        splits = make_splits(ds.n, ds.y, plan)
        if cfg.search_per_step and cfg.search is not None and k > 1:
            svm = _tune(project_features(ds, selected), cfg.search, cfg, options)
            tuned.append(asdict(svm.config))
            classifier = svm

        def _factory(h: int, k: int = k, base: Classifier = classifier) -> Classifier:
            return base.with_seed(derive_seed(cfg.seed, "model", k, h))

        record = greedy_step(
            ds, selected, _factory, splits, cfg.metric, k, cfg.standardize, options
        )
        steps.append(record)
        selected.append(record.chosen)
        log.info(
            f"Step {k}: {ds.names[record.chosen]} "
            f"{cfg.metric} {record.m:.3f} ± {record.sigma:.3f}"
        )

        if k > 1:
            previous = steps[-2]
            if should_stop(previous.m, previous.sigma, record.m, record.sigma, cfg.tau):
                stop_reason = "threshold"
                break

    if tuned:
        echo["tuned"] = tuned
    k_star = select_k_star([step.m for step in steps])
    log.info(
        f"Stopped ({stop_reason}) after {len(steps)} step(s); "
        f"selected {[ds.names[j] for j in selected[:k_star]]}"
    )
    return GreedyTrace(tuple(steps), stop_reason, k_star, ds.names, echo)


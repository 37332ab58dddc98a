"""Tests for gfstool's greedy module."""

import json
from dataclasses import dataclass
from typing import Any

import numpy as np
import pytest
from rich.table import Table

from gfstool.data import (
    Dataset,
    DatasetException,
    SplitPlan,
    generate_synthetic,
    make_splits,
)
from gfstool.greedy import (
    CandidateScore,
    GreedyConfig,
    GreedyConfigException,
    GreedyTrace,
    StepException,
    format_table,
    greedy_step,
    run_greedy,
    select_k_star,
    should_stop,
)
from gfstool.kernel_lab import alignment_trace
from gfstool.mlp import MlpConfig
from gfstool.models import TrainingException
from gfstool.search import HyperSearchSpec
from gfstool.svm import SvmClassifier, SvmConfig, SvmModel

from ..fixtures import RecordingLogger, names, sign_of_feature


@dataclass(frozen=True)
class FlippedModel:
    inner: SvmModel
    kind: str = "svm"

    @property
    def n_features(self) -> int:
        return self.inner.n_features

    def predict(self, X: np.ndarray) -> np.ndarray:
        return -self.inner.predict(X)

    def to_dict(self) -> dict:
        return self.inner.to_dict()


@dataclass(frozen=True)
class FlippedClassifier:
    inner: SvmClassifier = SvmClassifier()
    descriptor: str = "flipped"

    def fit(self, train: Dataset) -> FlippedModel:
        return FlippedModel(self.inner.fit(train))

    def with_seed(self, seed: int) -> "FlippedClassifier":
        return FlippedClassifier(self.inner.with_seed(seed))


@dataclass(frozen=True)
class FailingClassifier:
    """Fails on the splits listed in ``fail_on``."""

    split: int
    fail_on: tuple = (0,)
    descriptor: str = "failing"

    def fit(self, train: Dataset) -> SvmModel:
        if self.split in self.fail_on:
            raise TrainingException("solver diverged")
        return SvmClassifier().fit(train)

    def with_seed(self, seed: int) -> "FailingClassifier":
        return self


def splits_for(ds: Dataset, q: int = 3) -> list:
    return make_splits(ds.n, ds.y, SplitPlan(q=q, validation_fraction=0.3, seed=1))


def small_config(**kwargs: Any) -> GreedyConfig:
    return GreedyConfig(**{"q": 3, **kwargs})


def test_should_stop() -> None:
    """Stopping compares the mean gain with the pooled spread."""
    assert should_stop(0.5, 0.1, 0.5, 0.1, 0.09)
    assert not should_stop(0.5, 0.1, 0.8, 0.1, 0.09)
    # |0.51 - 0.5| / sqrt(0.1^2 + 0.1^2) ~ 0.0707
    assert should_stop(0.5, 0.1, 0.51, 0.1, 0.09)
    assert not should_stop(0.5, 0.1, 0.51, 0.1, 0.05)


def test_should_stop_with_zero_spread() -> None:
    assert should_stop(1.0, 0.0, 1.0, 0.0, 0.09)
    assert not should_stop(0.9, 0.0, 1.0, 0.0, 0.09)


def test_select_k_star() -> None:
    """k* is the first step with the largest mean."""
    assert select_k_star([0.2, 0.5, 0.5, 0.4]) == 2
    assert select_k_star([0.9]) == 1
    assert select_k_star([0.1, 0.2, 0.3]) == 3
    with pytest.raises(StepException):
        select_k_star([])


def test_candidate_score_summary() -> None:
    """Undefined split scores are left out of mean and std."""
    c = CandidateScore.from_scores(2, [1.0, None, 0.5])
    assert c.mean == 0.75
    assert c.std == 0.25
    assert c.undefined == 1

    empty = CandidateScore.from_scores(0, [None, None])
    assert empty.mean is None
    assert empty.std is None


def test_informative_feature_is_ranked_first() -> None:
    ds = sign_of_feature(n=60, d=5, feature=3)
    trace = run_greedy(ds, small_config())

    assert trace.ranking[0] == 3
    assert trace.steps[0].m == 1.0
    assert trace.steps[0].sigma == 0.0
    assert trace.k_star == 1
    assert trace.selected == [3]
    assert trace.selected_names == ["x4"]
    assert trace.stop_reason in ("threshold", "exhausted")


def test_label_copy_with_one_noise_feature() -> None:
    rng = np.random.default_rng(4)
    y = np.array([1, -1] * 15)
    ds = Dataset(np.column_stack([y, rng.normal(size=30)]), y, names(2))
    trace = run_greedy(ds, small_config())

    assert trace.ranking[0] == 0
    assert trace.k_star == 1
    assert len(trace.steps) == 2


def test_ties_go_to_smallest_index() -> None:
    """Equal means keep the lowest feature index."""
    y = np.array([1, -1] * 10)
    ds = Dataset(np.full((20, 3), 2.0), y, names(3))
    trace = run_greedy(ds, small_config())

    assert trace.ranking == [0, 1]
    assert all(c.mean == 0.0 for c in trace.steps[0].candidates)
    assert trace.stop_reason == "threshold"
    assert trace.k_star == 1


def test_winner_has_the_best_mean() -> None:
    ds = sign_of_feature(n=40, d=4, feature=1, seed=3)
    trace = run_greedy(ds, small_config(tau=1e-9))
    for step in trace.steps:
        means = [c.mean for c in step.candidates if c.mean is not None]
        assert step.m == max(means)
        chosen = [c for c in step.candidates if c.feature == step.chosen]
        assert chosen[0].mean == step.m
        assert len(step.candidates) == ds.d - step.k + 1


def test_trace_is_deterministic() -> None:
    """Reruns and worker count leave the trace unchanged."""
    ds = sign_of_feature(n=40, d=4, feature=2, seed=5)
    cfg = small_config(seed=11)
    serial = run_greedy(ds, cfg, {"concurrency": 1}).to_json()
    again = run_greedy(ds, cfg, {"concurrency": 1}).to_json()
    parallel = run_greedy(ds, cfg, {"concurrency": 4}).to_json()
    assert serial == again == parallel


def test_trace_roundtrip() -> None:
    trace = run_greedy(sign_of_feature(n=40, d=3, feature=0), small_config())
    text = trace.to_json()
    data = json.loads(text)

    assert data["k_star"] == trace.k_star
    assert data["seed"] == 0
    assert data["steps"][0]["chosen_name"] == "x1"
    assert GreedyTrace.from_dict(data).to_json() == text


def test_flipped_classifier_flips_means() -> None:
    ds = sign_of_feature(n=40, d=3, feature=1, seed=2)
    splits = splits_for(ds)

    plain = greedy_step(ds, [], lambda h: SvmClassifier().with_seed(h), splits)
    flipped = greedy_step(ds, [], lambda h: FlippedClassifier().with_seed(h), splits)

    for a, b in zip(plain.candidates, flipped.candidates):
        assert a.feature == b.feature
        assert b.mean == pytest.approx(-a.mean)
    assert plain.chosen == 1
    assert flipped.chosen != 1


def test_failed_training_leaves_split_unscored() -> None:
    """A failed fit is logged and scored as undefined."""
    ds = sign_of_feature(n=40, d=3, feature=0)
    log = RecordingLogger()
    record = greedy_step(
        ds, [], FailingClassifier, splits_for(ds), options={"logger": log}
    )

    assert all(c.undefined == 1 and c.scores[0] is None for c in record.candidates)
    assert len(log.messages["warning"]) == ds.d
    assert "solver diverged" in log.messages["warning"][0]


def test_step_without_any_score_raises() -> None:
    ds = sign_of_feature(n=40, d=3, feature=0)

    def factory(h: int) -> FailingClassifier:
        return FailingClassifier(h, fail_on=(0, 1, 2))

    with pytest.raises(StepException):
        greedy_step(ds, [], factory, splits_for(ds))
    with pytest.raises(StepException):
        greedy_step(ds, [0, 1, 2], factory, splits_for(ds))


def test_cap_stops_the_ranking() -> None:
    """max_features ends the ranking early."""
    ds = sign_of_feature(n=40, d=4, feature=0)
    trace = run_greedy(ds, small_config(max_features=1))
    assert trace.stop_reason == "cap"
    assert trace.ranking == [0]


def test_network_ranking() -> None:
    ds = sign_of_feature(n=40, d=3, feature=2)
    cfg = small_config(
        classifier="mlp",
        mlp=MlpConfig(hidden_widths=(4,), epochs=5, batch=8),
        max_features=2,
    )
    trace = run_greedy(ds, cfg)
    assert 1 <= len(trace.steps) <= 2
    assert trace.config["classifier"] == "mlp"
    assert trace.config["mlp"]["hidden_widths"] == [4]


def test_search_is_echoed_in_config() -> None:
    ds = sign_of_feature(n=40, d=3, feature=2)
    cfg = small_config(search=HyperSearchSpec(n_draws=2), max_features=1)
    trace = run_greedy(ds, cfg)
    assert len(trace.config["tuned"]) == 1
    assert trace.config["search"]["n_draws"] == 2


def test_steps_are_logged() -> None:
    log = RecordingLogger()
    ds = sign_of_feature(n=40, d=3, feature=0)
    trace = run_greedy(ds, small_config(), {"logger": log})
    steps = [m for m in log.messages["info"] if m.startswith("Step ")]
    assert len(steps) == len(trace.steps)
    assert log.messages["info"][-1].startswith("Stopped")


def test_gram_norm_shrinks_along_selection() -> None:
    """The Gram norm never grows as the ranking adds features."""
    ds = sign_of_feature(n=30, d=4, feature=1, seed=7)
    trace = run_greedy(ds, small_config(tau=1e-9))
    points = alignment_trace(ds, trace.ranking, gamma=0.5)
    norms = [p.frobenius_norm for p in points]
    assert all(b <= a for a, b in zip(norms, norms[1:]))


def test_format_table() -> None:
    trace = run_greedy(sign_of_feature(n=40, d=3, feature=0), small_config())
    table = format_table(trace, title="Ranking")
    assert isinstance(table, Table)
    assert table.row_count == len(trace.steps)
    assert [c.header for c in table.columns] == ["Step", "Feature", "TSS mean ± std"]


@pytest.mark.parametrize(
    "kwargs",
    [
        {"q": 1},
        {"tau": 0.0},
        {"metric": "auc"},
        {"classifier": "forest"},
        {"classifier": "mlp", "search": HyperSearchSpec()},
        {"max_features": 0},
        {"validation_fraction": 1.0},
    ],
)
def test_config_validation(kwargs: dict) -> None:
    with pytest.raises(GreedyConfigException):
        GreedyConfig(**kwargs)


def test_dataset_requirements() -> None:
    y = np.array([1, -1, 1, -1])
    with pytest.raises(GreedyConfigException):
        run_greedy(Dataset(np.zeros((4, 1)), y, names(1)), small_config())
    with pytest.raises(DatasetException):
        run_greedy(Dataset(np.zeros((4, 2)), np.ones(4), names(2)), small_config())


def synthetic_trace(alpha: float, seed: int) -> GreedyTrace:
    ds = generate_synthetic(1000, 15, alpha, seed)
    cfg = GreedyConfig(
        q=7,
        tau=0.09,
        svm=SvmConfig(seed=seed),
        search=HyperSearchSpec(n_draws=10, seed=seed),
        seed=seed,
    )
    return run_greedy(ds, cfg, {"concurrency": 4})


@pytest.mark.slow
@pytest.mark.parametrize("seed", [0, 1])
def test_damped_noise_selects_the_informative_features(seed: int) -> None:
    """With alpha = -8 the ranking keeps exactly x1..x6."""
    trace = synthetic_trace(-8.0, seed)
    assert sorted(trace.selected) == list(range(6))
    assert trace.steps[trace.k_star - 1].m >= 0.90


@pytest.mark.slow
def test_weak_damping_keeps_noise_features() -> None:
    """With alpha = -2 the ranking runs past the informative block."""
    trace = synthetic_trace(-2.0, 0)
    assert len(trace.selected) >= 7
    assert max(trace.selected) >= 6

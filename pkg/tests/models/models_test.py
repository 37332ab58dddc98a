"""Tests for gfstool's models module."""

import json
from pathlib import Path

import numpy as np
import pytest

from gfstool.data import Dataset
from gfstool.mlp import MlpClassifier, MlpConfig
from gfstool.models import (
    FittedPipeline,
    ModelConfigException,
    ModelFormatException,
    PredictionException,
    TrainingException,
    check_input,
    check_trainable,
    fit_pipeline,
    load_model,
    make_classifier,
    model_from_dict,
    save_model,
    sign_labels,
)
from gfstool.svm import SvmClassifier, SvmConfig

from ..fixtures import blobs, names


def shifted_blobs() -> Dataset:
    ds = blobs(30, seed=2)
    return Dataset(ds.X * 100 + 50, ds.y, ds.names)


def test_sign_labels() -> None:
    """Zero decisions map to +1."""
    assert sign_labels(np.array([-0.5, 0.0, 2.0])).tolist() == [-1, 1, 1]
    assert sign_labels(np.array([])).shape == (0,)


def test_check_input() -> None:
    assert check_input(np.array([]), 3).shape == (0, 3)
    assert check_input([[1, 2]], 2).dtype == float
    with pytest.raises(PredictionException):
        check_input(np.zeros((2, 3)), 2)
    with pytest.raises(PredictionException):
        check_input(np.zeros(3), 3)


def test_check_trainable() -> None:
    check_trainable(blobs(10))
    with pytest.raises(TrainingException):
        check_trainable(Dataset(np.zeros((2, 1)), [-1, -1], names(1)))


def test_make_classifier() -> None:
    svm = make_classifier("svm")
    assert isinstance(svm, SvmClassifier)
    assert svm.config == SvmConfig()

    mlp = make_classifier("mlp", MlpConfig(epochs=4))
    assert isinstance(mlp, MlpClassifier)
    assert mlp.config.epochs == 4

    with pytest.raises(ModelConfigException):
        make_classifier("forest")


def test_pipeline_predicts_raw_values() -> None:
    """Standardisation is applied inside the pipeline."""
    ds = shifted_blobs()
    pipeline = fit_pipeline(SvmClassifier(), ds)

    assert pipeline.kind == "svm"
    assert pipeline.scaler is not None
    assert pipeline.feature_names == ("x1", "x2")
    assert pipeline.predict(ds.X).tolist() == ds.y.tolist()


def test_pipeline_without_scaling() -> None:
    pipeline = fit_pipeline(SvmClassifier(), blobs(20), scale=False)
    assert pipeline.scaler is None
    assert pipeline.to_dict()["standardization"] is None


def test_predict_dataset_matches_names() -> None:
    """Columns are picked by name, not by position."""
    ds = shifted_blobs()
    pipeline = fit_pipeline(SvmClassifier(), ds)

    extra = np.random.default_rng(0).normal(size=(ds.n, 1))
    wider = Dataset(
        np.column_stack([ds.X[:, 1], extra, ds.X[:, 0]]), ds.y, ("x2", "noise", "x1")
    )
    assert pipeline.predict_dataset(wider).tolist() == ds.y.tolist()

    with pytest.raises(PredictionException):
        pipeline.predict_dataset(Dataset(ds.X, ds.y, ("x1", "x3")))


def test_save_and_load_svm(tmp_path: Path) -> None:
    ds = shifted_blobs()
    pipeline = fit_pipeline(SvmClassifier(SvmConfig(C=3.0)), ds)
    path = tmp_path / "model.json"
    save_model(pipeline, path)

    document = json.loads(path.read_text(encoding="utf-8"))
    assert document["format_version"] == 1
    assert document["kind"] == "svm"

    again = load_model(path)
    assert isinstance(again, FittedPipeline)
    assert again.feature_names == pipeline.feature_names
    queries = np.random.default_rng(1).normal(50, 150, size=(20, 2))
    assert again.predict(queries).tolist() == pipeline.predict(queries).tolist()


def test_save_and_load_mlp(tmp_path: Path) -> None:
    pipeline = fit_pipeline(MlpClassifier(MlpConfig(epochs=5)), blobs(20))
    path = tmp_path / "model.json"
    save_model(pipeline, path)

    again = load_model(path)
    assert again.kind == "mlp"
    queries = np.random.default_rng(2).normal(size=(10, 2))
    assert again.predict(queries).tolist() == pipeline.predict(queries).tolist()


def test_load_errors(tmp_path: Path) -> None:
    """Unreadable or unsupported files are rejected."""
    with pytest.raises(ModelFormatException):
        load_model(tmp_path / "missing.json")

    garbage = tmp_path / "garbage.json"
    garbage.write_text("{not json", encoding="utf-8")
    with pytest.raises(ModelFormatException):
        load_model(garbage)

    path = tmp_path / "model.json"
    save_model(fit_pipeline(SvmClassifier(), blobs(20)), path)
    document = json.loads(path.read_text(encoding="utf-8"))

    newer = dict(document, format_version=2)
    path.write_text(json.dumps(newer), encoding="utf-8")
    with pytest.raises(ModelFormatException):
        load_model(path)

    del document["feature_names"]
    path.write_text(json.dumps(document), encoding="utf-8")
    with pytest.raises(ModelFormatException):
        load_model(path)


def test_model_from_dict_errors() -> None:
    with pytest.raises(ModelFormatException):
        model_from_dict({"kind": "tree"})
    with pytest.raises(ModelFormatException):
        model_from_dict({"kind": "svm"})

"""
Binary classifiers behind the greedy loop

A classifier is any object with a ``descriptor`` string, a ``fit`` method that
turns a Dataset into a trained model, and a ``with_seed`` method returning a
copy that uses another seed. A trained model predicts labels in {-1, +1} and
serialises itself to a JSON-ready dict. The SVM (gfstool.svm) and the
feed-forward network (gfstool.mlp) both follow this contract and can be
swapped inside the greedy ranking.

FittedPipeline couples a trained model with the standardisation fitted on its
training data, so it can be saved and later applied to raw feature values.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Protocol, Sequence, Tuple, Union

import numpy as np

from gfstool.data import Dataset, Scaler, standardize

CLASSIFIER_KINDS: Tuple[str, ...] = ("svm", "mlp")

FORMAT_VERSION = 1


class ModelConfigException(Exception):
    """
    Raised when a classifier or search configuration is invalid
    """


class TrainingException(Exception):
    """
    Raised when a classifier cannot be trained on a dataset
    """


class PredictionException(Exception):
    """
    Raised when a model is applied to data of the wrong width
    """


class ModelFormatException(Exception):
    """
    Raised when a saved model document cannot be read
    """


class TrainedModel(Protocol):
    """
    A fitted binary classifier
    """

    kind: str
    n_features: int

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Labels in {-1, +1}, one per row of X"""

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready description of the model"""


class Classifier(Protocol):
    """
    A trainable binary classifier
    """

    descriptor: str

    def fit(self, train: Dataset) -> TrainedModel:
        """Train a fresh model"""

    def with_seed(self, seed: int) -> "Classifier":
        """The same classifier with another seed"""


def sign_labels(decision: np.ndarray) -> np.ndarray:
    """
    Map decision values to labels; zero maps to +1
    """
    return np.where(np.asarray(decision) >= 0, 1, -1).astype(np.int64)


def check_input(X: np.ndarray, n_features: int) -> np.ndarray:
    """
    Return X as a float matrix, or raise when its width is wrong
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1 and X.size == 0:
        X = X.reshape(0, n_features)
    if X.ndim != 2 or X.shape[1] != n_features:
        raise PredictionException(
            f"Model expects {n_features} feature(s), got shape {X.shape}"
        )
    return X


def check_trainable(train: Dataset) -> None:
    """
    Raise unless the training set contains both classes
    """
    if not train.has_both_classes():
        raise TrainingException(
            f"Training needs both classes, got {train.n} example(s) "
            f"of class {int(train.y[0]) if train.n else 'none'} only"
        )


def predict(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    """
    Predict labels for the rows of X
    """
    return model.predict(check_input(X, model.n_features))


@dataclass(frozen=True)
class FittedPipeline:
    """
    A trained model plus the standardisation of its inputs
    """

    model: TrainedModel
    scaler: Optional[Scaler]
    feature_names: Tuple[str, ...]

    @property
    def kind(self) -> str:
        """Model kind, "svm" or "mlp" """
        return self.model.kind

    def predict(self, X: np.ndarray) -> np.ndarray:
        """
        Predict labels for raw (unscaled) feature rows
        """
        X = check_input(X, len(self.feature_names))
        if self.scaler is not None:
            X = self.scaler.apply(X)
        return self.model.predict(X)

    def predict_dataset(self, ds: Dataset) -> np.ndarray:
        """
        Predict labels for a dataset, matching its columns by name
        """
        missing = [name for name in self.feature_names if name not in ds.names]
        if missing:
            raise PredictionException(f"Dataset lacks feature(s) {missing}")
        columns = [ds.names.index(name) for name in self.feature_names]
        return self.predict(ds.X[:, columns])

    def to_dict(self) -> Dict[str, Any]:
        """Self-describing JSON document"""
        return {
            "format_version": FORMAT_VERSION,
            "kind": self.kind,
            "feature_names": list(self.feature_names),
            "standardization": self.scaler.to_dict() if self.scaler else None,
            "model": self.model.to_dict(),
        }


def fit_pipeline(
    classifier: Classifier, train: Dataset, scale: bool = True
) -> FittedPipeline:
    """
    Standardise the training data (optionally) and fit the classifier on it
    """
    scaler = None
    if scale:
        train, _, scaler = standardize(train)
    return FittedPipeline(classifier.fit(train), scaler, train.names)


def make_classifier(kind: str, config: Any = None) -> Classifier:
    """
    Build a classifier by kind, with its default config when none is given
    """
    # pylint: disable=import-outside-toplevel
    from gfstool.mlp import MlpClassifier, MlpConfig
    from gfstool.svm import SvmClassifier, SvmConfig

    if kind == "svm":
        return SvmClassifier(config or SvmConfig())
    if kind == "mlp":
        return MlpClassifier(config or MlpConfig())
    raise ModelConfigException(
        f"Unknown classifier '{kind}', expected one of {CLASSIFIER_KINDS}"
    )


def model_from_dict(data: Dict[str, Any]) -> TrainedModel:
    """
    Rebuild a trained model from its to_dict form
    """
    # pylint: disable=import-outside-toplevel
    from gfstool.mlp import MlpModel
    from gfstool.svm import SvmModel

    kind = data.get("kind")
    try:
        if kind == "svm":
            return SvmModel.from_dict(data)
        if kind == "mlp":
            return MlpModel.from_dict(data)
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFormatException(f"Malformed {kind} model: {e}") from e
    raise ModelFormatException(f"Unknown model kind '{kind}'")


def save_model(pipeline: FittedPipeline, path: Union[str, Path]) -> None:
    """
    Write a pipeline as a JSON document
    """
    with open(path, "w", encoding="utf-8") as file:
        json.dump(pipeline.to_dict(), file, indent=2)
        file.write("\n")


def load_model(path: Union[str, Path]) -> FittedPipeline:
    """
    Read a pipeline written by save_model
    """
    try:
        with open(path, "r", encoding="utf-8") as file:
            data = json.load(file)
    except (OSError, json.JSONDecodeError) as e:
        raise ModelFormatException(f"Cannot read model file {path}: {e}") from e

    if data.get("format_version") != FORMAT_VERSION:
        raise ModelFormatException(
            f"Unsupported model format version {data.get('format_version')}"
        )
    try:
        scaler = (
            Scaler.from_dict(data["standardization"])
            if data.get("standardization")
            else None
        )
        names: Sequence[str] = data["feature_names"]
        model = model_from_dict(data["model"])
    except KeyError as e:
        raise ModelFormatException(f"Model file {path} lacks {e}") from e
    return FittedPipeline(model, scaler, tuple(names))

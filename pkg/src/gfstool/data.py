"""
Datasets for binary classification

Provides the Dataset container and everything that produces or reshapes one:
the synthetic test-function generator, CSV ingestion and export, time-window
aggregation, seeded subsampling, train/validation splitting, standardisation
and feature projection.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Literal, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from gfstool._seeding import substream

LabelRule = Literal["any", "all", "last"]


class DatasetException(Exception):
    """
    Base class for dataset errors
    """


class DimensionException(DatasetException):
    """
    Raised when a vector or matrix has too few features
    """


class GenerationException(DatasetException):
    """
    Raised when a synthetic dataset cannot be labelled with two classes
    """


class ParseException(DatasetException):
    """
    Raised when a CSV file cannot be read as a dataset
    """


class WindowException(DatasetException):
    """
    Raised when an aggregation window does not fit the raw data
    """


class SplitException(DatasetException):
    """
    Raised when a split plan cannot be realised on the labels
    """


class SelectionException(DatasetException):
    """
    Raised when a feature selection is empty, out of range or repeated
    """


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Feature matrix ``X`` (n x d), labels ``y`` in {-1, +1} and feature names
    """

    X: np.ndarray
    y: np.ndarray
    names: Tuple[str, ...]

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y)
        if X.ndim != 2:
            raise DatasetException(f"X must be a matrix, got {X.ndim} dimension(s)")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DatasetException(
                f"Label count {y.shape[0] if y.ndim else 0} does not match "
                f"row count {X.shape[0]}"
            )
        if len(self.names) != X.shape[1]:
            raise DatasetException(
                f"{len(self.names)} feature name(s) for {X.shape[1]} column(s)"
            )
        if y.size and not np.all(np.isin(y, (-1, 1))):
            raise DatasetException("Labels must be -1 or +1")
        if not np.all(np.isfinite(X)):
            row, col = np.argwhere(~np.isfinite(X))[0]
            raise DatasetException(
                f"Non-finite value at row {row + 1}, column '{self.names[col]}'"
            )
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y.astype(np.int64))
        object.__setattr__(self, "names", tuple(str(name) for name in self.names))

    @property
    def n(self) -> int:
        """Number of examples"""
        return self.X.shape[0]

    @property
    def d(self) -> int:
        """Number of features"""
        return self.X.shape[1]

    def has_both_classes(self) -> bool:
        """True when at least one example of each class is present"""
        return bool(np.any(self.y == 1) and np.any(self.y == -1))

    def take(self, rows: Sequence[int]) -> "Dataset":
        """Return the dataset restricted to ``rows``, in the given order"""
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(self.X[rows], self.y[rows], self.names)


@dataclass(frozen=True)
class SplitPlan:
    """
    How to draw ``q`` train/validation splits
    """

    q: int = 7
    validation_fraction: float = 0.3
    seed: int = 0
    stratified: bool = True

    def __post_init__(self) -> None:
        if self.q < 1:
            raise SplitException(f"q must be at least 1, got {self.q}")
        if not 0 < self.validation_fraction < 1:
            raise SplitException(
                "validation_fraction must lie in (0, 1), "
                f"got {self.validation_fraction}"
            )


@dataclass(frozen=True)
class Split:
    """
    Disjoint training and validation row indices
    """

    train_idx: Tuple[int, ...]
    valid_idx: Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class Scaler:
    """
    Per-feature affine map fitted on a training set
    """

    mean: np.ndarray
    std: np.ndarray = field(repr=False)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """
        Shift and scale columns; zero-std columns are mapped to 0
        """
        X = np.asarray(X, dtype=float)
        scale = np.where(self.std > 0, self.std, 1.0)
        return np.where(self.std > 0, (X - self.mean) / scale, 0.0)

    def to_dict(self) -> dict:
        """JSON-ready form"""
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Scaler":
        """Inverse of to_dict"""
        return cls(np.asarray(data["mean"], float), np.asarray(data["std"], float))


def eval_test_function(x: Sequence[float], alpha: float) -> float:
    """
    Evaluate the synthetic test function

    f(x) = e^{x1^2} + e^{x2} + 3 x3 + 2 cos(x4 x5) + 4 x6^2 + 10^alpha sum_{j>=7} x_j
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] < 7:
        raise DimensionException(
            f"The test function needs at least 7 features, got {x.size}"
        )
    return float(_test_function_rows(x[np.newaxis, :], alpha)[0])


def _test_function_rows(X: np.ndarray, alpha: float) -> np.ndarray:
    head = (
        np.exp(X[:, 0] ** 2)
        + np.exp(X[:, 1])
        + 3 * X[:, 2]
        + 2 * np.cos(X[:, 3] * X[:, 4])
        + 4 * X[:, 5] ** 2
    )
    # Tail sums go column by column so every row adds its terms in one order.
    tail = np.zeros(X.shape[0])
    for j in range(6, X.shape[1]):
        tail = tail + X[:, j]
    return head + 10.0**alpha * tail


def generate_synthetic(n: int, d: int, alpha: float, seed: int) -> Dataset:
    """
    Sample n points uniformly on [0, 1)^d and label them by the test function

    A point is labelled +1 when its test-function value is greater than the
    mean value over the generated sample, and -1 otherwise.
    """
    if d < 7:
        raise DimensionException(f"The test function needs d >= 7, got d={d}")
    if n < 2:
        raise GenerationException(f"At least 2 examples are needed, got n={n}")

    X = substream(seed, "synth").random((n, d))
    values = _test_function_rows(X, alpha)
    threshold = math.fsum(values) / n
    y = np.where(values > threshold, 1, -1)
    if np.all(y == y[0]):
        raise GenerationException(
            f"All {n} generated examples have label {y[0]} "
            f"(alpha={alpha}, seed={seed}); the sample is degenerate"
        )
    return Dataset(X, y, tuple(f"x{j + 1}" for j in range(d)))


def load_csv(path: Union[str, Path], label_column: str = "label") -> Dataset:
    """
    Read a comma-separated file with a header row into a Dataset

    Labels must be -1/1, or 0/1 in which case 0 is read as -1.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError as e:
        raise ParseException(f"{path} is empty") from e
    except FileNotFoundError as e:
        raise ParseException(f"{path} does not exist") from e
    except pd.errors.ParserError as e:
        raise ParseException(f"{path} is not valid CSV: {e}") from e
    except UnicodeDecodeError as e:
        raise ParseException(f"{path} is not UTF-8 text") from e

    if label_column not in frame.columns:
        raise ParseException(f"Label column '{label_column}' not found in {path}")
    if frame.shape[0] == 0:
        raise ParseException(f"{path} has a header but no rows")

    values = np.empty(frame.shape, dtype=float)
    for col, name in enumerate(frame.columns):
        numbers = pd.to_numeric(frame[name].str.strip(), errors="coerce").to_numpy(
            dtype=float
        )
        bad = np.flatnonzero(~np.isfinite(numbers))
        if bad.size:
            row = int(bad[0])
            raise ParseException(
                f"Invalid value '{frame[name].iloc[row]}' at row {row + 1}, "
                f"column '{name}' of {path}"
            )
        values[:, col] = numbers

    label_position = list(frame.columns).index(label_column)
    labels = values[:, label_position]
    if np.all(np.isin(labels, (0.0, 1.0))):
        labels = np.where(labels == 1.0, 1, -1)
    elif not np.all(np.isin(labels, (-1.0, 1.0))):
        row = int(np.flatnonzero(~np.isin(labels, (-1.0, 1.0)))[0])
        raise ParseException(
            f"Invalid label '{frame[label_column].iloc[row]}' at row {row + 1}, "
            f"column '{label_column}' of {path}"
        )

    features = [name for name in frame.columns if name != label_column]
    X = np.delete(values, label_position, axis=1)
    return Dataset(X, labels.astype(np.int64), tuple(features))


def save_csv(
    ds: Dataset, path: Union[str, Path], label_column: str = "label"
) -> None:
    """
    Write a dataset in the dialect read by load_csv
    """
    if label_column in ds.names:
        raise ParseException(f"Label column '{label_column}' clashes with a feature")
    frame = pd.DataFrame(ds.X, columns=list(ds.names))
    frame[label_column] = ds.y
    frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")


def aggregate_by_window(
    X_raw: np.ndarray,
    y_raw: Sequence[int],
    m: int,
    names: Union[Sequence[str], None] = None,
    label_rule: LabelRule = "any",
) -> Dataset:
    """
    Average consecutive, non-overlapping windows of ``m`` raw rows

    Produces floor(N / m) rows; a trailing partial window is dropped. The
    window label follows ``label_rule``: "any" is +1 when any raw label in the
    window is +1, "all" when every raw label is +1, "last" takes the window's
    last raw label.
    """
    X_raw = np.asarray(X_raw, dtype=float)
    y_raw = np.asarray(y_raw)
    if m < 1:
        raise WindowException(f"Window length must be at least 1, got {m}")
    if X_raw.shape[0] != y_raw.shape[0]:
        raise WindowException(
            f"{X_raw.shape[0]} raw rows but {y_raw.shape[0]} raw labels"
        )
    if m > X_raw.shape[0]:
        raise WindowException(
            f"Window length {m} exceeds the {X_raw.shape[0]} raw rows"
        )

    n = X_raw.shape[0] // m
    X = X_raw[: n * m].reshape(n, m, X_raw.shape[1]).mean(axis=1)
    windows = y_raw[: n * m].reshape(n, m)
    if label_rule == "any":
        y = np.where(np.any(windows == 1, axis=1), 1, -1)
    elif label_rule == "all":
        y = np.where(np.all(windows == 1, axis=1), 1, -1)
    elif label_rule == "last":
        y = windows[:, -1]
    else:
        raise WindowException(f"Unknown label rule '{label_rule}'")

    if names is None:
        names = [f"x{j + 1}" for j in range(X_raw.shape[1])]
    return Dataset(X, y, tuple(names))


def subsample(ds: Dataset, p: int, seed: int) -> Dataset:
    """
    Keep ``p`` rows drawn uniformly without replacement, in original order
    """
    if not 1 <= p <= ds.n:
        raise DatasetException(f"Cannot subsample {p} of {ds.n} examples")
    rows = np.sort(substream(seed, "subsample").choice(ds.n, size=p, replace=False))
    return ds.take(rows)


def _validation_quota(counts: List[int], total: int) -> List[int]:
    """
    Split ``total`` validation slots across classes in proportion to counts

    Largest remainder method, ties to the earlier class; every class with at
    least two members keeps one member on each side.
    """
    n = sum(counts)
    exact = [total * c / n for c in counts]
    quota = [math.floor(e) for e in exact]
    order = sorted(range(len(counts)), key=lambda i: (-(exact[i] - quota[i]), i))
    for i in order[: total - sum(quota)]:
        quota[i] += 1
    return [
        min(max(q, 1), c - 1) if c >= 2 else 0 for q, c in zip(quota, counts)
    ]


def make_splits(n: int, y: Sequence[int], plan: SplitPlan) -> List[Split]:
    """
    Draw ``plan.q`` independent random train/validation splits

    Each split puts ceil(n * validation_fraction) rows in validation. With
    ``plan.stratified`` the rows are drawn per class so class proportions are
    kept up to rounding.
    """
    y = np.asarray(y)
    if y.shape[0] != n:
        raise SplitException(f"{y.shape[0]} labels for {n} examples")
    # rounded first so that 10 * 0.3 counts as 3
    n_valid = math.ceil(round(n * plan.validation_fraction, 9))
    if n_valid < 1 or n - n_valid < 2:
        raise SplitException(
            f"Fraction {plan.validation_fraction} of {n} examples leaves "
            f"{n_valid} validation and {n - n_valid} training rows"
        )

    classes = (-1, 1)
    members = [np.flatnonzero(y == c) for c in classes]
    if plan.stratified:
        quota = _validation_quota([len(m) for m in members], n_valid)
        for c, m, q in zip(classes, members, quota):
            if len(m) and len(m) - q < 1:
                raise SplitException(f"Class {c} would be absent from training")

    splits = []
    for h in range(plan.q):
        rng = substream(plan.seed, "split", h)
        if plan.stratified:
            valid = np.concatenate(
                [rng.permutation(m)[:q] for m, q in zip(members, quota)]
            )
        else:
            valid = rng.permutation(n)[:n_valid]
        mask = np.zeros(n, dtype=bool)
        mask[valid] = True
        splits.append(
            Split(
                tuple(int(i) for i in np.flatnonzero(~mask)),
                tuple(int(i) for i in np.flatnonzero(mask)),
            )
        )
    return splits


def stratified_folds(y: Sequence[int], folds: int, seed: int) -> List[Split]:
    """
    Partition the rows into ``folds`` folds with classes spread evenly

    Each class is shuffled and dealt round-robin over the folds. Fold ``i`` is
    the validation part of split ``i``.
    """
    y = np.asarray(y)
    if folds < 2:
        raise SplitException(f"At least 2 folds are needed, got {folds}")
    rng = substream(seed, "folds")
    assignment = np.empty(y.shape[0], dtype=np.int64)
    offset = 0
    for c in (-1, 1):
        members = rng.permutation(np.flatnonzero(y == c))
        if 0 < members.size < folds:
            raise SplitException(
                f"Class {c} has {members.size} example(s), fewer than {folds} folds"
            )
        assignment[members] = (np.arange(members.size) + offset) % folds
        offset += members.size
    return [
        Split(
            tuple(int(i) for i in np.flatnonzero(assignment != f)),
            tuple(int(i) for i in np.flatnonzero(assignment == f)),
        )
        for f in range(folds)
    ]


def standardize(
    train: Dataset, others: Sequence[Dataset] = ()
) -> Tuple[Dataset, List[Dataset], Scaler]:
    """
    Standardise features with the training mean and population std

    The same affine map is applied to every dataset in ``others``.
    Constant training features are mapped to 0.
    """
    scaler = Scaler(train.X.mean(axis=0), train.X.std(axis=0))
    return (
        Dataset(scaler.apply(train.X), train.y, train.names),
        [Dataset(scaler.apply(ds.X), ds.y, ds.names) for ds in others],
        scaler,
    )


def project_features(ds: Dataset, keep: Sequence[int]) -> Dataset:
    """
    Restrict and reorder columns to ``keep``; labels are unchanged
    """
    keep = [int(k) for k in keep]
    if not keep:
        raise SelectionException("At least one feature must be kept")
    if len(set(keep)) != len(keep):
        raise SelectionException(f"Duplicate feature index in {keep}")
    if any(k < 0 or k >= ds.d for k in keep):
        raise SelectionException(f"Feature index out of range 0..{ds.d - 1}: {keep}")
    return Dataset(ds.X[:, keep], ds.y, tuple(ds.names[k] for k in keep))

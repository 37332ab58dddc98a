"""
Gaussian kernels and kernel alignment diagnostics

Squared distances are accumulated one feature at a time. Appending a feature
only ever adds a non-negative term, so every Gram entry along a greedy prefix
is non-increasing in floating point as well as in exact arithmetic, and an
all-constant feature leaves the matrix bit-for-bit unchanged.

The alignment of two kernels is <K1, K2>_F / (|K1|_F |K2|_F). The
"literal" normalization, sqrt(|K1|_F |K2|_F), is kept for comparison only;
it is not bounded by 1.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Literal, Sequence, Union

import numpy as np
import pandas as pd

from gfstool.data import Dataset

Normalization = Literal["standard", "literal"]
MatrixLike = Union["GramMatrix", np.ndarray]


class KernelException(Exception):
    """
    Raised for invalid kernel parameters or degenerate matrices
    """


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """
    Symmetric kernel matrix with the kernel that produced it
    """

    values: np.ndarray
    family: str = "gaussian"
    gamma: float = 1.0

    @property
    def n(self) -> int:
        """Number of points"""
        return self.values.shape[0]


@dataclass(frozen=True)
class AlignmentPoint:
    """
    Frobenius norm and target alignment of the Gram on a feature prefix
    """

    k: int
    frobenius_norm: float
    target_alignment: float


def _values(K: MatrixLike) -> np.ndarray:
    return K.values if isinstance(K, GramMatrix) else np.asarray(K, dtype=float)


def _check_gamma(gamma: float) -> None:
    if not gamma > 0:
        raise KernelException(f"gamma must be positive, got {gamma}")


def squared_distances(X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """
    Pairwise squared Euclidean distances, summed feature by feature
    """
    X = np.asarray(X, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if X.shape[1] != Z.shape[1]:
        raise KernelException(f"Width mismatch: {X.shape[1]} and {Z.shape[1]}")
    D = np.zeros((X.shape[0], Z.shape[0]))
    for j in range(X.shape[1]):
        diff = X[:, j, np.newaxis] - Z[np.newaxis, :, j]
        D += diff * diff
    return D


def gaussian_cross(X: np.ndarray, Z: np.ndarray, gamma: float) -> np.ndarray:
    """
    Rectangular kernel block exp(-gamma |x_i - z_j|^2)
    """
    _check_gamma(gamma)
    return np.exp(-gamma * squared_distances(X, Z))


def gaussian_gram(X: np.ndarray, gamma: float) -> GramMatrix:
    """
    Gram matrix of the Gaussian kernel on the rows of X
    """
    _check_gamma(gamma)
    X = np.asarray(X, dtype=float)
    if not np.all(np.isfinite(X)):
        raise KernelException("X contains non-finite values")
    # (a - b)^2 == (b - a)^2 exactly, so the matrix is exactly symmetric.
    return GramMatrix(np.exp(-gamma * squared_distances(X, X)), "gaussian", gamma)


def frobenius_inner(K1: MatrixLike, K2: MatrixLike) -> float:
    """
    Sum of the entrywise product of two equally shaped matrices
    """
    A, B = _values(K1), _values(K2)
    if A.shape != B.shape:
        raise KernelException(f"Shape mismatch: {A.shape} and {B.shape}")
    return float(np.sum(A * B))


def frobenius_norm(K: MatrixLike) -> float:
    """
    Frobenius norm, summed in a fixed order so it is monotone in the entries
    """
    A = _values(K)
    return float(np.sqrt(np.sum(A * A)))


def _denominator(norm1: float, norm2: float, normalization: Normalization) -> float:
    if norm1 == 0 or norm2 == 0:
        raise KernelException("Alignment is undefined for an all-zero matrix")
    if normalization == "standard":
        return norm1 * norm2
    if normalization == "literal":
        return float(np.sqrt(norm1 * norm2))
    raise KernelException(f"Unknown normalization '{normalization}'")


def alignment(
    K1: MatrixLike, K2: MatrixLike, normalization: Normalization = "standard"
) -> float:
    """
    Empirical alignment of two kernel matrices
    """
    inner = frobenius_inner(K1, K2)
    return inner / _denominator(
        frobenius_norm(K1), frobenius_norm(K2), normalization
    )


def target_alignment(
    K: MatrixLike, y: Sequence[int], normalization: Normalization = "standard"
) -> float:
    """
    Alignment of K with the ideal target y y^T, without building y y^T

    Uses <K, y y^T>_F = y^T K y and |y y^T|_F = n.
    """
    A = _values(K)
    y = np.asarray(y, dtype=float)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise KernelException("Target labels must be -1 or +1")
    if A.shape != (y.shape[0], y.shape[0]):
        raise KernelException(f"Shape {A.shape} does not match {y.shape[0]} labels")
    return float(y @ A @ y) / _denominator(
        frobenius_norm(A), float(y.shape[0]), normalization
    )


def alignment_trace(
    ds: Dataset,
    order: Sequence[int],
    gamma: float,
    normalization: Normalization = "standard",
) -> List[AlignmentPoint]:
    """
    Report Frobenius norm and target alignment along a feature order

    Entry k uses the Gram on the first k features of ``order``.
    """
    _check_gamma(gamma)
    order = [int(j) for j in order]
    if len(set(order)) != len(order) or any(j < 0 or j >= ds.d for j in order):
        raise KernelException(f"Order must list distinct features of 0..{ds.d - 1}")

    points = []
    D = np.zeros((ds.n, ds.n))
    for k, j in enumerate(order, start=1):
        diff = ds.X[:, j, np.newaxis] - ds.X[np.newaxis, :, j]
        D += diff * diff
        K = GramMatrix(np.exp(-gamma * D), "gaussian", gamma)
        points.append(
            AlignmentPoint(
                k, frobenius_norm(K), target_alignment(K, ds.y, normalization)
            )
        )
    return points


def save_alignment_trace(
    points: Sequence[AlignmentPoint], path: Union[str, Path]
) -> None:
    """
    Write the trace as CSV with columns k, frobenius_norm, target_alignment
    """
    frame = pd.DataFrame(
        [(p.k, p.frobenius_norm, p.target_alignment) for p in points],
        columns=["k", "frobenius_norm", "target_alignment"],
    )
    frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")

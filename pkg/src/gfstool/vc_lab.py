"""
Shattering checks and empirical VC estimates for affine-threshold classes

The class under study is f(x) = sign(w . x + b). Its k-blind variant forces
w_k = 0 for every feature k in a blind set, so the class cannot look at those
features. Separability of a labelled point set is decided exactly: strict
separation is written with unit margin, y_i (w . x_i + b) >= 1, and handed to
an exact phase-1 simplex over rationals.

Feature indices are 1-based throughout this module.
"""

import itertools
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Optional, Sequence, Union

import numpy as np

from gfstool._seeding import substream
from gfstool._simplex import feasible

PointsLike = Union["PointSet", np.ndarray, Sequence[Sequence[float]]]

# Resolution of the integer grid random candidate sets are drawn from.
GRID_STEPS = 16


class VcInputException(Exception):
    """
    Raised when points, labels or blind features are malformed
    """


class ShatterCapException(VcInputException):
    """
    Raised when an exhaustive check would exceed the point-count cap
    """


def shatter_cap(d: int) -> int:
    """
    Largest point count checked exhaustively in dimension d
    """
    return 2 * (d + 2)


@dataclass(frozen=True)
class AffineThresholdClass:
    """
    sign(w . x + b) on R^d with w_k = 0 for every k in ``blind``
    """

    d: int
    blind: FrozenSet[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.d < 1:
            raise VcInputException(f"Dimension must be at least 1, got {self.d}")
        object.__setattr__(self, "blind", frozenset(int(k) for k in self.blind))
        outside = sorted(k for k in self.blind if not 1 <= k <= self.d)
        if outside:
            raise VcInputException(
                f"Blind feature(s) {outside} outside 1..{self.d}"
            )

    @property
    def free_features(self) -> List[int]:
        """Features the class may use, 1-based"""
        return [k for k in range(1, self.d + 1) if k not in self.blind]


@dataclass(frozen=True, eq=False)
class PointSet:
    """
    Distinct points inside the box [low, high]^d
    """

    points: np.ndarray
    low: float = 0.0
    high: float = 1.0

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 2 or points.shape[1] < 1:
            raise VcInputException(
                f"Points must form an s x d matrix, got shape {points.shape}"
            )
        if not np.all(np.isfinite(points)):
            raise VcInputException("Points contain non-finite coordinates")
        if not self.low < self.high:
            raise VcInputException(f"Empty box [{self.low}, {self.high}]")
        if points.size and (points.min() < self.low or points.max() > self.high):
            raise VcInputException(
                f"Points leave the box [{self.low}, {self.high}]^{points.shape[1]}"
            )
        if np.unique(points, axis=0).shape[0] != points.shape[0]:
            raise VcInputException("Points are not distinct")
        if points.shape[0] > shatter_cap(points.shape[1]):
            raise ShatterCapException(
                f"{points.shape[0]} points exceed the cap "
                f"{shatter_cap(points.shape[1])} for dimension {points.shape[1]}"
            )
        object.__setattr__(self, "points", points)

    @property
    def s(self) -> int:
        """Number of points"""
        return self.points.shape[0]

    @property
    def d(self) -> int:
        """Ambient dimension"""
        return self.points.shape[1]


@dataclass(frozen=True, eq=False)
class VcEstimate:
    """
    Budgeted lower bound on the VC dimension with its witness

    ``vc`` points were shattered by ``witness``; no set of ``tried`` points
    was found shattered within the budget (``tried`` equals ``vc`` when the
    cap was reached).
    """

    d: int
    blind: FrozenSet[int]
    vc: int
    witness: np.ndarray
    tried: int


def _as_points(points: PointsLike) -> np.ndarray:
    if isinstance(points, PointSet):
        return points.points
    X = np.asarray(points, dtype=float)
    if X.ndim != 2:
        raise VcInputException(f"Points must form an s x d matrix, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise VcInputException("Points contain non-finite coordinates")
    return X


def _check_feature(k: int, d: int) -> None:
    if not 1 <= k <= d:
        raise VcInputException(f"Feature {k} outside 1..{d}")


def _check_cap(s: int, d: int) -> None:
    if s > shatter_cap(d):
        raise ShatterCapException(
            f"{s} points exceed the cap {shatter_cap(d)} for dimension {d}"
        )


def is_separable(
    points: PointsLike, labels: Sequence[int], blind: Iterable[int] = ()
) -> bool:
    """
    Whether some sign(w . x + b) with w zero on ``blind`` fits every label
    """
    X = _as_points(points)
    s, d = X.shape
    _check_cap(s, d)
    cls = AffineThresholdClass(d, frozenset(blind))
    y = np.asarray(labels)
    if y.shape != (s,) or not np.all(np.isin(y, (-1, 1))):
        raise VcInputException(f"Expected {s} labels in {{-1, +1}}, got {labels}")
    if s == 0:
        return True

    # z = (w+, w-, b+, b-) >= 0 with w = w+ - w-, b = b+ - b-
    rows = []
    for x, label in zip(X, y):
        r = [float(label) * float(x[k - 1]) for k in cls.free_features]
        r.append(float(label))
        rows.append(r + [-v for v in r])
    return feasible(rows, [1] * s)


def shatters(points: PointsLike, blind: Iterable[int] = ()) -> bool:
    """
    Whether every labelling of the points is separable

    Labellings are checked with the first label fixed to +1, since a
    labelling and its negation are separable together.
    """
    X = _as_points(points)
    s, d = X.shape
    _check_cap(s, d)
    blind = frozenset(blind)
    AffineThresholdClass(d, blind)
    if s == 0:
        return True
    for tail in itertools.product((1, -1), repeat=s - 1):
        if not is_separable(X, (1, *tail), blind):
            return False
    return True


def blind_project(points: PointsLike, k: int, alpha: float) -> np.ndarray:
    """
    Set feature k of every point to alpha

    For a PointSet, alpha must lie in its box.
    """
    X = _as_points(points)
    _check_feature(k, X.shape[1])
    if isinstance(points, PointSet) and not points.low <= alpha <= points.high:
        raise VcInputException(
            f"alpha={alpha} outside [{points.low}, {points.high}]"
        )
    projected = X.copy()
    projected[:, k - 1] = alpha
    return projected


def drop_feature(points: PointsLike, k: int) -> np.ndarray:
    """
    Remove feature k, mapping the points into dimension d - 1
    """
    X = _as_points(points)
    _check_feature(k, X.shape[1])
    return np.delete(X, k - 1, axis=1)


def moment_curve(s: int, d: int) -> np.ndarray:
    """
    s points (t, t^2, ..., t^d) with t = i / s, in general position
    """
    t = np.arange(s, dtype=float) / max(s, 1)
    return np.column_stack([t ** (j + 1) for j in range(d)]).reshape(s, d)


def _candidate_sets(
    s: int, d: int, trials: int, rng: np.random.Generator
) -> Iterable[np.ndarray]:
    yield moment_curve(s, d)
    for _ in range(trials):
        X = rng.integers(0, GRID_STEPS + 1, size=(s, d)) / GRID_STEPS
        if np.unique(X, axis=0).shape[0] == s:
            yield X


def find_shattered_set(
    d: int,
    blind: Iterable[int] = (),
    trials: int = 50,
    s_max: Optional[int] = None,
    seed: int = 0,
) -> VcEstimate:
    """
    Search for the largest point set the class shatters

    Sizes are tried upward from 1. At each size the moment-curve fixture is
    tried first, then ``trials`` seeded random grid sets. The search ends at
    the first size where no candidate is shattered, or at ``s_max``.
    """
    cls = AffineThresholdClass(d, frozenset(blind))
    cap = shatter_cap(d)
    s_max = cap if s_max is None else s_max
    if s_max > cap:
        raise ShatterCapException(f"s_max={s_max} exceeds the cap {cap}")
    if trials < 0:
        raise VcInputException(f"trials must be non-negative, got {trials}")

    rng = substream(seed, "vc", d)
    vc, witness, tried = 0, np.empty((0, d)), 0
    for s in range(1, s_max + 1):
        tried = s
        found = next(
            (
                X
                for X in _candidate_sets(s, d, trials, rng)
                if shatters(X, cls.blind)
            ),
            None,
        )
        if found is None:
            break
        vc, witness = s, found
    return VcEstimate(d, cls.blind, vc, witness, tried)


def empirical_vc(
    d: int,
    blind: Iterable[int] = (),
    trials: int = 50,
    s_max: Optional[int] = None,
    seed: int = 0,
) -> int:
    """
    Largest shattered size found within the budget, a lower bound on the VC
    dimension
    """
    return find_shattered_set(d, blind, trials, s_max, seed).vc

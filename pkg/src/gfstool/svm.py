"""
Soft-margin SVM with a Gaussian kernel, trained by SMO

The dual problem is solved by sequential minimal optimization. Each example
that violates the KKT conditions by more than ``tol`` is optimized jointly
with a second multiplier: first the unbounded one maximizing |E_i - E_j|, then
every unbounded multiplier and finally every multiplier, both loops starting
at a seeded offset. Full sweeps over the data alternate with repeated sweeps
over the unbounded multipliers. Training stops after a full sweep without
changes or after ``max_passes`` full sweeps.

The final bias is the solver bias or the mean over unbounded support vectors
(the midpoint of the feasible interval when every multiplier sits on a bound),
whichever leaves the smaller KKT violation. ``converged`` records whether that
violation is within ``tol``.
"""

from dataclasses import asdict, dataclass, replace
from typing import Any, Dict, Optional

import numpy as np

from gfstool._seeding import substream
from gfstool.data import Dataset
from gfstool.kernel_lab import gaussian_cross, gaussian_gram
from gfstool.models import (
    ModelConfigException,
    TrainingException,
    check_input,
    check_trainable,
    sign_labels,
)

# Relative tolerance deciding whether a multiplier sits on 0 or C.
BOUND_EPS = 1e-8


@dataclass(frozen=True)
class SvmConfig:
    """
    Box constraint C, kernel coefficient gamma (None means 1/d) and solver
    settings
    """

    C: float = 1.0
    gamma: Optional[float] = None
    tol: float = 1e-3
    max_passes: int = 50
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.C > 0:
            raise ModelConfigException(f"C must be positive, got {self.C}")
        if self.gamma is not None and not self.gamma > 0:
            raise ModelConfigException(f"gamma must be positive, got {self.gamma}")
        if not self.tol > 0:
            raise ModelConfigException(f"tol must be positive, got {self.tol}")
        if self.max_passes < 1:
            raise ModelConfigException(
                f"max_passes must be at least 1, got {self.max_passes}"
            )


@dataclass(frozen=True, eq=False)
class SvmModel:  # pylint: disable=too-many-instance-attributes
    """
    Support vectors, their multipliers and labels, bias and diagnostics
    """

    support_vectors: np.ndarray
    alpha: np.ndarray
    labels: np.ndarray
    bias: float
    gamma: float
    C: float
    n_features: int
    kkt_violation: float = 0.0
    converged: bool = True
    passes: int = 0
    kind: str = "svm"

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        """
        sum_i alpha_i y_i k(x_i, x) + b for every row of X
        """
        X = check_input(X, self.n_features)
        if self.alpha.size == 0:
            return np.full(X.shape[0], self.bias)
        K = gaussian_cross(X, self.support_vectors, self.gamma)
        return K @ (self.alpha * self.labels) + self.bias

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Labels in {-1, +1}; a zero decision value gives +1"""
        return sign_labels(self.decision_function(X))

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready description"""
        return {
            "kind": self.kind,
            "gamma": self.gamma,
            "C": self.C,
            "bias": self.bias,
            "n_features": self.n_features,
            "support_vectors": self.support_vectors.tolist(),
            "alpha": self.alpha.tolist(),
            "labels": self.labels.tolist(),
            "kkt_violation": self.kkt_violation,
            "converged": self.converged,
            "passes": self.passes,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SvmModel":
        """Inverse of to_dict"""
        n_features = int(data["n_features"])
        return cls(
            support_vectors=np.asarray(data["support_vectors"], float).reshape(
                -1, n_features
            ),
            alpha=np.asarray(data["alpha"], float),
            labels=np.asarray(data["labels"], np.int64),
            bias=float(data["bias"]),
            gamma=float(data["gamma"]),
            C=float(data["C"]),
            n_features=n_features,
            kkt_violation=float(data.get("kkt_violation", 0.0)),
            converged=bool(data.get("converged", True)),
            passes=int(data.get("passes", 0)),
        )


class _Smo:  # pylint: disable=too-many-instance-attributes
    """
    Working state of one SMO run over a precomputed Gram matrix
    """

    def __init__(self, K: np.ndarray, y: np.ndarray, cfg: SvmConfig) -> None:
        self.K = K
        self.y = y.astype(float)
        self.C = cfg.C
        self.tol = cfg.tol
        self.alpha = np.zeros(y.shape[0])
        self.b = 0.0
        # E_i = f(x_i) - y_i with f = 0 at the start
        self.E = -self.y.copy()
        self.rng = substream(cfg.seed, "smo")

    def violates(self, i: int) -> bool:
        r = self.y[i] * self.E[i]
        return bool(
            (r < -self.tol and self.alpha[i] < self.C)
            or (r > self.tol and self.alpha[i] > 0)
        )

    def take_step(self, i: int, j: int) -> bool:  # pylint: disable=too-many-locals
        if i == j:
            return False
        y, K, C = self.y, self.K, self.C
        a_i, a_j = self.alpha[i], self.alpha[j]
        if y[i] != y[j]:
            low, high = max(0.0, a_j - a_i), min(C, C + a_j - a_i)
        else:
            low, high = max(0.0, a_i + a_j - C), min(C, a_i + a_j)
        if low >= high:
            return False
        eta = K[i, i] + K[j, j] - 2 * K[i, j]
        if eta <= 1e-12:
            return False

        new_j = min(max(a_j + y[j] * (self.E[i] - self.E[j]) / eta, low), high)
        if abs(new_j - a_j) < 1e-5 * (new_j + a_j + 1e-5):
            return False
        new_i = min(max(a_i + y[i] * y[j] * (a_j - new_j), 0.0), C)
        d_i, d_j = new_i - a_i, new_j - a_j

        b_i = self.b - self.E[i] - y[i] * d_i * K[i, i] - y[j] * d_j * K[i, j]
        b_j = self.b - self.E[j] - y[i] * d_i * K[i, j] - y[j] * d_j * K[j, j]
        if 0 < new_i < C:
            new_b = b_i
        elif 0 < new_j < C:
            new_b = b_j
        else:
            new_b = (b_i + b_j) / 2

        self.E += y[i] * d_i * K[i] + y[j] * d_j * K[j] + (new_b - self.b)
        self.alpha[i], self.alpha[j], self.b = new_i, new_j, new_b
        return True

    def examine(self, i: int) -> bool:
        if not self.violates(i):
            return False
        n = self.alpha.shape[0]
        eps = BOUND_EPS * self.C
        free = np.flatnonzero((self.alpha > eps) & (self.alpha < self.C - eps))
        if free.size > 1:
            j = int(free[np.argmax(np.abs(self.E[i] - self.E[free]))])
            if self.take_step(i, j):
                return True
        start = int(self.rng.integers(n))
        for j in np.roll(free, -start % max(free.size, 1)):
            if self.take_step(i, int(j)):
                return True
        for j in np.roll(np.arange(n), -start):
            if self.take_step(i, int(j)):
                return True
        return False

    def _sweep(self, rows: np.ndarray) -> int:
        return sum(self.examine(int(i)) for i in rows)

    def run(self, max_passes: int) -> int:
        """
        Alternate full sweeps with sweeps over the unbounded multipliers

        Only full sweeps count as passes. Returns the passes used.
        """
        n = self.alpha.shape[0]
        passes = 0
        while passes < max_passes:
            passes += 1
            if self._sweep(np.arange(n)) == 0:
                break
            for _ in range(n):
                eps = BOUND_EPS * self.C
                free = np.flatnonzero((self.alpha > eps) & (self.alpha < self.C - eps))
                if self._sweep(free) == 0:
                    break
        return passes


def _bias(alpha: np.ndarray, y: np.ndarray, g: np.ndarray, C: float) -> float:
    """
    Bias from the free support vectors, else the bound-constraint midpoint

    ``g`` holds sum_j alpha_j y_j K_ij for every training example.
    """
    eps = BOUND_EPS * C
    free = (alpha > eps) & (alpha < C - eps)
    if np.any(free):
        return float(np.mean(y[free] - g[free]))

    # y_i (g_i + b) >= 1 where alpha_i = 0, <= 1 where alpha_i = C
    at_zero = alpha <= eps
    v = y - g
    lower = v[(at_zero & (y > 0)) | (~at_zero & (y < 0))]
    upper = v[(at_zero & (y < 0)) | (~at_zero & (y > 0))]
    if lower.size and upper.size:
        return float((lower.max() + upper.min()) / 2)
    if lower.size:
        return float(lower.max())
    if upper.size:
        return float(upper.min())
    return 0.0


def kkt_violation(
    alpha: np.ndarray, y: np.ndarray, g: np.ndarray, bias: float, C: float
) -> float:
    """
    Largest violation of the KKT conditions for the given multipliers and bias
    """
    eps = BOUND_EPS * C
    r = y * (g + bias) - 1
    violation = np.where(
        alpha <= eps,
        np.maximum(0.0, -r),
        np.where(alpha >= C - eps, np.maximum(0.0, r), np.abs(r)),
    )
    return float(violation.max()) if violation.size else 0.0


def train_svm_smo(train: Dataset, cfg: SvmConfig) -> SvmModel:
    """
    Train a Gaussian-kernel soft-margin SVM by SMO

    Features are expected to be standardised upstream (see
    gfstool.models.fit_pipeline).
    """
    check_trainable(train)
    gamma = cfg.gamma if cfg.gamma is not None else 1.0 / max(train.d, 1)
    K = gaussian_gram(train.X, gamma).values
    y = train.y.astype(float)

    smo = _Smo(K, train.y, cfg)
    passes = smo.run(cfg.max_passes)
    alpha = np.clip(smo.alpha, 0.0, cfg.C)
    if not np.all(np.isfinite(alpha)):
        raise TrainingException("SMO produced non-finite multipliers")

    g = K @ (alpha * y)
    # ties keep the solver bias
    bias, violation = min(
        (
            (float(b), kkt_violation(alpha, y, g, b, cfg.C))
            for b in (smo.b, _bias(alpha, y, g, cfg.C))
        ),
        key=lambda pair: pair[1],
    )
    support = np.flatnonzero(alpha > 0)
    return SvmModel(
        support_vectors=train.X[support].copy(),
        alpha=alpha[support],
        labels=train.y[support].copy(),
        bias=bias,
        gamma=gamma,
        C=cfg.C,
        n_features=train.d,
        kkt_violation=violation,
        converged=violation <= cfg.tol,
        passes=passes,
    )


@dataclass(frozen=True)
class SvmClassifier:
    """
    Classifier-contract wrapper around train_svm_smo
    """

    config: SvmConfig = SvmConfig()
    descriptor: str = "svm"

    def fit(self, train: Dataset) -> SvmModel:
        """Train a fresh model"""
        return train_svm_smo(train, self.config)

    def with_seed(self, seed: int) -> "SvmClassifier":
        """Same classifier, other seed"""
        return replace(self, config=replace(self.config, seed=seed))

    def with_params(self, C: float, gamma: float) -> "SvmClassifier":
        """Same classifier with another box constraint and kernel coefficient"""
        return replace(self, config=replace(self.config, C=C, gamma=gamma))

    def describe(self) -> Dict[str, Any]:
        """Config echo for traces"""
        return {"kind": self.descriptor, **asdict(self.config)}


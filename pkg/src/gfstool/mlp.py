"""
Compact feed-forward network for binary classification

ReLU hidden layers, one sigmoid output unit, binary cross-entropy loss with an
L2 penalty on the weights of the first two layers, Adam updates on seeded
mini-batches and early stopping on a held-out validation loss. The weights of
the best epoch are kept.
"""

import hashlib
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from gfstool._seeding import substream
from gfstool.data import Dataset
from gfstool.models import (
    ModelConfigException,
    TrainingException,
    check_input,
    check_trainable,
    sign_labels,
)

Params = List[Tuple[np.ndarray, np.ndarray]]

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class MlpConfig:  # pylint: disable=too-many-instance-attributes
    """
    Architecture and training schedule of the network
    """

    hidden_widths: Tuple[int, ...] = (16, 8)
    learning_rate: float = 0.001
    epochs: int = 200
    batch: int = 64
    l2_first_layers: float = 0.01
    patience: int = 20
    validation_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden_widths", tuple(self.hidden_widths))
        if any(int(w) < 1 for w in self.hidden_widths):
            raise ModelConfigException(
                f"Hidden widths must be at least 1, got {self.hidden_widths}"
            )
        if self.epochs < 1:
            raise ModelConfigException(f"epochs must be at least 1, got {self.epochs}")
        if self.batch < 1:
            raise ModelConfigException(f"batch must be at least 1, got {self.batch}")
        if not self.learning_rate > 0:
            raise ModelConfigException(
                f"learning_rate must be positive, got {self.learning_rate}"
            )
        if self.l2_first_layers < 0:
            raise ModelConfigException(
                f"l2_first_layers must be non-negative, got {self.l2_first_layers}"
            )
        if self.patience < 1:
            raise ModelConfigException(
                f"patience must be at least 1, got {self.patience}"
            )
        if not 0 <= self.validation_fraction < 1:
            raise ModelConfigException(
                "validation_fraction must lie in [0, 1), "
                f"got {self.validation_fraction}"
            )


def init_params(n_features: int, widths: Sequence[int], seed: int) -> Params:
    """
    He-normal weights and zero biases for every layer, output layer last
    """
    rng = substream(seed, "mlp-init")
    sizes = [n_features, *widths, 1]
    return [
        (
            rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out)),
            np.zeros(fan_out),
        )
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:])
    ]


def forward(params: Params, X: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
    """
    Output logits and the activations of every layer input
    """
    activations = [X]
    a = X
    for index, (W, b) in enumerate(params):
        z = a @ W + b
        a = z if index == len(params) - 1 else np.maximum(z, 0.0)
        activations.append(a)
    return a[:, 0], activations


def _l2_penalty(params: Params, l2: float) -> float:
    return l2 * sum(float(np.sum(W * W)) for W, _ in params[:2])


def loss_and_gradients(
    params: Params, X: np.ndarray, y: np.ndarray, l2: float
) -> Tuple[float, Params]:
    """
    Mean binary cross-entropy plus L2 penalty, and its gradients

    Labels are in {-1, +1}; the cross-entropy is computed from the logits
    as softplus(z) - t z with t = (y + 1) / 2.
    """
    t = (np.asarray(y, dtype=float) + 1) / 2
    logits, activations = forward(params, X)
    n = X.shape[0]
    loss = float(np.mean(np.logaddexp(0.0, logits) - t * logits))
    loss += _l2_penalty(params, l2)

    grads: Params = []
    probability = 0.5 * (1 + np.tanh(logits / 2))
    delta = (probability - t)[:, np.newaxis] / n
    for index in range(len(params) - 1, -1, -1):
        W, _ = params[index]
        a_prev = activations[index]
        dW = a_prev.T @ delta
        db = delta.sum(axis=0)
        if index < 2:
            dW = dW + 2 * l2 * W
        grads.append((dW, db))
        if index > 0:
            delta = (delta @ W.T) * (activations[index] > 0)
    grads.reverse()
    return loss, grads


def _loss(params: Params, X: np.ndarray, y: np.ndarray, l2: float) -> float:
    t = (np.asarray(y, dtype=float) + 1) / 2
    logits, _ = forward(params, X)
    return float(np.mean(np.logaddexp(0.0, logits) - t * logits)) + _l2_penalty(
        params, l2
    )


def _order_fingerprint(order: np.ndarray) -> str:
    return hashlib.sha1(order.astype(np.int64).tobytes()).hexdigest()[:12]


@dataclass(frozen=True, eq=False)
class MlpModel:
    """
    Trained network weights and training history
    """

    params: Params
    n_features: int
    history: Tuple[Tuple[float, float], ...] = ()
    best_epoch: int = 0
    epoch_orders: Tuple[str, ...] = field(default=(), repr=False)
    kind: str = "mlp"

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        """Output logits; positive means probability above 0.5"""
        logits, _ = forward(self.params, check_input(X, self.n_features))
        return logits

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Labels in {-1, +1}; probability 0.5 gives +1"""
        return sign_labels(self.decision_function(X))

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready description"""
        return {
            "kind": self.kind,
            "n_features": self.n_features,
            "layers": [{"W": W.tolist(), "b": b.tolist()} for W, b in self.params],
            "history": [list(h) for h in self.history],
            "best_epoch": self.best_epoch,
            "epoch_orders": list(self.epoch_orders),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MlpModel":
        """Inverse of to_dict"""
        params = [
            (np.asarray(layer["W"], float), np.asarray(layer["b"], float))
            for layer in data["layers"]
        ]
        return cls(
            params=params,
            n_features=int(data["n_features"]),
            history=tuple(tuple(h) for h in data.get("history", [])),
            best_epoch=int(data.get("best_epoch", 0)),
            epoch_orders=tuple(data.get("epoch_orders", [])),
        )


def _holdout(
    train: Dataset, fraction: float, seed: int
) -> Tuple[Dataset, Optional[Dataset]]:
    n_valid = int(round(train.n * fraction))
    if n_valid < 1 or train.n - n_valid < 2:
        return train, None
    order = substream(seed, "mlp-holdout").permutation(train.n)
    fit_part = train.take(np.sort(order[n_valid:]))
    if not fit_part.has_both_classes():
        return train, None
    return fit_part, train.take(np.sort(order[:n_valid]))


def train_mlp(  # pylint: disable=too-many-locals
    train: Dataset, cfg: MlpConfig
) -> MlpModel:
    """
    Train the network with Adam and early stopping
    """
    check_trainable(train)
    fit_part, valid_part = _holdout(train, cfg.validation_fraction, cfg.seed)
    monitor = valid_part if valid_part is not None else fit_part

    params = init_params(train.d, cfg.hidden_widths, cfg.seed)
    moments = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
    velocities = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
    step = 0

    best_loss = np.inf
    best_params = params
    best_epoch = 0
    history: List[Tuple[float, float]] = []
    orders: List[str] = []

    for epoch in range(1, cfg.epochs + 1):
        order = substream(cfg.seed, "mlp-batches", epoch).permutation(fit_part.n)
        orders.append(_order_fingerprint(order))
        for start in range(0, fit_part.n, cfg.batch):
            rows = order[start : start + cfg.batch]
            _, grads = loss_and_gradients(
                params, fit_part.X[rows], fit_part.y[rows], cfg.l2_first_layers
            )
            step += 1
            updated = []
            for index, ((W, b), (gW, gb)) in enumerate(zip(params, grads)):
                mW, mb = moments[index]
                vW, vb = velocities[index]
                mW = ADAM_BETA1 * mW + (1 - ADAM_BETA1) * gW
                mb = ADAM_BETA1 * mb + (1 - ADAM_BETA1) * gb
                vW = ADAM_BETA2 * vW + (1 - ADAM_BETA2) * gW * gW
                vb = ADAM_BETA2 * vb + (1 - ADAM_BETA2) * gb * gb
                moments[index], velocities[index] = (mW, mb), (vW, vb)
                rate = (
                    cfg.learning_rate
                    * np.sqrt(1 - ADAM_BETA2**step)
                    / (1 - ADAM_BETA1**step)
                )
                updated.append(
                    (
                        W - rate * mW / (np.sqrt(vW) + ADAM_EPS),
                        b - rate * mb / (np.sqrt(vb) + ADAM_EPS),
                    )
                )
            params = updated

        train_loss = _loss(params, fit_part.X, fit_part.y, cfg.l2_first_layers)
        monitor_loss = _loss(params, monitor.X, monitor.y, cfg.l2_first_layers)
        if not np.isfinite(train_loss):
            raise TrainingException(f"Loss diverged at epoch {epoch}")
        history.append((train_loss, monitor_loss))
        if monitor_loss < best_loss:
            best_loss, best_params, best_epoch = monitor_loss, params, epoch
        elif epoch - best_epoch >= cfg.patience:
            break

    return MlpModel(
        params=best_params,
        n_features=train.d,
        history=tuple(history),
        best_epoch=best_epoch,
        epoch_orders=tuple(orders),
    )


@dataclass(frozen=True)
class MlpClassifier:
    """
    Classifier-contract wrapper around train_mlp
    """

    config: MlpConfig = MlpConfig()
    descriptor: str = "mlp"

    def fit(self, train: Dataset) -> MlpModel:
        """Train a fresh model"""
        return train_mlp(train, self.config)

    def with_seed(self, seed: int) -> "MlpClassifier":
        """Same classifier, other seed"""
        return replace(self, config=replace(self.config, seed=seed))

    def describe(self) -> Dict[str, Any]:
        """Config echo for traces"""
        return {"kind": self.descriptor, **asdict(self.config)}

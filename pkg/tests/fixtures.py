"""Helper functions building small datasets for the tests."""

from typing import Any, Dict, List

import numpy as np

from gfstool.data import Dataset


def names(d: int) -> tuple:
    return tuple(f"x{j + 1}" for j in range(d))


def blobs(n: int = 40, seed: int = 0, gap: float = 3.0) -> Dataset:
    """Two well separated Gaussian blobs in 2-D, balanced classes."""
    rng = np.random.default_rng(seed)
    half = n // 2
    X = np.vstack(
        [
            rng.normal(-gap / 2, 0.3, size=(half, 2)),
            rng.normal(gap / 2, 0.3, size=(n - half, 2)),
        ]
    )
    y = np.array([-1] * half + [1] * (n - half))
    return Dataset(X, y, names(2))


def xor() -> Dataset:
    X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    y = np.array([1, 1, -1, -1])
    return Dataset(X, y, names(2))


def sign_of_feature(
    n: int = 60, d: int = 5, feature: int = 3, seed: int = 0
) -> Dataset:
    """
    Uniform noise features; the label is the sign of ``feature``, whose values
    keep a gap around zero.
    """
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, size=(n, d))
    y = np.array([1, -1] * (n // 2))
    X[:, feature] = y * rng.uniform(0.3, 1.0, size=n)
    return Dataset(X, y, names(d))


class RecordingLogger:
    """Collects messages per level."""

    def __init__(self) -> None:
        self.messages: Dict[str, List[str]] = {
            "debug": [],
            "info": [],
            "warning": [],
            "error": [],
        }

    def debug(self, msg: object, *args: Any, **kwargs: Any) -> None:
        self.messages["debug"].append(str(msg))

    def info(self, msg: object, *args: Any, **kwargs: Any) -> None:
        self.messages["info"].append(str(msg))

    def warning(self, msg: object, *args: Any, **kwargs: Any) -> None:
        self.messages["warning"].append(str(msg))

    def error(self, msg: object, *args: Any, **kwargs: Any) -> None:
        self.messages["error"].append(str(msg))

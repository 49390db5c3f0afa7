"""Per-channel standardization and sliding window extraction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .errors import DimensionMismatch, EmptyInput, SeriesTooShort
from .frames import TimeSeriesFrame

#: Channels whose population variance falls below this are treated as
#: constant and get unit scale so standardization stays finite.
ZERO_VARIANCE_EPS = 1e-12


class StandardNormalizer(TransformerMixin, BaseEstimator):
    """Column-wise (x - mean) / std with population (1/N) statistics.

    Constant columns (population std below ``ZERO_VARIANCE_EPS``) keep their
    mean but get scale 1.0 so transformed values are exactly zero instead of
    blowing up.
    """

    def fit(self, X, y=None):
        X = self._check(X)
        if X.shape[0] == 0:
            raise EmptyInput("cannot fit a normalizer on zero rows")
        self.n_features_in_ = X.shape[1]
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)  # ddof=0, population convention
        self.scale_ = np.where(std < ZERO_VARIANCE_EPS, 1.0, std)
        return self

    def transform(self, X) -> np.ndarray:
        self._require_fitted()
        X = self._check(X)
        if X.shape[1] != self.n_features_in_:
            raise DimensionMismatch(
                f"normalizer fitted on {self.n_features_in_} channels, got {X.shape[1]}"
            )
        return (X - self.mean_) / self.scale_

    def inverse_transform(self, X) -> np.ndarray:
        self._require_fitted()
        X = self._check(X)
        if X.shape[1] != self.n_features_in_:
            raise DimensionMismatch(
                f"normalizer fitted on {self.n_features_in_} channels, got {X.shape[1]}"
            )
        return X * self.scale_ + self.mean_

    def _require_fitted(self):
        if not hasattr(self, "mean_"):
            raise NotFittedError("StandardNormalizer is not fitted yet")

    @staticmethod
    def _check(X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise DimensionMismatch(f"expected 2-D input, got shape {X.shape}")
        return X


def fit_normalizer(frames: Sequence[TimeSeriesFrame]) -> StandardNormalizer:
    """Fit a normalizer over the model-input channels of several frames."""
    frames = list(frames)
    if not frames:
        raise EmptyInput("fit_normalizer needs at least one frame")
    blocks = [f.model_input() for f in frames]
    width = blocks[0].shape[1]
    for b in blocks[1:]:
        if b.shape[1] != width:
            raise DimensionMismatch("frames disagree on model-input channel count")
    return StandardNormalizer().fit(np.vstack(blocks))


@dataclass(frozen=True)
class WindowPair:
    """An input window and the window that immediately follows it.

    Both blocks have exactly ``w`` rows; ``start`` is the input's first row
    and ``sample_id`` tells which series the pair was cut from.
    """

    input: np.ndarray
    target: np.ndarray
    start: int
    sample_id: int = 0

    def __post_init__(self):
        if self.input.shape != self.target.shape:
            raise DimensionMismatch("input and target windows must share a shape")
        if self.input.ndim != 2:
            raise DimensionMismatch("windows must be 2-D (w, D)")


def num_windows(n_points: int, window: int, stride: int) -> int:
    """Number of input/target pairs: floor((T - 2w) / stride) + 1."""
    if n_points < 2 * window:
        return 0
    return (n_points - 2 * window) // stride + 1


def make_windows(
    X: np.ndarray, window: int, stride: int | None = None, sample_id: int = 0
) -> list[WindowPair]:
    """Cut a (T, D) series into forecasting pairs.

    Input windows start at 0, stride, 2*stride, ... while a full target
    window still fits; the default stride equals the window length so
    consecutive pairs do not overlap.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatch(f"expected 2-D series, got shape {X.shape}")
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    stride = window if stride is None else stride
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    T = X.shape[0]
    if T < 2 * window:
        raise SeriesTooShort(
            f"need at least {2 * window} rows for window={window}, got {T}"
        )
    pairs = []
    for start in range(0, T - 2 * window + 1, stride):
        pairs.append(
            WindowPair(
                input=X[start : start + window],
                target=X[start + window : start + 2 * window],
                start=start,
                sample_id=sample_id,
            )
        )
    return pairs


def stack_windows(pairs: Sequence[WindowPair]) -> tuple[np.ndarray, np.ndarray]:
    """Stack pairs into (N, w, D) input and target arrays for batched math."""
    if not pairs:
        raise EmptyInput("no window pairs to stack")
    inputs = np.stack([p.input for p in pairs])
    targets = np.stack([p.target for p in pairs])
    return inputs, targets

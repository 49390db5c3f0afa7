"""Training loop and estimator wrapper for the stacked GRU forecaster.

The forecaster is sequence-to-sequence: an input window of w observations
predicts the next w observations, so output position t of a window starting
at s is the forecast for absolute time s + w + t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .errors import DimensionMismatch, EmptyInput, NonFiniteLoss, SeriesTooShort
from .gru import GruStack, forward_stack, init_gru_stack, loss_and_grads
from .optim import RmsProp, clip_gradients
from .preprocessing import StandardNormalizer, WindowPair, make_windows, stack_windows


@dataclass
class TrainConfig:
    """Optimizer and schedule settings for one training run."""

    learning_rate: float = 0.001
    epochs: int = 100
    batch_size: int = 2048
    rmsprop_decay: float = 0.9
    rmsprop_epsilon: float = 1e-8
    seed: int = 0
    validation_fraction: float = 0.1
    clip_norm: float = 5.0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError(
                f"validation_fraction must be in [0, 1), got {self.validation_fraction}"
            )
        if self.clip_norm < 0.0:
            raise ValueError(f"clip_norm must be >= 0 (0 disables), got {self.clip_norm}")


@dataclass
class TrainReport:
    """Per-epoch loss curves; lengths equal the configured epoch count."""

    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    validation_is_copy: bool = False


def dataset_loss(stack: GruStack, inputs: np.ndarray, targets: np.ndarray,
                 batch_size: int = 2048) -> float:
    """Mean squared error over a whole window set, without updates.

    Accumulates the total squared error so the result does not depend on how
    the windows are ordered or batched (beyond float rounding).
    """
    if inputs.shape[0] == 0:
        raise EmptyInput("dataset_loss needs at least one window")
    total = 0.0
    count = 0
    for lo in range(0, inputs.shape[0], batch_size):
        x = inputs[lo : lo + batch_size]
        t = targets[lo : lo + batch_size]
        y = forward_stack(stack, x)
        diff = y - t
        total += float(np.sum(diff * diff))
        count += diff.size
    return total / count


def train_stack(
    stack: GruStack,
    pairs: Sequence[WindowPair],
    config: TrainConfig,
) -> TrainReport:
    """Run seeded mini-batch RMSProp over the window pairs, in place.

    The validation split is temporal: the last fraction of the pairs in their
    given order is held out. With a zero fraction the validation curve is a
    copy of the training curve and is flagged as such.
    """
    inputs, targets = stack_windows(list(pairs))
    n = inputs.shape[0]
    n_val = int(round(config.validation_fraction * n))
    if n_val >= n:
        n_val = n - 1
    split = n - n_val
    train_x, train_t = inputs[:split], targets[:split]
    val_x, val_t = inputs[split:], targets[split:]
    report = TrainReport(validation_is_copy=(n_val == 0))

    optimizer = RmsProp(config.learning_rate, config.rmsprop_decay, config.rmsprop_epsilon)
    params = stack.parameters()
    shuffle_rng = np.random.default_rng((config.seed, 1))
    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(split)
        total_sq = 0.0
        total_count = 0
        for lo in range(0, split, config.batch_size):
            idx = order[lo : lo + config.batch_size]
            loss, grads = loss_and_grads(stack, train_x[idx], train_t[idx])
            if not math.isfinite(loss):
                raise NonFiniteLoss(epoch, loss)
            clip_gradients(grads, config.clip_norm)
            optimizer.step(params, grads)
            elems = train_x[idx].size
            total_sq += loss * elems
            total_count += elems
        epoch_train = total_sq / total_count
        report.train_loss.append(epoch_train)
        if n_val == 0:
            report.val_loss.append(epoch_train)
        else:
            vloss = dataset_loss(stack, val_x, val_t, config.batch_size)
            if not math.isfinite(vloss):
                raise NonFiniteLoss(epoch, vloss)
            report.val_loss.append(vloss)
    return report


class GruForecaster(BaseEstimator):
    """Multichannel w-step-ahead forecaster built on the GRU stack.

    fit() standardizes the training series, cuts them into window pairs, and
    trains with RMSProp. predict() tiles a series into input windows and
    returns forecasts in the original units, aligned so row t of the output
    is the forecast of row t of the input (the first w rows are NaN since
    nothing predicts them).
    """

    def __init__(
        self,
        window: int = 100,
        hidden_size: int = 64,
        n_layers: int = 2,
        stride: int | None = None,
        learning_rate: float = 0.001,
        epochs: int = 100,
        batch_size: int = 2048,
        rmsprop_decay: float = 0.9,
        rmsprop_epsilon: float = 1e-8,
        validation_fraction: float = 0.1,
        clip_norm: float = 5.0,
        seed: int = 0,
    ):
        self.window = window
        self.hidden_size = hidden_size
        self.n_layers = n_layers
        self.stride = stride
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.rmsprop_decay = rmsprop_decay
        self.rmsprop_epsilon = rmsprop_epsilon
        self.validation_fraction = validation_fraction
        self.clip_norm = clip_norm
        self.seed = seed

    # -- fitting -----------------------------------------------------------

    def fit(self, X, y=None):
        """Train on one (T, D) array or a sequence of them."""
        series = self._as_series_list(X)
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.n_layers < 1:
            raise ValueError(f"n_layers must be >= 1, got {self.n_layers}")
        config = TrainConfig(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            rmsprop_decay=self.rmsprop_decay,
            rmsprop_epsilon=self.rmsprop_epsilon,
            seed=self.seed,
            validation_fraction=self.validation_fraction,
            clip_norm=self.clip_norm,
        )
        self.normalizer_ = StandardNormalizer().fit(np.vstack(series))
        pairs: list[WindowPair] = []
        stride = self.window if self.stride is None else self.stride
        for sid, arr in enumerate(series):
            if arr.shape[0] >= 2 * self.window:
                pairs.extend(
                    make_windows(self.normalizer_.transform(arr), self.window,
                                 stride, sample_id=sid)
                )
        if not pairs:
            raise SeriesTooShort(
                f"no series long enough for window={self.window} (need 2w rows)"
            )
        self.n_features_in_ = series[0].shape[1]
        self.stack_ = init_gru_stack(
            self.n_features_in_, self.hidden_size, self.n_layers, self.seed
        )
        self.report_ = train_stack(self.stack_, pairs, config)
        return self

    # -- prediction --------------------------------------------------------

    def predict(self, X) -> np.ndarray:
        """Forecast a (T, D) series in original units; rows [0, w) are NaN.

        The series is tiled into non-overlapping input windows. When the tail
        does not divide evenly, one extra window anchored at T - 2w covers it;
        forecasts from later windows overwrite earlier ones on overlap.
        """
        self._require_fitted()
        Xn = self.transform_input(X)
        w = self.window
        T = Xn.shape[0]
        preds = np.full_like(Xn, np.nan)
        for start in self._tile_starts(T, w):
            y = forward_stack(self.stack_, Xn[start : start + w])
            preds[start + w : start + 2 * w] = y
        return self.normalizer_.inverse_transform(preds)

    def predict_normalized(self, X) -> np.ndarray:
        """Same alignment as predict() but in standardized units."""
        self._require_fitted()
        Xn = self.transform_input(X)
        w = self.window
        preds = np.full_like(Xn, np.nan)
        for start in self._tile_starts(Xn.shape[0], w):
            y = forward_stack(self.stack_, Xn[start : start + w])
            preds[start + w : start + 2 * w] = y
        return preds

    def transform_input(self, X) -> np.ndarray:
        self._require_fitted()
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise DimensionMismatch(f"expected a (T, D) series, got shape {X.shape}")
        if X.shape[0] < 2 * self.window:
            raise SeriesTooShort(
                f"series of {X.shape[0]} rows is shorter than 2w={2 * self.window}"
            )
        return self.normalizer_.transform(X)

    @staticmethod
    def _tile_starts(T: int, w: int) -> list[int]:
        starts = list(range(0, T - 2 * w + 1, w))
        if starts[-1] != T - 2 * w:
            starts.append(T - 2 * w)
        return starts

    def _require_fitted(self):
        if not hasattr(self, "stack_"):
            raise NotFittedError("GruForecaster is not fitted yet")

    @staticmethod
    def _as_series_list(X) -> list[np.ndarray]:
        if isinstance(X, np.ndarray) and X.ndim == 2:
            series = [np.asarray(X, dtype=np.float64)]
        else:
            series = [np.asarray(a, dtype=np.float64) for a in X]
        if not series:
            raise EmptyInput("fit needs at least one series")
        width = series[0].shape[1] if series[0].ndim == 2 else -1
        for arr in series:
            if arr.ndim != 2 or arr.shape[1] != width:
                raise DimensionMismatch("all training series must be (T, D) with equal D")
        return series

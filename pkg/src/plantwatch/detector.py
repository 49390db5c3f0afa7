"""Residual-energy anomaly detection on top of a forecaster.

The per-step error is the squared residual summed over channels. It is
smoothed with an exponentially weighted moving average whose weight is tied
to the forecast window so that an observation's influence halves after w
steps. The alarm threshold is a high empirical quantile of the smoothed
training error, and detection events are upward threshold crossings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .errors import DimensionMismatch, EmptyInput
from .forecaster import GruForecaster

DETECTION_SCHEMA_VERSION = 1


def alpha_from_window(window: int) -> float:
    """EWMA weight with the halving property (1 - alpha)^w = 1/2."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    return 1.0 - math.exp(-math.log(2.0) / window)


def residual_error(pred: np.ndarray, obs: np.ndarray) -> np.ndarray:
    """Per-step squared residual summed over channels: e[t] = sum_i r[t,i]^2."""
    pred = np.asarray(pred, dtype=np.float64)
    obs = np.asarray(obs, dtype=np.float64)
    if pred.shape != obs.shape:
        raise DimensionMismatch(f"pred {pred.shape} vs obs {obs.shape}")
    diff = pred - obs
    return np.sum(diff * diff, axis=-1)


def ewma(values: np.ndarray, alpha: float) -> np.ndarray:
    """s[0] = v[0]; s[t] = alpha * v[t] + (1 - alpha) * s[t-1]."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1:
        raise DimensionMismatch(f"ewma expects a 1-D series, got shape {values.shape}")
    if values.shape[0] == 0:
        raise EmptyInput("ewma needs at least one value")
    out = np.empty_like(values)
    s = float(values[0])
    out[0] = s
    keep = 1.0 - alpha
    for t in range(1, values.shape[0]):
        s = alpha * float(values[t]) + keep * s
        out[t] = s
    return out


@dataclass(frozen=True)
class ErrorTrace:
    """Raw and smoothed error for one series.

    Both arrays span the full series length; entries before ``valid_from``
    are NaN because the model carries no forecast there.
    """

    values: np.ndarray
    smoothed: np.ndarray
    valid_from: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        smoothed = np.asarray(self.smoothed, dtype=np.float64)
        if values.shape != smoothed.shape or values.ndim != 1:
            raise DimensionMismatch("trace arrays must be equal-length 1-D")
        if not 0 <= self.valid_from < values.shape[0]:
            raise ValueError(f"valid_from {self.valid_from} outside [0, {values.shape[0]})")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "smoothed", smoothed)

    @property
    def length(self) -> int:
        return self.values.shape[0]

    def defined_smoothed(self) -> np.ndarray:
        return self.smoothed[self.valid_from :]


def build_error_trace(values: np.ndarray, valid_from: int, alpha: float) -> ErrorTrace:
    """Smooth a defined error segment into a full-length ErrorTrace.

    ``values`` holds only the defined part of the error sequence; the trace
    is padded with ``valid_from`` NaN rows in front of it, so the full trace
    length is ``valid_from + len(values)``.
    """
    defined = np.asarray(values, dtype=np.float64)
    if defined.ndim != 1:
        raise DimensionMismatch(f"expected 1-D error values, got shape {defined.shape}")
    if valid_from < 0:
        raise ValueError(f"valid_from must be >= 0, got {valid_from}")
    if defined.shape[0] == 0:
        raise EmptyInput("no defined error values to smooth")
    if not np.isfinite(defined).all():
        raise ValueError("defined error values must be finite")
    if (defined < 0).any():
        raise ValueError("squared-residual errors cannot be negative")
    full_len = valid_from + defined.shape[0]
    vals = np.full(full_len, np.nan)
    smooth = np.full(full_len, np.nan)
    vals[valid_from:] = defined
    smooth[valid_from:] = ewma(defined, alpha)
    return ErrorTrace(vals, smooth, valid_from)


def fit_threshold(traces: Sequence[ErrorTrace], quantile: float = 0.999) -> float:
    """Linear-interpolation empirical quantile of all smoothed training error."""
    if not 0.0 < quantile < 1.0:
        raise ValueError(f"quantile must be in (0, 1), got {quantile}")
    traces = list(traces)
    if not traces:
        raise EmptyInput("fit_threshold needs at least one trace")
    pooled = np.concatenate([t.defined_smoothed() for t in traces])
    if pooled.size == 0:
        raise EmptyInput("traces carry no defined smoothed values")
    return float(np.quantile(pooled, quantile, method="linear"))


def detect(trace: ErrorTrace, threshold: float) -> list[int]:
    """Indices where the smoothed error crosses upward through the threshold.

    A sustained excursion yields exactly one event at its first step. If the
    first defined value already sits above the threshold, that first defined
    index is an event.
    """
    s = trace.smoothed
    events: list[int] = []
    above_prev = False
    for t in range(trace.valid_from, trace.length):
        above = s[t] > threshold
        if above and not above_prev:
            events.append(t)
        above_prev = above
    return events


@dataclass(frozen=True)
class DetectionRun:
    """Everything `detect` produced for one series."""

    trace: ErrorTrace
    threshold: float
    alpha: float
    detections: list[int] = field(default_factory=list)

    def to_json_dict(self, sample: str | None = None) -> dict:
        d = {
            "schema_version": DETECTION_SCHEMA_VERSION,
            "threshold": self.threshold,
            "alpha": self.alpha,
            "valid_from": int(self.trace.valid_from),
            "length": int(self.trace.length),
            "detections": [int(i) for i in self.detections],
            "smoothed_error": [float(v) for v in self.trace.defined_smoothed()],
        }
        if sample is not None:
            d["sample"] = sample
        return d


class ForecastDetector(BaseEstimator):
    """GRU forecaster plus residual thresholding, as one estimator.

    fit() trains the forecaster on the given series (unless a fitted one was
    supplied), then calibrates the alarm threshold on the same series'
    smoothed training error. detect() turns any series into crossing events.
    """

    def __init__(self, forecaster: GruForecaster | None = None, quantile: float = 0.999):
        self.forecaster = forecaster
        self.quantile = quantile

    def fit(self, X, y=None):
        series = GruForecaster._as_series_list(X)
        fc = self.forecaster if self.forecaster is not None else GruForecaster()
        if not hasattr(fc, "stack_"):
            fc.fit(series)
        self.forecaster_ = fc
        self.alpha_ = alpha_from_window(fc.window)
        traces = [self.error_trace(arr) for arr in series
                  if arr.shape[0] >= 2 * fc.window]
        if not traces:
            raise EmptyInput("no training series long enough to calibrate a threshold")
        self.threshold_ = fit_threshold(traces, self.quantile)
        return self

    def error_trace(self, X) -> ErrorTrace:
        if not hasattr(self, "alpha_"):
            raise NotFittedError("ForecastDetector is not fitted yet")
        fc = self.forecaster_
        Xn = fc.transform_input(X)
        pred = fc.predict_normalized(X)
        e = residual_error(pred[fc.window :], Xn[fc.window :])
        return build_error_trace(e, fc.window, self.alpha_)

    def detect(self, X) -> DetectionRun:
        self._require_fitted()
        trace = self.error_trace(X)
        return DetectionRun(
            trace=trace,
            threshold=self.threshold_,
            alpha=self.alpha_,
            detections=detect(trace, self.threshold_),
        )

    def _require_fitted(self):
        if not hasattr(self, "threshold_"):
            raise NotFittedError("ForecastDetector is not fitted yet")

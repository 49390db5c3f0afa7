"""Dynamic PCA baseline: lag-augmented correlation structure plus SPE.

Each observation is augmented with its previous lag-1 history so the
principal subspace captures cross-channel and temporal correlation at once.
Detection uses the squared prediction error (distance from the retained
subspace), smoothed and thresholded exactly like the forecaster pipeline so
both methods share event semantics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .detector import (
    DetectionRun,
    ErrorTrace,
    alpha_from_window,
    build_error_trace,
    detect,
    fit_threshold,
)
from .errors import DimensionMismatch, EmptyInput, SeriesTooShort
from .preprocessing import ZERO_VARIANCE_EPS
from .eigen import jacobi_eigh


def build_lag_matrix(X: np.ndarray, lag: int) -> np.ndarray:
    """Stack each row with its lag-1 history.

    Row t of the result concatenates observations t, t-1, ..., t-lag+1, so a
    (T, d) series yields a (T - lag + 1, d * lag) matrix. Row index r
    corresponds to timestep r + lag - 1 of the source series.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatch(f"expected a (T, d) series, got shape {X.shape}")
    if lag < 1:
        raise ValueError(f"lag must be >= 1, got {lag}")
    T, d = X.shape
    if T < lag:
        raise SeriesTooShort(f"need at least lag={lag} rows, got {T}")
    n = T - lag + 1
    out = np.empty((n, d * lag))
    for k in range(lag):
        out[:, k * d : (k + 1) * d] = X[lag - 1 - k : T - k]
    return out


class DpcaDetector(BaseEstimator):
    """Per-mode lagged-PCA detector with an SPE alarm threshold.

    fit() standardizes the lag matrix columns (population std; constant
    columns get unit scale and a forced unit correlation diagonal), runs the
    Jacobi eigensolver on the correlation matrix, keeps every component with
    eigenvalue above the Kaiser threshold, and calibrates the smoothed-SPE
    quantile threshold on the training series themselves.
    """

    def __init__(self, lag: int = 10, kaiser_threshold: float = 1.0,
                 quantile: float = 0.999):
        self.lag = lag
        self.kaiser_threshold = kaiser_threshold
        self.quantile = quantile

    def fit(self, X, y=None):
        series = self._as_series_list(X)
        lagged = [build_lag_matrix(arr, self.lag) for arr in series]
        Z = np.vstack(lagged)
        if Z.shape[0] < 2:
            raise SeriesTooShort("need at least two lagged rows to fit a correlation")
        self.n_features_in_ = series[0].shape[1]
        self.mean_ = Z.mean(axis=0)
        std = Z.std(axis=0)
        zero_var = std < ZERO_VARIANCE_EPS
        self.scale_ = np.where(zero_var, 1.0, std)
        Zs = (Z - self.mean_) / self.scale_
        corr = (Zs.T @ Zs) / Z.shape[0]
        # constant columns carry no correlation signal but still count as
        # one unit of variance each, keeping trace == d * lag
        idx = np.where(zero_var)[0]
        corr[idx, idx] = 1.0
        eigenvalues, vectors = jacobi_eigh(corr)
        self.eigenvalues_ = eigenvalues
        # Kaiser rule: keep components explaining more than one column's variance
        k = int(np.sum(eigenvalues > self.kaiser_threshold))
        self.n_components_ = k
        self.components_ = vectors[:, :k]
        self.alpha_ = alpha_from_window(self.lag)
        traces = [self.error_trace(arr) for arr in series]
        self.threshold_ = fit_threshold(traces, self.quantile)
        return self

    def spe(self, X) -> np.ndarray:
        """Squared prediction error per timestep; the first lag-1 are NaN."""
        self._require_fitted()
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise DimensionMismatch(
                f"expected (T, {self.n_features_in_}) series, got shape {X.shape}"
            )
        Z = (build_lag_matrix(X, self.lag) - self.mean_) / self.scale_
        proj = Z @ self.components_
        resid = Z - proj @ self.components_.T
        values = np.sum(resid * resid, axis=1)
        out = np.full(X.shape[0], np.nan)
        out[self.lag - 1 :] = values
        return out

    def error_trace(self, X) -> ErrorTrace:
        spe = self.spe(X)
        return build_error_trace(spe[self.lag - 1 :], self.lag - 1, self.alpha_)

    def detect(self, X) -> DetectionRun:
        self._require_fitted()
        if not hasattr(self, "threshold_"):
            raise NotFittedError("DpcaDetector has no calibrated threshold")
        trace = self.error_trace(X)
        return DetectionRun(
            trace=trace,
            threshold=self.threshold_,
            alpha=self.alpha_,
            detections=detect(trace, self.threshold_),
        )

    def _require_fitted(self):
        if not hasattr(self, "components_"):
            raise NotFittedError("DpcaDetector is not fitted yet")

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
                raise DimensionMismatch("all training series must be (T, d) with equal d")
        return series


@dataclass(frozen=True)
class ModeBankScore:
    """Normalized score per operating mode plus their plain mean."""

    per_mode: dict[int, float]
    average: float


def bank_average(per_mode: dict[int, float]) -> ModeBankScore:
    if not per_mode:
        raise EmptyInput("no per-mode scores to average")
    return ModeBankScore(
        per_mode=dict(per_mode),
        average=float(sum(per_mode.values()) / len(per_mode)),
    )

"""JSON persistence for fitted detectors.

A model file is one JSON object: {"format_version": 1, "type": <tag>,
"model": {...}} with every array stored as nested lists. Floats are written
with full round-trip precision, so a loaded detector reproduces the saved
one's outputs bit-exactly. Training loss curves are not persisted; they are
a byproduct of fitting, not part of the decision function.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .detector import ForecastDetector
from .dpca import DpcaDetector
from .errors import ModelFormatError
from .forecaster import GruForecaster
from .gru import GruLayerParams, GruStack, OutputParams
from .preprocessing import StandardNormalizer

FORMAT_VERSION = 1

TYPE_FORECAST_DETECTOR = "forecast_detector"
TYPE_DPCA_DETECTOR = "dpca_detector"
TYPE_DPCA_BANK = "dpca_bank"

_LAYER_FIELDS = ("W_z", "W_r", "W_h", "U_z", "U_r", "U_h", "b_z", "b_r", "b_h")


def _listed(array) -> list:
    return np.asarray(array, dtype=np.float64).tolist()


def _array(payload, key: str) -> np.ndarray:
    try:
        return np.asarray(payload[key], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"bad or missing model field {key!r}: {exc}") from exc


def _normalizer_payload(norm: StandardNormalizer) -> dict:
    return {"mean": _listed(norm.mean_), "scale": _listed(norm.scale_)}


def _normalizer_from(payload: dict) -> StandardNormalizer:
    norm = StandardNormalizer()
    norm.mean_ = _array(payload, "mean")
    norm.scale_ = _array(payload, "scale")
    norm.n_features_in_ = int(norm.mean_.shape[0])
    return norm


def _stack_payload(stack: GruStack) -> dict:
    return {
        "layers": [
            {name: _listed(getattr(layer, name)) for name in _LAYER_FIELDS}
            for layer in stack.layers
        ],
        "output": {"W": _listed(stack.output.W), "b": _listed(stack.output.b)},
    }


def _stack_from(payload: dict) -> GruStack:
    try:
        layers = [
            GruLayerParams(**{name: np.asarray(entry[name], dtype=np.float64)
                              for name in _LAYER_FIELDS})
            for entry in payload["layers"]
        ]
        out_payload = payload["output"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"bad GRU stack payload: {exc}") from exc
    if not layers:
        raise ModelFormatError("GRU stack payload holds no layers")
    output = OutputParams(W=_array(out_payload, "W"), b=_array(out_payload, "b"))
    return GruStack(layers=layers, output=output)


def _forecaster_payload(fc: GruForecaster) -> dict:
    return {
        "params": fc.get_params(),
        "n_features_in": int(fc.n_features_in_),
        "normalizer": _normalizer_payload(fc.normalizer_),
        "stack": _stack_payload(fc.stack_),
    }


def _forecaster_from(payload: dict) -> GruForecaster:
    try:
        fc = GruForecaster(**payload["params"])
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"bad forecaster params: {exc}") from exc
    fc.n_features_in_ = int(payload.get("n_features_in", 0))
    fc.normalizer_ = _normalizer_from(payload.get("normalizer", {}))
    fc.stack_ = _stack_from(payload.get("stack", {}))
    return fc


def _forecast_detector_payload(det: ForecastDetector) -> dict:
    return {
        "quantile": float(det.quantile),
        "alpha": float(det.alpha_),
        "threshold": float(det.threshold_),
        "forecaster": _forecaster_payload(det.forecaster_),
    }


def _forecast_detector_from(payload: dict) -> ForecastDetector:
    fc = _forecaster_from(payload.get("forecaster", {}))
    det = ForecastDetector(forecaster=fc, quantile=float(payload.get("quantile", 0.999)))
    det.forecaster_ = fc
    try:
        det.alpha_ = float(payload["alpha"])
        det.threshold_ = float(payload["threshold"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"bad detector calibration: {exc}") from exc
    return det


def _dpca_payload(det: DpcaDetector) -> dict:
    return {
        "params": det.get_params(),
        "n_features_in": int(det.n_features_in_),
        "mean": _listed(det.mean_),
        "scale": _listed(det.scale_),
        "eigenvalues": _listed(det.eigenvalues_),
        "n_components": int(det.n_components_),
        "components": _listed(det.components_),
        "alpha": float(det.alpha_),
        "threshold": float(det.threshold_),
    }


def _dpca_from(payload: dict) -> DpcaDetector:
    try:
        det = DpcaDetector(**payload["params"])
        det.n_features_in_ = int(payload["n_features_in"])
        det.n_components_ = int(payload["n_components"])
        det.alpha_ = float(payload["alpha"])
        det.threshold_ = float(payload["threshold"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"bad subspace detector payload: {exc}") from exc
    det.mean_ = _array(payload, "mean")
    det.scale_ = _array(payload, "scale")
    det.eigenvalues_ = _array(payload, "eigenvalues")
    components = _array(payload, "components")
    # an empty component list collapses to shape (0,); restore (d*lag, 0)
    if components.size == 0:
        components = components.reshape(det.mean_.shape[0], 0)
    det.components_ = components
    return det


def _tag_for(model) -> tuple[str, dict]:
    if isinstance(model, ForecastDetector):
        return TYPE_FORECAST_DETECTOR, _forecast_detector_payload(model)
    if isinstance(model, DpcaDetector):
        return TYPE_DPCA_DETECTOR, _dpca_payload(model)
    if isinstance(model, dict) and model and all(
        isinstance(v, DpcaDetector) for v in model.values()
    ):
        return TYPE_DPCA_BANK, {
            "modes": {str(int(mode)): _dpca_payload(det) for mode, det in model.items()}
        }
    raise ModelFormatError(f"cannot serialize object of type {type(model).__name__}")


def save_model(model, path: str | Path) -> None:
    """Write a fitted detector (or a {mode: detector} bank) to JSON."""
    tag, payload = _tag_for(model)
    doc = {"format_version": FORMAT_VERSION, "type": tag, "model": payload}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_model(path: str | Path):
    """Load whatever `save_model` wrote; the type tag picks the class."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelFormatError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{path}: model container must be a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported format_version {version!r} (supported: {FORMAT_VERSION})"
        )
    tag = doc.get("type")
    payload = doc.get("model")
    if not isinstance(payload, dict):
        raise ModelFormatError(f"{path}: missing model payload")
    if tag == TYPE_FORECAST_DETECTOR:
        return _forecast_detector_from(payload)
    if tag == TYPE_DPCA_DETECTOR:
        return _dpca_from(payload)
    if tag == TYPE_DPCA_BANK:
        modes = payload.get("modes")
        if not isinstance(modes, dict) or not modes:
            raise ModelFormatError(f"{path}: bank payload holds no modes")
        try:
            return {int(k): _dpca_from(v) for k, v in modes.items()}
        except ValueError as exc:
            raise ModelFormatError(f"{path}: bank mode keys must be integers: {exc}") from exc
    raise ModelFormatError(f"{path}: unknown model type {tag!r}")

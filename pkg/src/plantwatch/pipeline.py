"""Corpus-level orchestration: load samples, train detectors, score runs.

A corpus directory (see simulator.generate_corpus) carries train/ and test/
CSVs plus manifest.json. The forecasting detector trains on every training
sample jointly; the subspace baseline trains one model per operating mode on
that mode's stationary training data and its scores are averaged over modes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .detector import DetectionRun, ForecastDetector, detect as detect_events, fit_threshold
from .dpca import DpcaDetector, ModeBankScore, bank_average
from .errors import ConfigError, MissingMode, SampleMismatch
from .forecaster import GruForecaster
from .frames import TimeSeriesFrame, load_dataset, load_schema
from .nab import NabReport, score_scoring_input
from .simulator import MANIFEST_SCHEMA_VERSION

DETECTIONS_SCHEMA_VERSION = 1
COMPARE_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class CorpusSample:
    """One manifest entry together with its loaded frame."""

    record: dict
    frame: TimeSeriesFrame

    @property
    def file(self) -> str:
        return self.record["file"]

    @property
    def mode(self) -> int:
        return int(self.record["mode"])

    @property
    def split(self) -> str:
        return self.record["split"]

    @property
    def kind(self) -> str:
        return self.record["kind"]

    @property
    def series(self) -> str | None:
        return self.record.get("series")

    def attack_intervals(self) -> list[tuple[int, int]]:
        """Attack intervals in step indices, using the manifest's hours."""
        rate = self.frame.sample_rate
        out = []
        for a in self.record.get("attacks", []):
            s = int(round(float(a["start_h"]) * rate))
            e = int(round(float(a["end_h"]) * rate))
            out.append((s, e))
        return out


@dataclass(frozen=True)
class Corpus:
    root: Path
    manifest: dict
    samples: tuple[CorpusSample, ...]

    @property
    def sample_rate(self) -> int:
        return int(self.manifest["sample_rate"])

    def split(self, name: str, exclude_series: tuple[str, ...] = ()) -> list[CorpusSample]:
        return [
            s for s in self.samples
            if s.split == name and (s.series is None or s.series not in exclude_series)
        ]

    def train_samples(self) -> list[CorpusSample]:
        return self.split("train")

    def test_samples(self, exclude_series: tuple[str, ...] = ()) -> list[CorpusSample]:
        return self.split("test", exclude_series)


def load_corpus(root: str | Path) -> Corpus:
    """Read manifest.json, the channel schema, and every referenced sample."""
    root = Path(root)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise ConfigError(f"{root} is not a corpus directory (no manifest.json)")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{manifest_path}: invalid JSON: {exc}") from exc
    version = manifest.get("schema_version")
    if version != MANIFEST_SCHEMA_VERSION:
        raise ConfigError(
            f"{manifest_path}: unsupported manifest schema_version {version!r}"
        )
    schema = load_schema(root / manifest.get("schema_file", "schema.json"))
    rate = int(manifest["sample_rate"])
    samples = []
    for record in manifest.get("samples", []):
        frame = load_dataset(root / record["file"], schema, sample_rate=rate)
        if "points" in record and frame.n_points != int(record["points"]):
            raise SampleMismatch(
                f"{record['file']}: manifest says {record['points']} points, "
                f"file has {frame.n_points}"
            )
        samples.append(CorpusSample(record=record, frame=frame))
    if not samples:
        raise ConfigError(f"{manifest_path} lists no samples")
    return Corpus(root=root, manifest=manifest, samples=tuple(samples))


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

def train_forecast_detector(
    corpus: Corpus, quantile: float = 0.999, **forecaster_params
) -> ForecastDetector:
    """Fit the forecasting detector on every training sample jointly."""
    series = [s.frame.model_input() for s in corpus.train_samples()]
    fc = GruForecaster(**forecaster_params)
    det = ForecastDetector(forecaster=fc, quantile=quantile)
    det.fit(series)
    return det


SUBSPACE_FIT_FRACTION = 0.8


def train_dpca_bank(
    corpus: Corpus,
    lag: int = 10,
    kaiser_threshold: float = 1.0,
    quantile: float = 0.999,
) -> dict[int, DpcaDetector]:
    """Fit one subspace detector per mode on stationary training samples.

    The baseline only learns a single mode's correlation structure, so
    transient training samples are excluded on purpose; transient test
    samples are still scored against the base mode's model.

    The subspace is fit on the leading fraction of each series and the
    threshold quantile is then taken over the full training traces: with one
    short series per mode the residual space would otherwise absorb the
    sample's own noise and leave the threshold below any fresh data's SPE.
    """
    groups: dict[int, list[np.ndarray]] = {}
    for s in corpus.train_samples():
        if s.kind == "normal":
            groups.setdefault(s.mode, []).append(s.frame.model_input())
    bank: dict[int, DpcaDetector] = {}
    for mode in sorted(groups):
        det = DpcaDetector(lag=lag, kaiser_threshold=kaiser_threshold, quantile=quantile)
        heads = [
            arr[: max(2 * lag, int(round(SUBSPACE_FIT_FRACTION * arr.shape[0])))]
            for arr in groups[mode]
        ]
        det.fit(heads)
        det.threshold_ = fit_threshold(
            [det.error_trace(arr) for arr in groups[mode]], quantile
        )
        bank[mode] = det
    if not bank:
        raise ConfigError("corpus has no stationary training samples to fit on")
    return bank


# ---------------------------------------------------------------------------
# detection over a corpus split
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SampleDetection:
    sample: CorpusSample
    run: DetectionRun


def _model_for(model, sample: CorpusSample):
    if isinstance(model, dict):
        if sample.mode not in model:
            raise MissingMode(
                f"no per-mode model for mode {sample.mode} (sample {sample.file})"
            )
        return model[sample.mode]
    return model


def detect_samples(
    model,
    corpus: Corpus,
    split: str = "test",
    exclude_series: tuple[str, ...] = (),
) -> list[SampleDetection]:
    """Run one detector (or a {mode: detector} bank) over a corpus split."""
    out = []
    for sample in corpus.split(split, exclude_series):
        run = _model_for(model, sample).detect(sample.frame.model_input())
        out.append(SampleDetection(sample=sample, run=run))
    return out


def detections_payload(
    detections: list[SampleDetection], model_type: str, include_traces: bool = True
) -> dict:
    """JSON document for one detection pass; also valid scorer input."""
    samples = []
    for d in detections:
        entry = {
            "sample": d.sample.file,
            "mode": d.sample.mode,
            "length": int(d.run.trace.length),
            "attacks": [[s, e] for s, e in d.sample.attack_intervals()],
            "detections": [int(i) for i in d.run.detections],
            "threshold": float(d.run.threshold),
            "alpha": float(d.run.alpha),
            "valid_from": int(d.run.trace.valid_from),
        }
        if d.sample.series is not None:
            entry["series"] = d.sample.series
        if include_traces:
            entry["smoothed_error"] = [float(v) for v in d.run.trace.defined_smoothed()]
        samples.append(entry)
    return {
        "schema_version": DETECTIONS_SCHEMA_VERSION,
        "model_type": model_type,
        "samples": samples,
    }


# ---------------------------------------------------------------------------
# scoring
# ---------------------------------------------------------------------------

def _score_entries(entries: list[tuple[CorpusSample, list[int]]]) -> NabReport:
    payload = {
        "samples": [
            {
                "length": sample.frame.n_points,
                "attacks": [[s, e] for s, e in sample.attack_intervals()],
                "detections": [int(i) for i in detections],
            }
            for sample, detections in entries
        ]
    }
    return score_scoring_input(payload)


def score_detections(detections: list[SampleDetection]) -> NabReport:
    """One pooled score over the concatenated samples."""
    return _score_entries([(d.sample, list(d.run.detections)) for d in detections])


def score_by_mode(
    detections: list[SampleDetection],
) -> tuple[ModeBankScore, dict[int, NabReport]]:
    """Per-mode pooled scores plus their plain mean (the bank aggregate)."""
    grouped: dict[int, list[tuple[CorpusSample, list[int]]]] = {}
    for d in detections:
        grouped.setdefault(d.sample.mode, []).append(
            (d.sample, list(d.run.detections))
        )
    reports = {mode: _score_entries(entries) for mode, entries in sorted(grouped.items())}
    score = bank_average({mode: r.normalized for mode, r in reports.items()})
    return score, reports


# ---------------------------------------------------------------------------
# model comparison with optional threshold sweep
# ---------------------------------------------------------------------------

def _rnn_trace_sets(det: ForecastDetector, corpus: Corpus,
                    exclude_series: tuple[str, ...]):
    w = det.forecaster_.window
    train = [
        det.error_trace(s.frame.model_input())
        for s in corpus.train_samples()
        if s.frame.n_points >= 2 * w
    ]
    test = [
        (s, det.error_trace(s.frame.model_input()))
        for s in corpus.test_samples(exclude_series)
    ]
    return train, test


def _bank_trace_sets(bank: dict[int, DpcaDetector], corpus: Corpus,
                     exclude_series: tuple[str, ...]):
    train: dict[int, list] = {}
    for s in corpus.train_samples():
        if s.kind != "normal":
            continue
        if s.mode in bank:
            train.setdefault(s.mode, []).append(
                bank[s.mode].error_trace(s.frame.model_input())
            )
    test = []
    for s in corpus.test_samples(exclude_series):
        if s.mode not in bank:
            raise MissingMode(f"no per-mode model for mode {s.mode} (sample {s.file})")
        test.append((s, bank[s.mode].error_trace(s.frame.model_input())))
    return train, test


def compare_models(
    corpus: Corpus,
    det: ForecastDetector,
    bank: dict[int, DpcaDetector],
    exclude_series: tuple[str, ...] = (),
    sweep_quantiles: tuple[float, ...] = (),
) -> dict:
    """Score both detectors on the same test split, side by side.

    The sweep recalibrates both detectors' thresholds at each quantile from
    their own training error traces (no retraining) and rescores, so the
    effect of the alarm threshold is isolated from the learned models.
    """
    rnn_detections = detect_samples(det, corpus, "test", exclude_series)
    rnn_report = score_detections(rnn_detections)
    bank_detections = detect_samples(bank, corpus, "test", exclude_series)
    bank_score, bank_reports = score_by_mode(bank_detections)

    result = {
        "schema_version": COMPARE_SCHEMA_VERSION,
        "excluded_series": list(exclude_series),
        "rnn": {
            "quantile": float(det.quantile),
            "threshold": float(det.threshold_),
            "raw": rnn_report.raw,
            "normalized": rnn_report.normalized,
            "window_count": rnn_report.window_count,
            "detection_count": rnn_report.detection_count,
        },
        "dpca": {
            "quantile": float(next(iter(bank.values())).quantile),
            "average_normalized": bank_score.average,
            "per_mode": {str(m): r.normalized for m, r in bank_reports.items()},
        },
    }
    if sweep_quantiles:
        rnn_train, rnn_test = _rnn_trace_sets(det, corpus, exclude_series)
        dpca_train, dpca_test = _bank_trace_sets(bank, corpus, exclude_series)
        sweep = []
        for q in sweep_quantiles:
            thr = fit_threshold(rnn_train, q)
            rnn_entries = [(s, detect_events(t, thr)) for s, t in rnn_test]
            thr_by_mode = {m: fit_threshold(traces, q) for m, traces in dpca_train.items()}
            dpca_entries = [(s, detect_events(t, thr_by_mode[s.mode])) for s, t in dpca_test]
            grouped: dict[int, list] = {}
            for s, dets in dpca_entries:
                grouped.setdefault(s.mode, []).append((s, dets))
            per_mode = {
                m: _score_entries(entries).normalized
                for m, entries in sorted(grouped.items())
            }
            sweep.append({
                "quantile": q,
                "rnn_normalized": _score_entries(rnn_entries).normalized,
                "dpca_average_normalized": bank_average(per_mode).average,
            })
        result["sweep"] = sweep
    return result

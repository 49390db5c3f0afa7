"""Command-line front end: simulate, train, detect, score, compare.

Settings resolve with the precedence CLI flag > --config JSON file > built-in
default. The corpus directory may come from --corpus or the PLANTWATCH_CORPUS
environment variable. Exit codes: 0 success, 2 usage or configuration error,
1 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import pipeline
from .detector import ForecastDetector
from .errors import (
    ConfigError,
    InvalidInterval,
    ModelFormatError,
    PlantwatchError,
    SampleMismatch,
)
from .nab import score_scoring_input
from .serialize import (
    TYPE_DPCA_BANK,
    TYPE_FORECAST_DETECTOR,
    load_model,
    save_model,
)
from .simulator import default_plan, generate_corpus

ENV_CORPUS = "PLANTWATCH_CORPUS"

SCORE_REPORT_SCHEMA_VERSION = 1
TRAIN_REPORT_SCHEMA_VERSION = 1

#: GruForecaster settings a config file or CLI flag may override.
_FORECASTER_KEYS = (
    "window", "hidden_size", "n_layers", "stride", "learning_rate", "epochs",
    "batch_size", "rmsprop_decay", "rmsprop_epsilon", "validation_fraction",
    "clip_norm", "seed",
)

_USAGE_ERRORS = (ConfigError, ValueError, ModelFormatError, SampleMismatch, InvalidInterval)


@dataclass(frozen=True)
class ExperimentConfig:
    """Merged settings for the train and compare stages."""

    corpus: Path
    quantile: float = 0.999
    lag: int = 10
    kaiser_threshold: float = 1.0
    sweep: tuple[float, ...] = ()
    forecaster_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.quantile < 1.0:
            raise ConfigError(f"quantile must be in (0, 1), got {self.quantile}")
        if int(self.lag) < 1:
            raise ConfigError(f"lag must be >= 1, got {self.lag}")
        for q in self.sweep:
            if not 0.0 < q < 1.0:
                raise ConfigError(f"sweep quantile must be in (0, 1), got {q}")


def _load_json(path: str | Path, what: str) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{what} file {path} does not exist")
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(payload, dict):
        raise ConfigError(f"{path}: {what} must be a JSON object")
    return payload


def _resolve_corpus(args) -> Path:
    corpus = getattr(args, "corpus", None) or os.environ.get(ENV_CORPUS)
    if not corpus:
        raise ConfigError(f"pass --corpus or set {ENV_CORPUS}")
    return Path(corpus)


def _experiment_config(args) -> ExperimentConfig:
    file_cfg = _load_json(args.config, "config") if getattr(args, "config", None) else {}

    def pick(name, default):
        value = getattr(args, name, None)
        if value is not None:
            return value
        if name in file_cfg:
            return file_cfg[name]
        return default

    params = {}
    for key in _FORECASTER_KEYS:
        value = pick(key, None)
        if value is not None:
            params[key] = value
    sweep = pick("sweep", ())
    if isinstance(sweep, str):
        sweep = tuple(float(tok) for tok in sweep.split(",") if tok)
    return ExperimentConfig(
        corpus=_resolve_corpus(args),
        quantile=float(pick("quantile", 0.999)),
        lag=int(pick("lag", 10)),
        kaiser_threshold=float(pick("kaiser_threshold", 1.0)),
        sweep=tuple(float(q) for q in sweep),
        forecaster_params=params,
    )


def _write_json(path: str | Path, payload: dict) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    if args.plan:
        plan = _load_json(args.plan, "plan")
        if args.seed is not None:
            plan["seed"] = args.seed
        if args.rate is not None:
            plan["sample_rate"] = args.rate
    else:
        plan = default_plan(
            seed=7 if args.seed is None else args.seed,
            sample_rate=100 if args.rate is None else args.rate,
        )
    manifest = generate_corpus(plan, args.out)
    samples = manifest["samples"]
    n_train = sum(1 for s in samples if s["split"] == "train")
    n_test = len(samples) - n_train
    n_attacked = sum(1 for s in samples if s["attacks"])
    series = sorted({s["series"] for s in samples if s.get("series")})
    print(f"corpus written to {args.out}")
    print(f"  train samples: {n_train}")
    print(f"  test samples:  {n_test} ({n_attacked} attacked)")
    print(f"  attack series: {', '.join(series) if series else 'none'}")
    return 0


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

def cmd_train(args) -> int:
    cfg = _experiment_config(args)
    corpus = pipeline.load_corpus(cfg.corpus)
    out = Path(args.out)
    if args.model == "rnn":
        det = pipeline.train_forecast_detector(
            corpus, quantile=cfg.quantile, **cfg.forecaster_params
        )
        model = det
        report = det.forecaster_.report_
        report_payload = {
            "schema_version": TRAIN_REPORT_SCHEMA_VERSION,
            "model_type": TYPE_FORECAST_DETECTOR,
            "train_loss": list(report.train_loss),
            "val_loss": list(report.val_loss),
            "validation_is_copy": report.validation_is_copy,
            "threshold": float(det.threshold_),
        }
        summary = (
            f"final train loss {report.train_loss[-1]:.6f}, "
            f"val loss {report.val_loss[-1]:.6f}, threshold {det.threshold_:.6f}"
        )
    else:
        bank = pipeline.train_dpca_bank(
            corpus, lag=cfg.lag, kaiser_threshold=cfg.kaiser_threshold,
            quantile=cfg.quantile,
        )
        model = bank
        report_payload = {
            "schema_version": TRAIN_REPORT_SCHEMA_VERSION,
            "model_type": TYPE_DPCA_BANK,
            "modes": {
                str(m): {
                    "n_components": int(d.n_components_),
                    "threshold": float(d.threshold_),
                }
                for m, d in bank.items()
            },
        }
        ks = [d.n_components_ for d in bank.values()]
        summary = f"{len(bank)} mode models, retained components {min(ks)}..{max(ks)}"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    report_path = (
        Path(args.report) if args.report
        else out.with_name(out.stem + "_report.json")
    )
    _write_json(report_path, report_payload)
    print(f"saved {args.model} model to {out} ({summary})")
    print(f"train report: {report_path}")
    return 0


# ---------------------------------------------------------------------------
# detect
# ---------------------------------------------------------------------------

def _detection_filename(sample_file: str) -> str:
    return sample_file.replace("/", "__").replace("\\", "__").removesuffix(".csv") + ".json"


def _model_type(model) -> str:
    if isinstance(model, ForecastDetector):
        return TYPE_FORECAST_DETECTOR
    if isinstance(model, dict):
        return TYPE_DPCA_BANK
    return "dpca_detector"


def cmd_detect(args) -> int:
    corpus = pipeline.load_corpus(_resolve_corpus(args))
    model_path = Path(args.model)
    if not model_path.is_file():
        raise ConfigError(f"model file {model_path} does not exist")
    model = load_model(model_path)
    detections = pipeline.detect_samples(model, corpus, split=args.split)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    flagged = 0
    for d in detections:
        payload = d.run.to_json_dict(sample=d.sample.file)
        payload["model_type"] = _model_type(model)
        payload["mode"] = d.sample.mode
        payload["attacks"] = [[s, e] for s, e in d.sample.attack_intervals()]
        if d.sample.series is not None:
            payload["series"] = d.sample.series
        if not args.traces:
            payload.pop("smoothed_error", None)
        _write_json(out_dir / _detection_filename(d.sample.file), payload)
        if d.run.detections:
            flagged += 1
    print(
        f"wrote {len(detections)} detection files to {out_dir} "
        f"({flagged} samples with detections)"
    )
    return 0


# ---------------------------------------------------------------------------
# score
# ---------------------------------------------------------------------------

def _entries_from_dir(det_dir: Path, args) -> list[dict]:
    files = sorted(det_dir.glob("*.json"))
    if not files:
        raise ConfigError(f"{det_dir} holds no detection JSON files")
    loaded = {}
    for f in files:
        payload = _load_json(f, "detections")
        sample = payload.get("sample")
        if not sample:
            raise SampleMismatch(f"{f} carries no sample id")
        loaded[sample] = payload
    corpus_root = getattr(args, "corpus", None) or os.environ.get(ENV_CORPUS)
    entries = []
    if corpus_root:
        manifest = _load_json(Path(corpus_root) / "manifest.json", "manifest")
        records = {r["file"]: r for r in manifest.get("samples", [])}
        rate = int(manifest["sample_rate"])
        unknown = sorted(set(loaded) - set(records))
        if unknown:
            raise SampleMismatch(f"detections not present in manifest: {unknown}")
        for sample in (r["file"] for r in manifest.get("samples", []) if r["file"] in loaded):
            payload = loaded[sample]
            record = records[sample]
            if int(payload["length"]) != int(record["points"]):
                raise SampleMismatch(
                    f"{sample}: detections cover {payload['length']} points, "
                    f"manifest says {record['points']}"
                )
            attacks = [
                [int(round(float(a["start_h"]) * rate)), int(round(float(a["end_h"]) * rate))]
                for a in record.get("attacks", [])
            ]
            entries.append({
                "sample": sample,
                "mode": int(record["mode"]),
                "series": record.get("series"),
                "length": int(payload["length"]),
                "attacks": attacks,
                "detections": [int(i) for i in payload.get("detections", [])],
            })
    else:
        for sample in sorted(loaded):
            payload = loaded[sample]
            entries.append({
                "sample": sample,
                "mode": payload.get("mode"),
                "series": payload.get("series"),
                "length": int(payload["length"]),
                "attacks": [[int(a), int(b)] for a, b in payload.get("attacks", [])],
                "detections": [int(i) for i in payload.get("detections", [])],
            })
    return entries


def _entries_from_file(path: Path) -> list[dict]:
    payload = _load_json(path, "scoring input")
    samples = payload.get("samples")
    if not isinstance(samples, list):
        raise ConfigError(f"{path}: scoring input must carry a 'samples' list")
    entries = []
    for i, s in enumerate(samples):
        if "length" not in s:
            raise ConfigError(f"{path}: sample #{i} lacks a length")
        entries.append({
            "sample": s.get("sample", f"#{i}"),
            "mode": s.get("mode"),
            "series": s.get("series"),
            "length": int(s["length"]),
            "attacks": [[int(a), int(b)] for a, b in s.get("attacks", [])],
            "detections": [int(d) for d in s.get("detections", [])],
        })
    return entries


def _score(entries: list[dict]):
    return score_scoring_input({"samples": entries})


def cmd_score(args) -> int:
    path = Path(args.detections)
    if path.is_dir():
        entries = _entries_from_dir(path, args)
    elif path.is_file():
        entries = _entries_from_file(path)
    else:
        raise ConfigError(f"{path} is neither a detections directory nor a JSON file")
    excluded = tuple(args.exclude_series or ())
    report = _score(entries)
    payload = {
        "schema_version": SCORE_REPORT_SCHEMA_VERSION,
        "overall": report.to_json_dict(),
    }
    print(f"normalized NAB score: {report.normalized:.4f} (raw {report.raw:.4f}, "
          f"{report.window_count} windows, {report.detection_count} detections)")

    by_series: dict[str, list[dict]] = {}
    for e in entries:
        by_series.setdefault(e.get("series") or "clean", []).append(e)
    if len(by_series) > 1:
        payload["per_series"] = {}
        for name in sorted(by_series):
            r = _score(by_series[name])
            payload["per_series"][name] = r.normalized
            print(f"  series {name}: {r.normalized:.4f}")

    if excluded:
        kept = [e for e in entries if (e.get("series") or "clean") not in excluded]
        if len(kept) == len(entries):
            raise ConfigError(f"--exclude-series matched nothing: {excluded}")
        filtered = _score(kept)
        payload["excluded_series"] = list(excluded)
        payload["except"] = filtered.to_json_dict()
        print(f"  excluding {', '.join(excluded)}: {filtered.normalized:.4f}")

    if args.per_mode:
        by_mode: dict[int, list[dict]] = {}
        for e in entries:
            if e.get("mode") is None:
                raise ConfigError("per-mode scoring needs a mode per sample "
                                  "(pass --corpus or embed modes)")
            by_mode.setdefault(int(e["mode"]), []).append(e)
        per_mode = {m: _score(es).normalized for m, es in sorted(by_mode.items())}
        average = sum(per_mode.values()) / len(per_mode)
        payload["per_mode"] = {str(m): v for m, v in per_mode.items()}
        payload["per_mode_average"] = average
        for m, v in per_mode.items():
            print(f"  mode {m}: {v:.4f}")
        print(f"  per-mode average: {average:.4f}")

    if args.out:
        _write_json(args.out, payload)
        print(f"report written to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

def _write_trace_csv(path: Path, run, sample_rate: int) -> None:
    trace = run.trace
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time_h", "error", "smoothed", "threshold"])
        for t in range(trace.valid_from, trace.length):
            writer.writerow([
                repr(t / sample_rate),
                repr(float(trace.values[t])),
                repr(float(trace.smoothed[t])),
                repr(float(run.threshold)),
            ])


def cmd_compare(args) -> int:
    cfg = _experiment_config(args)
    corpus = pipeline.load_corpus(cfg.corpus)
    for name, p in (("rnn", args.rnn), ("dpca", args.dpca)):
        if not Path(p).is_file():
            raise ConfigError(f"{name} model file {p} does not exist")
    rnn = load_model(args.rnn)
    bank = load_model(args.dpca)
    if not isinstance(rnn, ForecastDetector):
        raise ConfigError(f"{args.rnn} is not a forecasting detector model")
    if not isinstance(bank, dict):
        raise ConfigError(f"{args.dpca} is not a per-mode model bank")

    excluded = tuple(args.exclude_series or ())
    result = pipeline.compare_models(corpus, rnn, bank, (), cfg.sweep)
    if excluded:
        result["except"] = pipeline.compare_models(corpus, rnn, bank, excluded, cfg.sweep)
        result["excluded_series"] = list(excluded)

    header = f"{'method':<8} {'all':>8}"
    if excluded:
        header += f" {'except ' + ','.join(excluded):>24}"
    print(header)
    rnn_row = f"{'rnn':<8} {result['rnn']['normalized']:>8.4f}"
    dpca_row = f"{'dpca':<8} {result['dpca']['average_normalized']:>8.4f}"
    if excluded:
        rnn_row += f" {result['except']['rnn']['normalized']:>24.4f}"
        dpca_row += f" {result['except']['dpca']['average_normalized']:>24.4f}"
    print(rnn_row)
    print(dpca_row)
    for entry in result.get("sweep", []):
        print(
            f"  q={entry['quantile']}: rnn {entry['rnn_normalized']:.4f}, "
            f"dpca {entry['dpca_average_normalized']:.4f}"
        )

    if args.traces:
        trace_dir = Path(args.traces)
        trace_dir.mkdir(parents=True, exist_ok=True)
        for method, model in (("rnn", rnn), ("dpca", bank)):
            for d in pipeline.detect_samples(model, corpus, "test"):
                stem = Path(d.sample.file).stem
                _write_trace_csv(
                    trace_dir / f"{method}__{stem}.csv", d.run, corpus.sample_rate
                )
        print(f"error traces written to {trace_dir}")

    if args.out:
        _write_json(args.out, result)
        print(f"comparison written to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plantwatch",
        description="Forecast-based anomaly detection for multivariate plant data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a labeled surrogate corpus")
    p.add_argument("--out", required=True, help="corpus output directory")
    p.add_argument("--plan", help="JSON generation plan (default: built-in desk plan)")
    p.add_argument("--seed", type=int, help="override the plan seed")
    p.add_argument("--rate", type=int, help="override points per hour")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="fit a detector on a corpus")
    p.add_argument("--corpus", help=f"corpus dir (default ${ENV_CORPUS})")
    p.add_argument("--model", choices=("rnn", "dpca"), required=True)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--report", help="train report path (default <out>_report.json)")
    p.add_argument("--config", help="JSON file with defaults for the flags below")
    p.add_argument("--quantile", type=float, help="threshold quantile (default 0.999)")
    p.add_argument("--window", type=int, help="forecast window w (default 100)")
    p.add_argument("--hidden-size", dest="hidden_size", type=int)
    p.add_argument("--n-layers", dest="n_layers", type=int)
    p.add_argument("--stride", type=int, help="training window stride (default w)")
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--rmsprop-decay", dest="rmsprop_decay", type=float)
    p.add_argument("--rmsprop-epsilon", dest="rmsprop_epsilon", type=float)
    p.add_argument("--validation-fraction", dest="validation_fraction", type=float)
    p.add_argument("--clip-norm", dest="clip_norm", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--lag", type=int, help="lag-window size for dpca (default 10)")
    p.add_argument("--kaiser-threshold", dest="kaiser_threshold", type=float)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detect", help="run a saved model over corpus samples")
    p.add_argument("--corpus", help=f"corpus dir (default ${ENV_CORPUS})")
    p.add_argument("--model", required=True, help="model file from train")
    p.add_argument("--out", required=True, help="directory for per-sample detection JSON")
    p.add_argument("--split", choices=("train", "test"), default="test")
    p.add_argument("--no-traces", dest="traces", action="store_false",
                   help="omit smoothed-error traces from the JSON")
    p.set_defaults(func=cmd_detect, traces=True)

    p = sub.add_parser("score", help="score detections with the NAB-style metric")
    p.add_argument("--detections", required=True,
                   help="detections directory from detect, or a scoring-input JSON")
    p.add_argument("--corpus", help=f"corpus dir for windows (default ${ENV_CORPUS})")
    p.add_argument("--exclude-series", action="append", dest="exclude_series",
                   metavar="NAME", help="also report the score without this series")
    p.add_argument("--per-mode", action="store_true", help="per-mode scores and mean")
    p.add_argument("--out", help="write the report JSON here")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("compare", help="score the rnn detector against the dpca bank")
    p.add_argument("--corpus", help=f"corpus dir (default ${ENV_CORPUS})")
    p.add_argument("--rnn", required=True, help="forecasting detector model file")
    p.add_argument("--dpca", required=True, help="per-mode bank model file")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--exclude-series", action="append", dest="exclude_series",
                   metavar="NAME")
    p.add_argument("--quantile-sweep", dest="sweep",
                   help="comma-separated quantiles to rescore at, e.g. 0.99,0.999")
    p.add_argument("--traces", help="directory for per-sample error-trace CSVs")
    p.add_argument("--out", help="write the comparison JSON here")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PlantwatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

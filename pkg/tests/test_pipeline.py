"""Corpus loading, per-corpus training, detection, and scoring glue."""

from __future__ import annotations

import json
import shutil

import numpy as np
import pytest

from plantwatch.detector import ForecastDetector
from plantwatch.dpca import DpcaDetector
from plantwatch.errors import ConfigError, MissingMode, SampleMismatch
from plantwatch.pipeline import (
    Corpus,
    compare_models,
    detect_samples,
    detections_payload,
    load_corpus,
    score_by_mode,
    score_detections,
    train_dpca_bank,
    train_forecast_detector,
)

RNN_KW = dict(window=8, hidden_size=8, n_layers=1, epochs=4, batch_size=64,
              stride=4, seed=1)


@pytest.fixture(scope="module")
def corpus(tiny_corpus_dir) -> Corpus:
    return load_corpus(tiny_corpus_dir)


@pytest.fixture(scope="module")
def rnn(corpus) -> ForecastDetector:
    return train_forecast_detector(corpus, quantile=0.98, **RNN_KW)


@pytest.fixture(scope="module")
def bank(corpus) -> dict[int, DpcaDetector]:
    return train_dpca_bank(corpus, lag=4, quantile=0.98)


def test_load_corpus_structure(corpus, tiny_corpus_dir):
    assert corpus.root == tiny_corpus_dir
    assert corpus.sample_rate == 60
    assert len(corpus.train_samples()) == 4
    test = corpus.test_samples()
    assert len(test) == 3
    assert [s.mode for s in test] == [0, 1, 0]
    assert {s.split for s in corpus.samples} == {"train", "test"}
    # every sample loaded with the manifest's sample rate and point count
    for s in corpus.samples:
        assert s.frame.sample_rate == 60
        assert s.frame.n_points == int(s.record["points"])


def test_attack_intervals_use_the_sample_rate(corpus):
    attacked = [s for s in corpus.test_samples() if s.series == "integrity_meas"]
    assert len(attacked) == 1
    assert attacked[0].attack_intervals() == [(24, 36)]  # 0.4h..0.6h at 60/h
    clean = [s for s in corpus.test_samples() if s.series is None]
    assert clean and clean[0].attack_intervals() == []


def test_split_can_exclude_series(corpus):
    kept = corpus.test_samples(exclude_series=("dos_mv",))
    assert len(kept) == 2
    assert all(s.series != "dos_mv" for s in kept)
    # unnamed samples are never excluded
    assert any(s.series is None for s in kept)


def test_load_corpus_rejects_non_corpus_dir(tmp_path):
    with pytest.raises(ConfigError, match="manifest.json"):
        load_corpus(tmp_path)


def _tampered_copy(src, dst, mutate):
    shutil.copytree(src, dst)
    manifest = json.loads((dst / "manifest.json").read_text())
    mutate(manifest)
    (dst / "manifest.json").write_text(json.dumps(manifest))
    return dst


def test_load_corpus_rejects_bad_manifests(tiny_corpus_dir, tmp_path):
    bad_version = _tampered_copy(
        tiny_corpus_dir, tmp_path / "v", lambda m: m.update(schema_version=99)
    )
    with pytest.raises(ConfigError, match="schema_version"):
        load_corpus(bad_version)

    no_samples = _tampered_copy(
        tiny_corpus_dir, tmp_path / "empty", lambda m: m.update(samples=[])
    )
    with pytest.raises(ConfigError, match="no samples"):
        load_corpus(no_samples)

    def break_points(m):
        m["samples"][0]["points"] = 7

    mismatched = _tampered_copy(tiny_corpus_dir, tmp_path / "pts", break_points)
    with pytest.raises(SampleMismatch, match="7 points"):
        load_corpus(mismatched)

    broken = tmp_path / "json"
    shutil.copytree(tiny_corpus_dir, broken)
    (broken / "manifest.json").write_text("{oops")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_corpus(broken)


def test_train_forecast_detector(rnn):
    assert rnn.forecaster_.window == 8
    assert rnn.threshold_ > 0.0
    assert np.isfinite(rnn.threshold_)


def test_train_dpca_bank_covers_training_modes(bank, corpus):
    assert sorted(bank) == [0, 1]
    for det in bank.values():
        assert det.threshold_ > 0.0
        assert det.n_components_ >= 1
    # bank thresholds come from full traces, so training data itself
    # stays almost entirely below them
    for s in corpus.train_samples():
        if s.kind != "normal":
            continue
        trace = bank[s.mode].error_trace(s.frame.model_input())
        frac = np.mean(trace.defined_smoothed() > bank[s.mode].threshold_)
        assert frac <= 0.05


def test_detect_samples_with_single_model(rnn, corpus):
    runs = detect_samples(rnn, corpus, "test")
    assert len(runs) == 3
    for d in runs:
        assert d.run.threshold == rnn.threshold_
        assert d.run.trace.length == d.sample.frame.n_points
    train_runs = detect_samples(rnn, corpus, "train")
    assert len(train_runs) == 4


def test_detect_samples_with_bank_and_missing_mode(bank, corpus):
    runs = detect_samples(bank, corpus, "test")
    assert len(runs) == 3
    assert runs[1].sample.mode == 1
    assert runs[1].run.threshold == bank[1].threshold_
    with pytest.raises(MissingMode, match="mode 1"):
        detect_samples({0: bank[0]}, corpus, "test")


def test_detections_payload_schema(rnn, corpus):
    runs = detect_samples(rnn, corpus, "test")
    doc = detections_payload(runs, "rnn")
    assert doc["schema_version"] == 1
    assert doc["model_type"] == "rnn"
    assert len(doc["samples"]) == 3
    first = doc["samples"][0]
    assert first["attacks"] == [[24, 36]]
    assert first["series"] == "integrity_meas"
    assert first["valid_from"] == 8
    assert len(first["smoothed_error"]) == first["length"] - first["valid_from"]
    assert "series" not in doc["samples"][2]  # unnamed clean sample
    bare = detections_payload(runs, "rnn", include_traces=False)
    assert all("smoothed_error" not in s for s in bare["samples"])
    json.dumps(doc)  # payload must be JSON-clean


def test_score_detections_and_by_mode_agree_on_grouping(rnn, corpus):
    runs = detect_samples(rnn, corpus, "test")
    pooled = score_detections(runs)
    assert pooled.window_count == 2  # one attack window per attacked sample
    score, reports = score_by_mode(runs)
    assert sorted(reports) == [0, 1]
    expected = np.mean([reports[0].normalized, reports[1].normalized])
    assert score.average == pytest.approx(expected, abs=1e-12)
    assert score.per_mode == {m: r.normalized for m, r in reports.items()}


def test_compare_models_document(rnn, bank, corpus):
    doc = compare_models(corpus, rnn, bank,
                         sweep_quantiles=(0.9, rnn.quantile))
    assert doc["schema_version"] == 1
    assert doc["excluded_series"] == []
    assert set(doc["rnn"]) == {"quantile", "threshold", "raw", "normalized",
                               "window_count", "detection_count"}
    assert doc["rnn"]["quantile"] == 0.98
    assert sorted(doc["dpca"]["per_mode"]) == ["0", "1"]
    # the sweep point at the detector's own quantile reproduces the models
    # exactly: same training traces, same threshold, same detections
    at_own = [p for p in doc["sweep"] if p["quantile"] == rnn.quantile]
    assert at_own[0]["rnn_normalized"] == doc["rnn"]["normalized"]
    assert at_own[0]["dpca_average_normalized"] == doc["dpca"]["average_normalized"]
    json.dumps(doc)


def test_compare_models_respects_exclusions(rnn, bank, corpus):
    doc = compare_models(corpus, rnn, bank, exclude_series=("dos_mv",))
    assert doc["excluded_series"] == ["dos_mv"]
    # the excluded series held the only mode-1 test sample
    assert sorted(doc["dpca"]["per_mode"]) == ["0"]

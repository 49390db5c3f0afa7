"""Early-detection scoring: windows, positional credit, aggregation.

Frozen oracle values, derived by hand from the scoring definition:
  detection at 250 against window [100, 200): y = 0.5 widths past the end,
    score 2/(1+e^2.5) - 1 = -0.8482836399575129;
  one missed window plus one false positive: raw = -1 - 0.11 = -1.11,
    normalized = (-1.11 + 1) / 2 = -0.055;
  two-sample concatenation with hits at both window starts and one stray
    detection: raw = 1 + 1 - 0.11 = 1.89, normalized = 3.89 / 4 = 0.9725.
"""

from __future__ import annotations

import pytest

from plantwatch.errors import (
    ConfigError,
    DetectionBeforeWindow,
    InvalidInterval,
    OverlappingSamples,
    UnsortedDetections,
)
from plantwatch.nab import (
    STANDARD_PROFILE,
    AnomalyWindow,
    ScoreProfile,
    build_windows,
    concat_samples,
    positional_score,
    score_run,
    score_scoring_input,
)


# ---------------------------------------------------------------------------
# window construction
# ---------------------------------------------------------------------------

def test_windows_double_the_attack_interval():
    (w,) = build_windows([(10, 20)], 100)
    assert (w.start, w.end) == (10, 30)
    assert w.width == 20
    assert w.assoc_limit == 100


def test_windows_clip_to_sample_length():
    (w,) = build_windows([(90, 98)], 100)
    assert (w.start, w.end) == (90, 100)


def test_windows_merge_overlaps():
    windows = build_windows([(25, 30), (10, 20)], 100)
    assert [(w.start, w.end) for w in windows] == [(10, 35)]
    # disjoint after doubling stays separate
    windows = build_windows([(10, 15), (50, 55)], 100)
    assert [(w.start, w.end) for w in windows] == [(10, 20), (50, 60)]


def test_window_validation():
    with pytest.raises(InvalidInterval):
        build_windows([(50, 40)], 100)
    with pytest.raises(InvalidInterval):
        build_windows([(120, 130)], 100)  # starts past the sample
    with pytest.raises(InvalidInterval):
        build_windows([(0, 10)], 0)
    with pytest.raises(InvalidInterval):
        AnomalyWindow(5, 5)
    with pytest.raises(InvalidInterval):
        AnomalyWindow(5, 10, assoc_limit=8)  # limit inside the window


# ---------------------------------------------------------------------------
# positional score
# ---------------------------------------------------------------------------

def test_window_start_scores_one_end_scores_zero():
    w = AnomalyWindow(100, 200)
    assert positional_score(100, w) == pytest.approx(1.0, abs=0)
    assert positional_score(200, w) == pytest.approx(0.0, abs=0)
    assert positional_score(150, w) == pytest.approx(0.5, abs=1e-12)


def test_late_detection_frozen_sigmoid_value():
    w = AnomalyWindow(100, 200)
    assert positional_score(250, w) == pytest.approx(-0.8482836399575129, abs=1e-12)


def test_detection_before_window_raises():
    with pytest.raises(DetectionBeforeWindow):
        positional_score(99, AnomalyWindow(100, 200))


def test_association_extends_one_width_past_end():
    w = AnomalyWindow(100, 200)
    assert w.associates(100)
    assert w.associates(299)
    assert not w.associates(300)
    assert not w.associates(99)
    clamped = AnomalyWindow(100, 200, assoc_limit=250)
    assert clamped.associates(249)
    assert not clamped.associates(250)


# ---------------------------------------------------------------------------
# run scoring
# ---------------------------------------------------------------------------

def test_null_and_ideal_detectors_anchor_normalization():
    windows = build_windows([(100, 150), (400, 450)], 1000)
    null = score_run([], windows)
    assert null.raw == pytest.approx(-2.0, abs=0)
    assert null.normalized == 0.0
    ideal = score_run([100, 400], windows)
    assert ideal.raw == pytest.approx(2.0, abs=0)
    assert ideal.normalized == 1.0


def test_each_false_positive_costs_exactly_0_11():
    windows = build_windows([(100, 150)], 1000)
    base = score_run([100], windows)
    with_fp = score_run([100, 600, 700], windows)
    assert with_fp.raw == pytest.approx(base.raw - 2 * 0.11, abs=1e-12)
    assert with_fp.false_positives == [600, 700]


def test_missed_window_plus_fp_frozen_values():
    windows = build_windows([(100, 150)], 1000)
    report = score_run([50], windows)  # before the window: pure FP
    assert report.raw == pytest.approx(-1.11, abs=1e-12)
    assert report.normalized == pytest.approx(-0.055, abs=1e-12)


def test_best_detection_per_window_wins():
    windows = build_windows([(100, 150)], 1000)  # window [100, 200)
    report = score_run([120, 180], windows)
    (res,) = report.per_window
    assert res.best_detection == 120
    assert res.contribution == pytest.approx(0.8, abs=1e-12)
    assert report.false_positives == []  # both associated, neither is an FP


def test_zero_windows_degenerate_normalization():
    report = score_run([10, 20], [])
    assert report.raw == pytest.approx(-0.22, abs=1e-12)
    assert report.normalized == report.raw
    clean = score_run([], [])
    assert clean.raw == 0.0 and clean.normalized == 0.0


def test_detections_must_be_increasing():
    with pytest.raises(UnsortedDetections):
        score_run([5, 5], [])
    with pytest.raises(UnsortedDetections):
        score_run([9, 4], [])
    with pytest.raises(InvalidInterval):
        score_run([-1], [])


def test_profile_weights_are_configurable():
    windows = build_windows([(10, 20)], 100)
    profile = ScoreProfile(a_tp=2.0, a_fp=0.5, a_fn=3.0)
    report = score_run([10, 90], windows, profile)
    assert report.raw == pytest.approx(2.0 - 0.5, abs=1e-12)
    missed = score_run([], windows, profile)
    assert missed.raw == pytest.approx(-3.0, abs=1e-12)
    with pytest.raises(ConfigError):
        ScoreProfile(a_tp=0.0)
    assert STANDARD_PROFILE.a_fp == 0.11


# ---------------------------------------------------------------------------
# concatenation
# ---------------------------------------------------------------------------

def test_concat_offsets_detections_and_windows():
    runs = [
        ([100], build_windows([(100, 150)], 300), 0, 300),
        ([40, 50], build_windows([(50, 100)], 300), 300, 300),
    ]
    detections, windows = concat_samples(runs)
    assert detections == [100, 340, 350]
    assert [(w.start, w.end) for w in windows] == [(100, 200), (350, 450)]
    report = score_run(sorted(detections), windows)
    assert report.raw == pytest.approx(1.89, abs=1e-12)
    assert report.normalized == pytest.approx(0.9725, abs=1e-12)


def test_concat_windows_never_reach_into_next_sample():
    # window ends at the sample boundary; its association tail must not
    # absorb the next sample's detection
    runs = [
        ([], build_windows([(80, 95)], 100), 0, 100),  # window [80, 100)
        ([5], [], 100, 100),
    ]
    detections, windows = concat_samples(runs)
    report = score_run(detections, windows)
    (res,) = report.per_window
    assert res.best_detection is None  # detection 105 was not claimed
    assert report.false_positives == [105]
    assert report.raw == pytest.approx(-1.11, abs=1e-12)


def test_concat_validation():
    with pytest.raises(OverlappingSamples):
        concat_samples([([], [], 0, 100), ([], [], 50, 100)])
    with pytest.raises(OverlappingSamples):
        concat_samples([([150], [], 0, 100)])  # detection outside its sample
    with pytest.raises(OverlappingSamples):
        concat_samples([([], [AnomalyWindow(50, 120)], 0, 100)])
    with pytest.raises(OverlappingSamples):
        concat_samples([([], [], 0, 0)])


def test_score_scoring_input_end_to_end():
    payload = {
        "samples": [
            {"length": 300, "attacks": [[100, 150]], "detections": [100]},
            {"length": 300, "attacks": [[50, 100]], "detections": [40, 50]},
        ]
    }
    report = score_scoring_input(payload)
    assert report.window_count == 2
    assert report.detection_count == 3
    assert report.normalized == pytest.approx(0.9725, abs=1e-12)
    with pytest.raises(ConfigError):
        score_scoring_input({"no_samples": []})
    with pytest.raises(ConfigError):
        score_scoring_input({"samples": [{"attacks": []}]})  # missing length

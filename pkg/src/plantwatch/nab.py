"""Window-based early-detection scoring.

Each labeled attack interval becomes an anomaly window twice the attack's
length, anchored at the attack start, so detections shortly after the attack
still earn credit. Inside a window the score falls linearly from 1 at the
window start to 0 at the window end; past the end it follows a shifted
sigmoid down to about -1, and detections more than one window-width past the
end are not associated with the window at all. Only the best detection per
window counts; unassociated detections are false positives with a fixed
penalty. Raw scores are normalized against the silent detector (score 0) and
the ideal detector (score 1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import (
    ConfigError,
    DetectionBeforeWindow,
    InvalidInterval,
    OverlappingSamples,
    UnsortedDetections,
)

NAB_SCHEMA_VERSION = 1
SCORING_INPUT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ScoreProfile:
    """Weights for true positives, false positives, and false negatives."""

    a_tp: float = 1.0
    a_fp: float = 0.11
    a_fn: float = 1.0

    def __post_init__(self):
        if self.a_tp <= 0 or self.a_fp < 0 or self.a_fn < 0:
            raise ConfigError(f"invalid score profile {self}")


STANDARD_PROFILE = ScoreProfile()


@dataclass(frozen=True)
class AnomalyWindow:
    """Half-open index interval [start, end) crediting early detections.

    ``assoc_limit``, when set, caps how far past the end a detection may
    still be associated; sample-aware callers set it to the sample length so
    windows never claim detections from a neighboring sample after
    concatenation.
    """

    start: int
    end: int
    assoc_limit: int | None = None

    def __post_init__(self):
        if self.start < 0 or self.end <= self.start:
            raise InvalidInterval(f"bad window [{self.start}, {self.end})")
        if self.assoc_limit is not None and self.assoc_limit < self.end:
            raise InvalidInterval(
                f"association limit {self.assoc_limit} inside window "
                f"[{self.start}, {self.end})"
            )

    @property
    def width(self) -> int:
        return self.end - self.start

    def associates(self, detection: int) -> bool:
        """True when a detection can be credited to this window.

        Detections are associated from the window start up to one
        window-width past its end (half-open), clipped to ``assoc_limit``.
        """
        upper = self.end + self.width
        if self.assoc_limit is not None:
            upper = min(upper, self.assoc_limit)
        return self.start <= detection < upper


def build_windows(attacks: Sequence[tuple[int, int]], length: int) -> list[AnomalyWindow]:
    """Double each attack interval, clip to the sample, merge overlaps.

    Args:
        attacks: (start, end) half-open attack intervals in step indices.
        length: number of points in the sample; windows are clipped to it.
    """
    if length < 1:
        raise InvalidInterval(f"sample length must be >= 1, got {length}")
    spans = []
    for start, end in attacks:
        if start < 0 or end <= start or start >= length:
            raise InvalidInterval(
                f"attack [{start}, {end}) does not fit a sample of {length} points"
            )
        spans.append((start, min(start + 2 * (end - start), length)))
    spans.sort()
    merged: list[list[int]] = []
    for start, end in spans:
        if merged and start <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])
    return [AnomalyWindow(s, e, assoc_limit=length) for s, e in merged]


def positional_score(detection: int, window: AnomalyWindow) -> float:
    """Score of a single detection relative to one window.

    Linear from 1 to 0 across the window; for late detections (y steps past
    the end, measured in window widths) the score is 2 / (1 + exp(5 y)) - 1.
    """
    if detection < window.start:
        raise DetectionBeforeWindow(
            f"detection {detection} precedes window start {window.start}"
        )
    y = (detection - window.end) / window.width
    if y <= 0.0:
        return -y
    return 2.0 / (1.0 + math.exp(5.0 * y)) - 1.0


@dataclass
class WindowResult:
    window: AnomalyWindow
    best_detection: int | None
    contribution: float


@dataclass
class NabReport:
    """Raw and normalized score plus the per-window/per-FP breakdown."""

    raw: float
    normalized: float
    window_count: int
    detection_count: int
    per_window: list[WindowResult] = field(default_factory=list)
    false_positives: list[int] = field(default_factory=list)
    profile: ScoreProfile = STANDARD_PROFILE

    def to_json_dict(self) -> dict:
        return {
            "schema_version": NAB_SCHEMA_VERSION,
            "raw": self.raw,
            "normalized": self.normalized,
            "window_count": self.window_count,
            "detection_count": self.detection_count,
            "windows": [
                {
                    "start": r.window.start,
                    "end": r.window.end,
                    "best_detection": r.best_detection,
                    "contribution": r.contribution,
                }
                for r in self.per_window
            ],
            "false_positives": [
                {"index": i, "contribution": -self.profile.a_fp}
                for i in self.false_positives
            ],
            "profile": {
                "a_tp": self.profile.a_tp,
                "a_fp": self.profile.a_fp,
                "a_fn": self.profile.a_fn,
            },
        }


def score_run(
    detections: Sequence[int],
    windows: Sequence[AnomalyWindow],
    profile: ScoreProfile = STANDARD_PROFILE,
) -> NabReport:
    """Score one run of detections against labeled windows.

    The raw score credits each window with its best associated detection
    (a_tp * positional score), charges -a_fn per missed window, and -a_fp per
    detection associated with no window. Normalization maps the silent
    detector to 0 and the ideal detector to 1; with zero windows the
    denominator degenerates and the normalized score is defined as the raw
    score (still 0 for the silent detector).
    """
    detections = [int(d) for d in detections]
    for a, b in zip(detections, detections[1:]):
        if b <= a:
            raise UnsortedDetections(f"detections must be strictly increasing: {a} !< {b}")
    for d in detections:
        if d < 0:
            raise InvalidInterval(f"negative detection index {d}")
    windows = list(windows)
    raw = 0.0
    per_window: list[WindowResult] = []
    associated: set[int] = set()
    for win in windows:
        best: float | None = None
        best_det: int | None = None
        for d in detections:
            if win.associates(d):
                associated.add(d)
                s = positional_score(d, win)
                if best is None or s > best:
                    best = s
                    best_det = d
        if best is None:
            contribution = -profile.a_fn
        else:
            contribution = profile.a_tp * best
        per_window.append(WindowResult(win, best_det, contribution))
        raw += contribution
    false_positives = [d for d in detections if d not in associated]
    raw += -profile.a_fp * len(false_positives)
    raw_ideal = profile.a_tp * len(windows)
    raw_null = -profile.a_fn * len(windows)
    denom = raw_ideal - raw_null
    normalized = raw if denom == 0.0 else (raw - raw_null) / denom
    return NabReport(
        raw=raw,
        normalized=normalized,
        window_count=len(windows),
        detection_count=len(detections),
        per_window=per_window,
        false_positives=false_positives,
        profile=profile,
    )


def concat_samples(
    runs: Sequence[tuple[Sequence[int], Sequence[AnomalyWindow], int, int]],
) -> tuple[list[int], list[AnomalyWindow]]:
    """Shift per-sample detections and windows onto one shared axis.

    Args:
        runs: (detections, windows, offset, length) per sample. Offsets must
            be strictly increasing and every sample's events must fit inside
            [offset, offset + length) with no spill into the next sample.
            Windows never merge across sample boundaries.
    """
    all_detections: list[int] = []
    all_windows: list[AnomalyWindow] = []
    prev_end = None
    for detections, windows, offset, length in runs:
        if length < 1:
            raise OverlappingSamples(f"sample length must be >= 1, got {length}")
        if prev_end is not None and offset < prev_end:
            raise OverlappingSamples(
                f"sample at offset {offset} overlaps previous span ending {prev_end}"
            )
        prev_end = offset + length
        for d in detections:
            if not 0 <= d < length:
                raise OverlappingSamples(f"detection {d} outside sample of {length} points")
            all_detections.append(offset + int(d))
        for w in windows:
            if w.end > length:
                raise OverlappingSamples(
                    f"window [{w.start}, {w.end}) outside sample of {length} points"
                )
            # a window may never claim detections beyond its own sample
            local_limit = length if w.assoc_limit is None else min(w.assoc_limit, length)
            all_windows.append(
                AnomalyWindow(w.start + offset, w.end + offset, local_limit + offset)
            )
    return all_detections, all_windows


# ---------------------------------------------------------------------------
# scoring-input JSON
# ---------------------------------------------------------------------------

def score_scoring_input(payload: dict, profile: ScoreProfile = STANDARD_PROFILE) -> NabReport:
    """Score the documented JSON form: {samples: [{length, attacks, detections}]}."""
    if not isinstance(payload, dict) or "samples" not in payload:
        raise ConfigError("scoring input must be an object with a 'samples' list")
    runs = []
    offset = 0
    for i, sample in enumerate(payload["samples"]):
        try:
            length = int(sample["length"])
            attacks = [(int(a), int(b)) for a, b in sample.get("attacks", [])]
            detections = [int(d) for d in sample.get("detections", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad scoring-input sample #{i}: {exc}") from exc
        runs.append((detections, build_windows(attacks, length), offset, length))
        offset += length
    detections, windows = concat_samples(runs)
    return score_run(sorted(detections), windows, profile)


def load_scoring_input(path: str | Path) -> dict:
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return payload

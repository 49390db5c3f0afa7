"""Shared fixtures: a small two-mode corpus for pipeline and CLI tests."""

from __future__ import annotations

import pytest

from plantwatch import generate_corpus


def tiny_plan(seed: int = 5, sample_rate: int = 60) -> dict:
    """A corpus small enough to train on in seconds: 2 modes, 3 test samples."""
    return {
        "schema_version": 1,
        "seed": seed,
        "sample_rate": sample_rate,
        "train": [
            {"mode": 0, "kind": "normal", "hours": 2.0},
            {"mode": 1, "kind": "normal", "hours": 2.0},
            {"mode": 0, "kind": "transient", "variant": "product_rate",
             "hours": 1.0, "step_h": 0.25},
            {"mode": 1, "kind": "transient", "variant": "catalyst_purge",
             "hours": 1.0, "step_h": 0.25},
        ],
        "test": [
            {"mode": 0, "kind": "normal", "hours": 1.0, "series": "integrity_meas",
             "attacks": [{
                 "kind": "integrity", "targets": ["reactor temperature"],
                 "start_h": 0.4, "end_h": 0.6, "payload_sigma": 6.0,
             }]},
            {"mode": 1, "kind": "normal", "hours": 1.0, "series": "dos_mv",
             "attacks": [{
                 "kind": "dos", "targets": ["d feed flow"],
                 "start_h": 0.3, "end_h": 0.7,
             }]},
            {"mode": 0, "kind": "normal", "hours": 1.0},
        ],
    }


@pytest.fixture(scope="session")
def tiny_corpus_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("tiny_corpus")
    generate_corpus(tiny_plan(), root)
    return root

"""RMSProp and gradient-clipping oracles.

The optimizer is checked against a hand-rolled scalar recursion of the same
update rule, plus a closed-form first step: with a fresh cache the update is
lr * g / (sqrt((1-decay)) * |g| + eps), so its magnitude is lr/sqrt(1-decay)
almost independently of g.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from plantwatch.optim import RmsProp, clip_gradients


def test_first_step_matches_closed_form():
    # lr=0.01, decay=0.9, g=3: cache = 0.1*9, step = 0.01*3/(sqrt(0.9)+1e-8)
    opt = RmsProp(learning_rate=0.01, decay=0.9, epsilon=1e-8)
    params = {"p": np.array([1.0])}
    opt.step(params, {"p": np.array([3.0])})
    expected = 1.0 - 0.01 * 3.0 / (math.sqrt(0.1 * 9.0) + 1e-8)
    assert params["p"][0] == pytest.approx(expected, abs=1e-15)
    assert params["p"][0] == pytest.approx(1.0 - 0.031622776268350465, abs=1e-12)


def test_first_step_magnitude_is_lr_over_sqrt_one_minus_decay():
    for g in (0.01, 1.0, 250.0):
        opt = RmsProp(learning_rate=0.02, decay=0.9, epsilon=1e-12)
        params = {"p": np.array([0.0])}
        opt.step(params, {"p": np.array([g])})
        assert abs(params["p"][0]) == pytest.approx(0.02 / math.sqrt(0.1), rel=1e-6)


def test_multi_step_matches_scalar_recursion():
    rng = np.random.default_rng(4)
    lr, decay, eps = 0.005, 0.85, 1e-8
    opt = RmsProp(learning_rate=lr, decay=decay, epsilon=eps)
    params = {"a": rng.normal(size=(3, 2)), "b": rng.normal(size=4)}
    shadow = {k: v.copy() for k, v in params.items()}
    cache = {k: np.zeros_like(v) for k, v in params.items()}
    for _ in range(25):
        grads = {k: rng.normal(size=v.shape) for k, v in params.items()}
        opt.step(params, grads)
        for k in shadow:
            cache[k] = decay * cache[k] + (1.0 - decay) * grads[k] ** 2
            shadow[k] = shadow[k] - lr * grads[k] / (np.sqrt(cache[k]) + eps)
    for k in shadow:
        assert np.allclose(params[k], shadow[k], atol=1e-14, rtol=0)


def test_step_updates_in_place():
    opt = RmsProp()
    arr = np.ones(3)
    params = {"p": arr}
    opt.step(params, {"p": np.ones(3)})
    assert params["p"] is arr
    assert not np.array_equal(arr, np.ones(3))


def test_constructor_validation():
    with pytest.raises(ValueError):
        RmsProp(decay=1.0)
    with pytest.raises(ValueError):
        RmsProp(decay=-0.1)
    with pytest.raises(ValueError):
        RmsProp(learning_rate=0.0)
    with pytest.raises(ValueError):
        RmsProp(epsilon=0.0)


def test_clip_scales_to_max_norm_and_reports_preclip():
    grads = {"a": np.array([3.0, 0.0]), "b": np.array([[0.0, 4.0]])}
    norm = clip_gradients(grads, 2.5)
    assert norm == pytest.approx(5.0, abs=1e-12)
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    assert total == pytest.approx(2.5, abs=1e-12)
    # direction preserved: both components scaled by the same factor
    assert grads["a"][0] == pytest.approx(1.5, abs=1e-12)
    assert grads["b"][0, 1] == pytest.approx(2.0, abs=1e-12)


def test_clip_leaves_small_gradients_alone():
    grads = {"a": np.array([0.3, 0.4])}
    norm = clip_gradients(grads, 2.0)
    assert norm == pytest.approx(0.5, abs=1e-12)
    assert np.array_equal(grads["a"], np.array([0.3, 0.4]))


def test_clip_zero_max_norm_disables_clipping():
    grads = {"a": np.array([30.0, 40.0])}
    norm = clip_gradients(grads, 0.0)
    assert norm == pytest.approx(50.0, abs=1e-9)
    assert np.array_equal(grads["a"], np.array([30.0, 40.0]))

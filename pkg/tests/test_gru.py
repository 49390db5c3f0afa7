"""GRU stack oracles.

The forward pass is checked against a scalar-loop reference written with
plain Python floats and math.exp/math.tanh, so agreement is not an artifact
of sharing numpy code paths. Gradients are checked against central finite
differences on every parameter entry.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from plantwatch.errors import DimensionMismatch
from plantwatch.gru import (
    GruStack,
    forward_stack,
    init_gru_stack,
    loss_and_grads,
    mse_loss,
    sigmoid,
)


# ---------------------------------------------------------------------------
# scalar-loop reference implementation (the oracle)
# ---------------------------------------------------------------------------

def _sig(v: float) -> float:
    if v >= 0.0:
        return 1.0 / (1.0 + math.exp(-v))
    e = math.exp(v)
    return e / (1.0 + e)


def reference_forward(stack: GruStack, window: np.ndarray) -> np.ndarray:
    """Forward pass as explicit per-timestep, per-unit scalar loops."""
    seq = [[float(v) for v in row] for row in window]
    for layer in stack.layers:
        H = layer.hidden_size
        D = layer.input_size
        h = [0.0] * H
        out_seq = []
        for xt in seq:
            z, r = [], []
            for i in range(H):
                az = sum(float(layer.W_z[i, j]) * xt[j] for j in range(D))
                az += sum(float(layer.U_z[i, j]) * h[j] for j in range(H))
                z.append(_sig(az + float(layer.b_z[i])))
                ar = sum(float(layer.W_r[i, j]) * xt[j] for j in range(D))
                ar += sum(float(layer.U_r[i, j]) * h[j] for j in range(H))
                r.append(_sig(ar + float(layer.b_r[i])))
            c = []
            for i in range(H):
                uh = sum(float(layer.U_h[i, j]) * h[j] for j in range(H))
                ac = sum(float(layer.W_h[i, j]) * xt[j] for j in range(D))
                c.append(math.tanh(ac + r[i] * uh + float(layer.b_h[i])))
            h = [z[i] * h[i] + (1.0 - z[i]) * c[i] for i in range(H)]
            out_seq.append([max(v, 0.0) for v in h])
        seq = out_seq
    D_out, H = stack.output.W.shape
    y = []
    for ht in seq:
        y.append([
            sum(float(stack.output.W[i, j]) * ht[j] for j in range(H))
            + float(stack.output.b[i])
            for i in range(D_out)
        ])
    return np.array(y)


def _nudge_biases(stack: GruStack, rng: np.random.Generator) -> None:
    # init leaves biases at zero; move them so the reference exercises
    # every term and finite differences stay clear of the ReLU kink
    for name, arr in stack.parameters().items():
        if name.endswith(("b_z", "b_r", "b_h", ".b")):
            arr += rng.uniform(-0.3, 0.3, size=arr.shape)


def finite_difference_grads(stack: GruStack, x, target, eps: float = 1e-5):
    out = {}
    for name, arr in stack.parameters().items():
        g = np.zeros_like(arr)
        flat, gf = arr.ravel(), g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            lp, _ = loss_and_grads(stack, x, target)
            flat[i] = orig - eps
            lm, _ = loss_and_grads(stack, x, target)
            flat[i] = orig
            gf[i] = (lp - lm) / (2.0 * eps)
        out[name] = g
    return out


# ---------------------------------------------------------------------------
# forward oracle
# ---------------------------------------------------------------------------

def test_forward_matches_scalar_reference():
    for seed in range(10):
        rng = np.random.default_rng((seed, 77))
        stack = init_gru_stack(3, 4, 1 + seed % 3, seed)
        _nudge_biases(stack, rng)
        x = rng.normal(size=(6, 3))
        got = forward_stack(stack, x)
        ref = reference_forward(stack, x)
        assert np.max(np.abs(got - ref)) < 1e-12


def test_forward_batch_matches_per_window():
    rng = np.random.default_rng(42)
    stack = init_gru_stack(3, 5, 2, 42)
    _nudge_biases(stack, rng)
    xb = rng.normal(size=(4, 7, 3))
    yb = forward_stack(stack, xb)
    assert yb.shape == (4, 7, 3)
    for b in range(4):
        single = forward_stack(stack, xb[b])
        # BLAS may round batched and single matmuls differently
        assert np.max(np.abs(yb[b] - single)) < 1e-12


def test_forward_is_stateless_across_calls():
    rng = np.random.default_rng(8)
    stack = init_gru_stack(2, 3, 1, 8)
    x = rng.normal(size=(5, 2))
    first = forward_stack(stack, x)
    forward_stack(stack, rng.normal(size=(5, 2)))  # unrelated window between
    again = forward_stack(stack, x)
    assert np.array_equal(first, again)


def test_forward_rejects_wrong_width():
    stack = init_gru_stack(3, 4, 1, 0)
    with pytest.raises(DimensionMismatch):
        forward_stack(stack, np.zeros((5, 2)))
    with pytest.raises(DimensionMismatch):
        forward_stack(stack, np.zeros(5))


# ---------------------------------------------------------------------------
# gradient oracle
# ---------------------------------------------------------------------------

def test_gradients_match_central_finite_differences():
    t0 = time.time()
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng((seed, 99))
        stack = init_gru_stack(3, 4, 1 + seed % 2, seed)
        _nudge_biases(stack, rng)
        x = rng.normal(size=(2, 5, 3))
        target = rng.normal(size=(2, 5, 3))
        _, analytic = loss_and_grads(stack, x, target)
        fd = finite_difference_grads(stack, x, target, eps=1e-5)
        for name in analytic:
            rel = np.abs(analytic[name] - fd[name]) / np.maximum(np.abs(fd[name]), 1e-4)
            worst = max(worst, float(rel.max()))
    assert worst < 1e-4, f"max relative gradient error {worst:.3e}"
    assert time.time() - t0 < 60.0


def test_gradient_keys_cover_every_parameter():
    stack = init_gru_stack(3, 4, 2, 1)
    rng = np.random.default_rng(1)
    _, grads = loss_and_grads(stack, rng.normal(size=(5, 3)), rng.normal(size=(5, 3)))
    params = stack.parameters()
    assert list(grads) == list(params)
    for name in params:
        assert grads[name].shape == params[name].shape


# ---------------------------------------------------------------------------
# initialization and primitives
# ---------------------------------------------------------------------------

def test_init_is_deterministic_and_glorot_bounded():
    a = init_gru_stack(6, 8, 2, seed=123)
    b = init_gru_stack(6, 8, 2, seed=123)
    for name, arr in a.parameters().items():
        assert np.array_equal(arr, b.parameters()[name])
    c = init_gru_stack(6, 8, 2, seed=124)
    assert not np.array_equal(a.layers[0].W_z, c.layers[0].W_z)
    for layer in a.layers:
        for mat in (layer.W_z, layer.W_r, layer.W_h):
            bound = math.sqrt(6.0 / sum(mat.shape))
            assert np.max(np.abs(mat)) <= bound
        for vec in (layer.b_z, layer.b_r, layer.b_h):
            assert np.array_equal(vec, np.zeros_like(vec))
    assert np.array_equal(a.output.b, np.zeros_like(a.output.b))


def test_stack_shapes_and_optional_output_size():
    stack = init_gru_stack(5, 7, 3, seed=2, d_out=4)
    assert stack.input_size == 5
    assert stack.hidden_size == 7
    assert stack.output_size == 4
    assert stack.layers[0].W_z.shape == (7, 5)
    assert stack.layers[1].W_z.shape == (7, 7)  # deeper layers consume hidden
    assert stack.output.W.shape == (4, 7)


def test_sigmoid_matches_scalar_and_survives_extremes():
    x = np.array([-750.0, -30.0, -1.0, 0.0, 1.0, 30.0, 750.0])
    got = sigmoid(x)
    assert np.all(np.isfinite(got))
    for v, g in zip(x[1:-1], got[1:-1]):
        assert abs(g - _sig(float(v))) < 1e-15
    assert got[0] == 0.0 or got[0] < 1e-300
    assert got[-1] == 1.0


def test_mse_loss_is_element_mean():
    pred = np.array([[1.0, 2.0], [3.0, 4.0]])
    target = np.array([[0.0, 2.0], [3.0, 2.0]])
    # squared diffs 1, 0, 0, 4 over 4 elements
    assert mse_loss(pred, target) == pytest.approx(1.25, abs=0)
    with pytest.raises(DimensionMismatch):
        mse_loss(pred, target[:1])


def test_loss_decreases_along_negative_gradient():
    rng = np.random.default_rng(3)
    stack = init_gru_stack(3, 4, 1, 3)
    _nudge_biases(stack, rng)
    x = rng.normal(size=(4, 5, 3))
    t = rng.normal(size=(4, 5, 3))
    loss0, grads = loss_and_grads(stack, x, t)
    for name, arr in stack.parameters().items():
        arr -= 1e-3 * grads[name]
    loss1, _ = loss_and_grads(stack, x, t)
    assert loss1 < loss0

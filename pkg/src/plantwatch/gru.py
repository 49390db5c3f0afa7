"""Stacked GRU forward and backward passes written directly on numpy arrays.

Per layer, with the hidden state reset to zero for every window (stateless):

    z[t] = sigmoid(x[t] Wz^T + h[t-1] Uz^T + bz)
    r[t] = sigmoid(x[t] Wr^T + h[t-1] Ur^T + br)
    c[t] = tanh(x[t] Wh^T + r[t] * (h[t-1] Uh^T) + bh)
    h[t] = z[t] * h[t-1] + (1 - z[t]) * c[t]

Each layer's hidden sequence passes through ReLU before feeding the next
layer, and the last layer's rectified sequence feeds a linear output map.
Gradients come from full backpropagation through time; everything is float64
so they can be checked against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch


def sigmoid(x: np.ndarray) -> np.ndarray:
    # numerically symmetric form, avoids overflow in exp for large |x|
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class GruLayerParams:
    """Weights of one GRU layer: W_* (H, D_in), U_* (H, H), b_* (H,)."""

    W_z: np.ndarray
    W_r: np.ndarray
    W_h: np.ndarray
    U_z: np.ndarray
    U_r: np.ndarray
    U_h: np.ndarray
    b_z: np.ndarray
    b_r: np.ndarray
    b_h: np.ndarray

    @property
    def hidden_size(self) -> int:
        return self.W_z.shape[0]

    @property
    def input_size(self) -> int:
        return self.W_z.shape[1]


@dataclass
class OutputParams:
    """Final linear map back to channel space: W (D_out, H), b (D_out,)."""

    W: np.ndarray
    b: np.ndarray


@dataclass
class GruStack:
    """A fixed stack of GRU layers plus the linear output map."""

    layers: list[GruLayerParams]
    output: OutputParams

    @property
    def input_size(self) -> int:
        return self.layers[0].input_size

    @property
    def hidden_size(self) -> int:
        return self.layers[0].hidden_size

    @property
    def output_size(self) -> int:
        return self.output.W.shape[0]

    def parameters(self) -> dict[str, np.ndarray]:
        """Name -> array views in a fixed order (shared with grads/optimizer)."""
        out: dict[str, np.ndarray] = {}
        for i, layer in enumerate(self.layers):
            for gate in ("z", "r", "h"):
                out[f"layers.{i}.W_{gate}"] = getattr(layer, f"W_{gate}")
                out[f"layers.{i}.U_{gate}"] = getattr(layer, f"U_{gate}")
                out[f"layers.{i}.b_{gate}"] = getattr(layer, f"b_{gate}")
        out["output.W"] = self.output.W
        out["output.b"] = self.output.b
        return out


def _glorot(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    # uniform Glorot: +-sqrt(6 / (fan_in + fan_out)) with fan_in=cols, fan_out=rows
    s = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-s, s, size=(rows, cols))


def init_gru_stack(
    d_in: int, hidden_size: int, n_layers: int, seed: int, d_out: int | None = None
) -> GruStack:
    """Deterministic initialization: Glorot-uniform matrices, zero biases.

    Draw order is fixed (per layer: W then U for z, r, h; finally the output
    map) so the same seed always yields bit-identical parameters.
    """
    if d_out is None:
        d_out = d_in
    rng = np.random.default_rng(seed)
    layers = []
    size_in = d_in
    for _ in range(n_layers):
        kw = {}
        for gate in ("z", "r", "h"):
            kw[f"W_{gate}"] = _glorot(rng, hidden_size, size_in)
            kw[f"U_{gate}"] = _glorot(rng, hidden_size, hidden_size)
            kw[f"b_{gate}"] = np.zeros(hidden_size)
        layers.append(GruLayerParams(**kw))
        size_in = hidden_size
    output = OutputParams(W=_glorot(rng, d_out, hidden_size), b=np.zeros(d_out))
    return GruStack(layers=layers, output=output)


def forward_stack(
    stack: GruStack, x: np.ndarray, return_cache: bool = False
):
    """Run the stack over a window or a batch of windows.

    Args:
        x: (w, D_in) single window or (B, w, D_in) batch.
        return_cache: also return the intermediate activations needed by
            ``backward_stack``.

    Returns:
        Predictions with the same leading shape as ``x`` and D_out channels,
        optionally followed by the cache.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 2
    if single:
        x = x[None]
    if x.ndim != 3:
        raise DimensionMismatch(f"expected (w, D) or (B, w, D) input, got {x.shape}")
    if x.shape[2] != stack.input_size:
        raise DimensionMismatch(
            f"stack expects {stack.input_size} input channels, got {x.shape[2]}"
        )
    B, w, _ = x.shape
    caches = []
    inp = x
    for layer in stack.layers:
        H = layer.hidden_size
        h_seq = np.zeros((B, w + 1, H))
        z_seq = np.empty((B, w, H))
        r_seq = np.empty((B, w, H))
        c_seq = np.empty((B, w, H))
        uh_seq = np.empty((B, w, H))
        for t in range(w):
            hp = h_seq[:, t]
            xt = inp[:, t]
            z = sigmoid(xt @ layer.W_z.T + hp @ layer.U_z.T + layer.b_z)
            r = sigmoid(xt @ layer.W_r.T + hp @ layer.U_r.T + layer.b_r)
            uh = hp @ layer.U_h.T
            c = np.tanh(xt @ layer.W_h.T + r * uh + layer.b_h)
            h_seq[:, t + 1] = z * hp + (1.0 - z) * c
            z_seq[:, t] = z
            r_seq[:, t] = r
            c_seq[:, t] = c
            uh_seq[:, t] = uh
        act = np.maximum(h_seq[:, 1:], 0.0)  # ReLU before the next stage
        caches.append(
            {"x": inp, "h": h_seq, "z": z_seq, "r": r_seq, "c": c_seq, "uh": uh_seq, "act": act}
        )
        inp = act
    y = inp @ stack.output.W.T + stack.output.b
    if single:
        y_out = y[0]
    else:
        y_out = y
    if not return_cache:
        return y_out
    return y_out, {"layers": caches, "top_act": inp, "y": y}


def mse_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean squared error over every element of the window(s)."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise DimensionMismatch(f"pred {pred.shape} vs target {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff))


def backward_stack(
    stack: GruStack, cache: dict, d_y: np.ndarray
) -> dict[str, np.ndarray]:
    """Backpropagate d(loss)/d(y) through the output map and every layer.

    Returns gradients keyed exactly like ``GruStack.parameters()``.
    """
    d_y = np.asarray(d_y, dtype=np.float64)
    if d_y.ndim == 2:
        d_y = d_y[None]
    top = cache["top_act"]
    grads: dict[str, np.ndarray] = {}
    grads["output.W"] = np.einsum("btd,bth->dh", d_y, top)
    grads["output.b"] = d_y.sum(axis=(0, 1))
    d_act = d_y @ stack.output.W  # gradient wrt the top layer's ReLU output

    for li in range(len(stack.layers) - 1, -1, -1):
        layer = stack.layers[li]
        lc = cache["layers"][li]
        x, h, z, r, c, uh = lc["x"], lc["h"], lc["z"], lc["r"], lc["c"], lc["uh"]
        B, w, _ = x.shape
        # ReLU mask on this layer's raw hidden sequence
        d_h_step = d_act * (h[:, 1:] > 0)
        gWz = np.zeros_like(layer.W_z)
        gWr = np.zeros_like(layer.W_r)
        gWh = np.zeros_like(layer.W_h)
        gUz = np.zeros_like(layer.U_z)
        gUr = np.zeros_like(layer.U_r)
        gUh = np.zeros_like(layer.U_h)
        gbz = np.zeros_like(layer.b_z)
        gbr = np.zeros_like(layer.b_r)
        gbh = np.zeros_like(layer.b_h)
        d_x = np.empty_like(x)
        carry = np.zeros((B, layer.hidden_size))
        for t in range(w - 1, -1, -1):
            dh = d_h_step[:, t] + carry
            hp = h[:, t]
            zt, rt, ct, uht = z[:, t], r[:, t], c[:, t], uh[:, t]
            dz = dh * (hp - ct)
            dc = dh * (1.0 - zt)
            dac = dc * (1.0 - ct * ct)
            dr = dac * uht
            daz = dz * zt * (1.0 - zt)
            dar = dr * rt * (1.0 - rt)
            xt = x[:, t]
            gWh += dac.T @ xt
            gUh += (dac * rt).T @ hp
            gbh += dac.sum(axis=0)
            gWz += daz.T @ xt
            gUz += daz.T @ hp
            gbz += daz.sum(axis=0)
            gWr += dar.T @ xt
            gUr += dar.T @ hp
            gbr += dar.sum(axis=0)
            d_x[:, t] = daz @ layer.W_z + dar @ layer.W_r + dac @ layer.W_h
            carry = dh * zt + daz @ layer.U_z + dar @ layer.U_r + (dac * rt) @ layer.U_h
        grads[f"layers.{li}.W_z"] = gWz
        grads[f"layers.{li}.U_z"] = gUz
        grads[f"layers.{li}.b_z"] = gbz
        grads[f"layers.{li}.W_r"] = gWr
        grads[f"layers.{li}.U_r"] = gUr
        grads[f"layers.{li}.b_r"] = gbr
        grads[f"layers.{li}.W_h"] = gWh
        grads[f"layers.{li}.U_h"] = gUh
        grads[f"layers.{li}.b_h"] = gbh
        d_act = d_x
    return {name: grads[name] for name in stack.parameters()}


def loss_and_grads(
    stack: GruStack, x: np.ndarray, target: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """MSE loss over a batch plus gradients wrt every parameter."""
    x = np.asarray(x, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
        target = target[None]
    y, cache = forward_stack(stack, x, return_cache=True)
    if y.shape != target.shape:
        raise DimensionMismatch(f"pred {y.shape} vs target {target.shape}")
    diff = y - target
    loss = float(np.mean(diff * diff))
    d_y = (2.0 / diff.size) * diff
    return loss, backward_stack(stack, cache, d_y)

"""RMSProp parameter updates and global-norm gradient clipping."""

from __future__ import annotations

import math

import numpy as np


class RmsProp:
    """Keeps a running mean of squared gradients per parameter.

    Update per step, applied in place:

        cache <- decay * cache + (1 - decay) * g^2
        p     <- p - lr * g / (sqrt(cache) + epsilon)
    """

    def __init__(self, learning_rate: float = 0.001, decay: float = 0.9,
                 epsilon: float = 1e-8):
        if not 0.0 <= decay < 1.0:
            raise ValueError(f"decay must be in [0, 1), got {decay}")
        if learning_rate <= 0.0:
            raise ValueError(f"learning_rate must be positive, got {learning_rate}")
        if epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {epsilon}")
        self.learning_rate = learning_rate
        self.decay = decay
        self.epsilon = epsilon
        self.cache: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        for name, p in params.items():
            g = grads[name]
            cache = self.cache.get(name)
            if cache is None:
                cache = np.zeros_like(p)
                self.cache[name] = cache
            cache *= self.decay
            cache += (1.0 - self.decay) * g * g
            p -= self.learning_rate * g / (np.sqrt(cache) + self.epsilon)


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients in place so their global L2 norm is <= max_norm.

    Returns the pre-clip global norm.
    """
    total = 0.0
    for g in grads.values():
        total += float(np.sum(g * g))
    norm = math.sqrt(total)
    if max_norm > 0.0 and norm > max_norm:
        factor = max_norm / norm
        for g in grads.values():
            g *= factor
    return norm

"""Fully-connected networks with hand-written backpropagation, plus Adam."""
from __future__ import annotations

import numpy as np


class Mlp:
    """tanh hidden layers, linear or tanh output.

    ``params`` is a flat list ``[W0, b0, W1, b1, ...]`` with ``W`` shaped
    ``(fan_in, fan_out)``; batches are row-major ``(batch, features)``.
    """

    def __init__(self, sizes, output_activation: str = "linear", rng=None, dtype=np.float32):
        if output_activation not in ("linear", "tanh"):
            raise ValueError(f"unknown output activation {output_activation!r}")
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        self.sizes = tuple(int(s) for s in sizes)
        self.output_activation = output_activation
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng() if rng is None else rng
        self.params = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.params.append(rng.uniform(-bound, bound, (fan_in, fan_out)).astype(self.dtype))
            self.params.append(rng.uniform(-bound, bound, fan_out).astype(self.dtype))

    @property
    def n_layers(self) -> int:
        return len(self.params) // 2

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params)

    def forward(self, x: np.ndarray, keep: bool = False):
        h = np.asarray(x, dtype=self.dtype)
        acts = [h]
        last = self.n_layers - 1
        for i in range(self.n_layers):
            z = h @ self.params[2 * i] + self.params[2 * i + 1]
            h = np.tanh(z) if (i < last or self.output_activation == "tanh") else z
            acts.append(h)
        return (h, acts) if keep else h

    __call__ = forward

    def backward(self, acts, grad_out: np.ndarray):
        """Gradients of a scalar loss given ``dL/d output``; returns ``(param_grads, dL/d input)``."""
        grads = [None] * len(self.params)
        g = np.asarray(grad_out, dtype=self.dtype)
        last = self.n_layers - 1
        for i in range(last, -1, -1):
            out = acts[i + 1]
            if i < last or self.output_activation == "tanh":
                g = g * (1.0 - out * out)
            grads[2 * i] = acts[i].T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.params[2 * i].T
        return grads, g

    def copy(self) -> "Mlp":
        clone = Mlp.__new__(Mlp)
        clone.sizes = self.sizes
        clone.output_activation = self.output_activation
        clone.dtype = self.dtype
        clone.params = [p.copy() for p in self.params]
        return clone


def soft_update(target: Mlp, source: Mlp, tau: float) -> None:
    """Polyak averaging ``target <- tau * source + (1 - tau) * target`` in place."""
    if target.sizes != source.sizes:
        raise ValueError(f"architecture mismatch {target.sizes} vs {source.sizes}")
    for t, s in zip(target.params, source.params):
        if t.shape != s.shape:
            raise ValueError("parameter shape mismatch")
        t *= (1.0 - tau)
        t += tau * s


class Adam:
    def __init__(self, params, lr: float, betas=(0.9, 0.999), eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= (self.lr / c1) * m / (np.sqrt(v / c2) + self.eps)

"""Fully connected networks with explicit forward and backward passes.

Inputs are batched row-wise: ``x`` has shape ``(batch, n_in)``. Hidden
layers use ReLU; the output layer is ``tanh`` (actor) or linear (critic).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("tanh", "identity")


@dataclass
class ForwardCache:
    inputs: list
    pre: list
    output: np.ndarray


class Mlp:
    def __init__(self, sizes, output: str = "identity", rng: np.random.Generator | None = None, final_scale: float = 3e-3):
        if output not in ACTIVATIONS:
            raise ValueError(f"output activation must be one of {ACTIVATIONS}")
        if len(sizes) < 2:
            raise ValueError("an Mlp needs at least an input and an output size")
        self.sizes = tuple(int(s) for s in sizes)
        self.output = output
        rng = rng if rng is not None else np.random.default_rng()
        self.weights, self.biases = [], []
        n_layers = len(self.sizes) - 1
        for k, (n_in, n_out) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            # fan-in uniform for hidden layers, small uniform for the head
            bound = final_scale if k == n_layers - 1 else 1.0 / np.sqrt(n_in)
            self.weights.append(rng.uniform(-bound, bound, (n_in, n_out)))
            self.biases.append(rng.uniform(-bound, bound, n_out))

    @property
    def params(self) -> list:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def set_params(self, params) -> None:
        params = list(params)
        if len(params) != 2 * len(self.weights):
            raise ValueError("parameter count does not match the layer layout")
        for k in range(len(self.weights)):
            W, b = np.asarray(params[2 * k], dtype=float), np.asarray(params[2 * k + 1], dtype=float)
            if W.shape != self.weights[k].shape or b.shape != self.biases[k].shape:
                raise ValueError(f"layer {k}: shape mismatch")
            self.weights[k] = W.copy()
            self.biases[k] = b.copy()

    def copy(self) -> "Mlp":
        twin = Mlp.__new__(Mlp)
        twin.sizes, twin.output = self.sizes, self.output
        twin.weights = [W.copy() for W in self.weights]
        twin.biases = [b.copy() for b in self.biases]
        return twin

    def forward(self, x) -> tuple[np.ndarray, ForwardCache]:
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[1] != self.sizes[0]:
            raise ValueError(f"input width {x.shape[1]} != {self.sizes[0]}")
        inputs, pre = [], []
        h = x
        last = len(self.weights) - 1
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            inputs.append(h)
            z = h @ W + b
            pre.append(z)
            if k < last:
                h = np.maximum(z, 0.0)
            else:
                h = np.tanh(z) if self.output == "tanh" else z
        out = h[0] if squeeze else h
        return out, ForwardCache(inputs, pre, h)

    def __call__(self, x) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache: ForwardCache | None, grad_out):
        """Gradients of a scalar loss given ``dloss/doutput``.

        Returns ``(param_grads, grad_input)`` with ``param_grads`` ordered as
        :attr:`params`.
        """
        if cache is None:
            raise ValueError("backward needs the cache from a forward pass")
        g = np.asarray(grad_out, dtype=float).reshape(cache.output.shape)
        if self.output == "tanh":
            g = g * (1.0 - cache.output**2)
        grads = [None] * (2 * len(self.weights))
        for k in range(len(self.weights) - 1, -1, -1):
            if k < len(self.weights) - 1:
                g = g * (cache.pre[k] > 0)
            grads[2 * k] = cache.inputs[k].T @ g
            grads[2 * k + 1] = g.sum(axis=0)
            g = g @ self.weights[k].T
        return grads, g

    def soft_update(self, source: "Mlp", tau: float) -> None:
        """Move parameters a fraction ``tau`` of the way towards ``source``."""
        for mine, theirs in zip(self.params, source.params):
            mine *= 1.0 - tau
            mine += tau * theirs

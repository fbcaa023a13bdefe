"""Layers with hand-written backward passes.

Each layer's ``forward`` returns its output and a cache; ``backward`` takes the
cache and the output cotangent and returns the input cotangent plus the weight
and bias gradients.
"""
from dataclasses import dataclass
from typing import Literal, Tuple

import numpy as np

Activation = Literal["tanh", "linear"]


def _activate(pre: np.ndarray, activation: Activation) -> np.ndarray:
    return np.tanh(pre) if activation == "tanh" else pre


def _activation_backward(out: np.ndarray, dout: np.ndarray, activation: Activation) -> np.ndarray:
    return dout * (1.0 - out ** 2) if activation == "tanh" else dout


@dataclass(frozen=True)
class Dense:
    """``act(x @ W + b)`` over the last axis."""

    weight: str
    bias: str
    activation: Activation = "tanh"

    def forward(self, weights, x: np.ndarray) -> Tuple[np.ndarray, tuple]:
        out = _activate(x @ weights[self.weight] + weights[self.bias], self.activation)
        return out, (x, out)

    def backward(self, weights, cache, dout: np.ndarray):
        x, out = cache
        dpre = _activation_backward(out, dout, self.activation)
        lead = tuple(range(x.ndim - 1))
        dW = np.tensordot(x, dpre, axes=(lead, lead))
        db = dpre.sum(axis=lead)
        dx = dpre @ weights[self.weight].T
        return dx, dW, db


@dataclass(frozen=True)
class Conv1dLayer:
    """Same-padded 1-D cross-correlation over ``[batch, in_channels, length]``.

    ``out[b, o, n] = sum_{i, j} W[o, i, j] * x[b, i, n + j - (k - 1) // 2] + bias[o]``
    with zero padding outside the signal.
    """

    weight: str
    bias: str
    activation: Activation = "tanh"

    def forward(self, weights, x: np.ndarray) -> Tuple[np.ndarray, tuple]:
        W = weights[self.weight]
        out_channels, _, kernel = W.shape
        batch, _, length = x.shape
        left = (kernel - 1) // 2
        padded = np.pad(x, ((0, 0), (0, 0), (left, kernel - 1 - left)))
        pre = np.zeros((batch, out_channels, length), dtype=x.dtype)
        for j in range(kernel):
            pre += W[:, :, j] @ padded[:, :, j:j + length]
        pre += weights[self.bias][np.newaxis, :, np.newaxis]
        out = _activate(pre, self.activation)
        return out, (padded, out, length)

    def backward(self, weights, cache, dout: np.ndarray):
        padded, out, length = cache
        W = weights[self.weight]
        kernel = W.shape[2]
        left = (kernel - 1) // 2
        dpre = _activation_backward(out, dout, self.activation)
        dW = np.empty_like(W)
        dpadded = np.zeros_like(padded)
        for j in range(kernel):
            window = padded[:, :, j:j + length]
            dW[:, :, j] = np.tensordot(dpre, window, axes=([0, 2], [0, 2]))
            dpadded[:, :, j:j + length] += W[:, :, j].T @ dpre
        db = dpre.sum(axis=(0, 2))
        dx = dpadded[:, :, left:left + length]
        return dx, dW, db

"""Time-domain convolutional separator: three same-padded 1-D conv layers.

Audio channels are processed independently, as a batch of mono signals.
"""
from typing import Dict, Optional, Tuple

import numpy as np

from errors import ParameterError
from models.base import SeparationModel, WeightShapes
from models.layers import Conv1dLayer

CONV_CHANNELS = 16
KERNEL_SIZE = 15


class ConvTimeModel(SeparationModel):
    architecture = "conv_time"

    layers = (
        Conv1dLayer("conv1.weight", "conv1.bias", "tanh"),
        Conv1dLayer("conv2.weight", "conv2.bias", "tanh"),
        Conv1dLayer("conv3.weight", "conv3.bias", "linear"),
    )

    def __init__(self, weights, num_sources, source_names=None, stft_cfg=None, sample_rate=8000, seed=None, dtype=None):
        # no analysis stage
        super().__init__(weights, num_sources, source_names, None, sample_rate, seed, dtype)

    @classmethod
    def weight_shapes(cls, num_sources: int, stft_cfg=None) -> WeightShapes:
        return {
            "conv1.weight": (CONV_CHANNELS, 1, KERNEL_SIZE),
            "conv1.bias": (CONV_CHANNELS,),
            "conv2.weight": (CONV_CHANNELS, CONV_CHANNELS, KERNEL_SIZE),
            "conv2.bias": (CONV_CHANNELS,),
            "conv3.weight": (num_sources, CONV_CHANNELS, KERNEL_SIZE),
            "conv3.bias": (num_sources,),
        }

    @classmethod
    def fan_in(cls, name: str, shape: Tuple[int, ...]) -> int:
        layer = name.split(".")[0]
        in_channels = 1 if layer == "conv1" else CONV_CHANNELS
        return in_channels * KERNEL_SIZE

    def _forward(self, x: np.ndarray):
        weights = self._working_weights()
        activation = x[:, np.newaxis, :]
        caches = []
        for layer in self.layers:
            activation, cache = layer.forward(weights, activation)
            caches.append(cache)
        # [channels, sources, samples] -> [sources, channels, samples]
        return activation.transpose(1, 0, 2), caches

    def _backward(self, caches, cotangent: np.ndarray, with_weights: bool):
        if cotangent.shape[0] != self.num_sources:
            raise ParameterError(f"Cotangent has {cotangent.shape[0]} sources, model has {self.num_sources}")
        weights = self._working_weights()
        grad = cotangent.transpose(1, 0, 2)
        weight_grads: Dict[str, np.ndarray] = {}
        for layer, cache in zip(reversed(self.layers), reversed(caches)):
            grad, dW, db = layer.backward(weights, cache, grad)
            weight_grads[layer.weight] = dW
            weight_grads[layer.bias] = db
        return grad[:, 0, :], (weight_grads if with_weights else None)

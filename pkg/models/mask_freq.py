"""Frequency-domain mask separator.

Per STFT frame, a two-layer dense network maps log-magnitudes to one sigmoid
mask per source; each mask multiplies the complex mixture STFT and the result
is inverted with the ISTFT.
"""
from typing import Dict, Optional, Tuple

import numpy as np

from dsp.stft import StftConfig, istft_adjoint_array, istft_array, stft_adjoint_array, stft_array
from errors import ParameterError
from models.base import SeparationModel, WeightShapes
from models.layers import Dense

HIDDEN_UNITS = 64
# keeps the magnitude differentiable at exact zeros
MAGNITUDE_EPS = 1e-12


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class MaskFreqModel(SeparationModel):
    architecture = "mask_freq"

    hidden = Dense("dense1.weight", "dense1.bias", "tanh")
    logits = Dense("dense2.weight", "dense2.bias", "linear")

    def __init__(self, weights, num_sources, source_names=None, stft_cfg=None, sample_rate=8000, seed=None, dtype=None):
        super().__init__(weights, num_sources, source_names, stft_cfg or StftConfig(), sample_rate, seed, dtype)

    @classmethod
    def weight_shapes(cls, num_sources: int, stft_cfg: Optional[StftConfig]) -> WeightShapes:
        bins = (stft_cfg or StftConfig()).bins
        return {
            "dense1.weight": (bins, HIDDEN_UNITS),
            "dense1.bias": (HIDDEN_UNITS,),
            "dense2.weight": (HIDDEN_UNITS, num_sources * bins),
            "dense2.bias": (num_sources * bins,),
        }

    @classmethod
    def fan_in(cls, name: str, shape: Tuple[int, ...]) -> int:
        if name.startswith("dense1"):
            return shape[0]
        return HIDDEN_UNITS

    def masks(self, x: np.ndarray) -> np.ndarray:
        """Source masks ``[num_sources, channels, frames, bins]`` for ``[channels, samples]`` input."""
        return self._forward(x)[1]["masks"]

    def _forward(self, x: np.ndarray):
        cfg = self.stft_cfg
        weights = self._working_weights()
        channels, length = x.shape
        spec = stft_array(x, cfg)
        magnitude = np.sqrt(spec.real ** 2 + spec.imag ** 2 + MAGNITUDE_EPS)
        features = np.log1p(magnitude)

        h, hidden_cache = self.hidden.forward(weights, features)
        logits, logits_cache = self.logits.forward(weights, h)
        frames, bins = spec.shape[1], spec.shape[2]
        masks = sigmoid(logits.reshape(channels, frames, self.num_sources, bins)).transpose(2, 0, 1, 3)

        separated = masks * spec[np.newaxis]
        outputs = istft_array(separated.reshape(-1, frames, bins), cfg, length)
        outputs = outputs.reshape(self.num_sources, channels, length)
        cache = {
            "spec": spec,
            "magnitude": magnitude,
            "masks": masks,
            "hidden_cache": hidden_cache,
            "logits_cache": logits_cache,
            "length": length,
        }
        return outputs, cache

    def _backward(self, cache, cotangent: np.ndarray, with_weights: bool):
        cfg = self.stft_cfg
        weights = self._working_weights()
        spec, magnitude, masks = cache["spec"], cache["magnitude"], cache["masks"]
        length = cache["length"]
        sources, channels = cotangent.shape[0], cotangent.shape[1]
        if sources != self.num_sources:
            raise ParameterError(f"Cotangent has {sources} sources, model has {self.num_sources}")
        frames, bins = spec.shape[1], spec.shape[2]

        dseparated = istft_adjoint_array(cotangent.reshape(-1, length), cfg)
        dseparated = dseparated.reshape(sources, channels, frames, bins)
        dspec = np.sum(masks * dseparated, axis=0)
        dmasks = (spec.real * dseparated.real + spec.imag * dseparated.imag)

        dlogits = (dmasks * masks * (1.0 - masks)).transpose(1, 2, 0, 3).reshape(channels, frames, sources * bins)
        dh, dW2, db2 = self.logits.backward(weights, cache["logits_cache"], dlogits)
        dfeatures, dW1, db1 = self.hidden.backward(weights, cache["hidden_cache"], dh)

        dmagnitude = dfeatures / (1.0 + magnitude)
        dspec = dspec + dmagnitude * spec / magnitude
        dx = stft_adjoint_array(dspec, cfg, length)

        weight_grads: Optional[Dict[str, np.ndarray]] = None
        if with_weights:
            weight_grads = {
                "dense1.weight": dW1,
                "dense1.bias": db1,
                "dense2.weight": dW2,
                "dense2.bias": db2,
            }
        return dx, weight_grads

"""Separation-model contract shared by the built-in architectures."""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

import settings
from audio_io.clip import AudioClip
from dsp.stft import StftConfig
from errors import NumericError, ParameterError

logger = logging.getLogger(__name__)

WeightShapes = Dict[str, Tuple[int, ...]]


@dataclass(frozen=True)
class GradientRequest:
    """Vector–Jacobian product request.

    ``cotangent`` is either the full ``[num_sources, channels, num_samples]``
    array or, when ``target_source`` is set, the ``[channels, num_samples]``
    cotangent of that single source. With ``target_source`` set, only that
    source's output contributes; with None every source contributes.
    """

    input: AudioClip
    cotangent: np.ndarray
    target_source: Optional[int] = 0


def check_finite(array: np.ndarray, what: str):
    if not np.all(np.isfinite(array)):
        raise NumericError(f"Non-finite values in {what}")


class SeparationModel(ABC):
    """Differentiable map from a mixture clip to one estimate per source.

    Weights are read-only float64 arrays holding float32-representable values,
    so a saved model reloads bit for bit. Models are immutable; use
    :meth:`replace_weights` to obtain an updated copy, which keeps the compute
    dtype resolved when the original was built.
    """

    architecture: str = ""

    def __init__(
        self,
        weights: Dict[str, np.ndarray],
        num_sources: int,
        source_names: Optional[Sequence[str]] = None,
        stft_cfg: Optional[StftConfig] = None,
        sample_rate: int = 8000,
        seed: Optional[int] = None,
        dtype=None,
    ):
        if num_sources < 1:
            raise ParameterError(f"num_sources must be at least 1, got {num_sources}")
        names = list(source_names) if source_names is not None else [f"source{i}" for i in range(num_sources)]
        if len(names) != num_sources:
            raise ParameterError(f"Got {len(names)} source names for {num_sources} sources")
        self.num_sources = num_sources
        self.source_names = tuple(names)
        self.stft_cfg = stft_cfg
        self.sample_rate = int(sample_rate)
        self.seed = seed
        self.dtype = dtype if dtype is not None else settings.compute_dtype()

        expected = self.weight_shapes(num_sources, stft_cfg)
        missing = [name for name in expected if name not in weights]
        extra = [name for name in weights if name not in expected]
        if missing or extra:
            raise ParameterError(f"{self.architecture} weights: missing {missing}, unexpected {extra}")
        stored = {}
        for name, shape in expected.items():
            value = np.asarray(weights[name], dtype=np.float32).astype(np.float64)
            if value.shape != shape:
                raise ParameterError(f"Tensor '{name}' has shape {value.shape}, expected {shape}")
            check_finite(value, f"weight '{name}'")
            value.setflags(write=False)
            stored[name] = value
        self.weights = stored

    @classmethod
    @abstractmethod
    def weight_shapes(cls, num_sources: int, stft_cfg: Optional[StftConfig]) -> WeightShapes:
        """Ordered tensor manifest for this architecture."""

    @classmethod
    @abstractmethod
    def fan_in(cls, name: str, shape: Tuple[int, ...]) -> int:
        """Fan-in used for the uniform initialization bound of a tensor."""

    @abstractmethod
    def _forward(self, x: np.ndarray) -> Tuple[np.ndarray, object]:
        """Return ``[num_sources, channels, num_samples]`` outputs and a backward cache."""

    @abstractmethod
    def _backward(self, cache: object, cotangent: np.ndarray, with_weights: bool) -> Tuple[np.ndarray, Optional[Dict[str, np.ndarray]]]:
        """Return the input cotangent and, optionally, weight gradients."""

    def replace_weights(self, weights: Dict[str, np.ndarray]) -> "SeparationModel":
        return type(self)(
            weights=weights,
            num_sources=self.num_sources,
            source_names=self.source_names,
            stft_cfg=self.stft_cfg,
            sample_rate=self.sample_rate,
            seed=self.seed,
            dtype=self.dtype,
        )

    def _working_weights(self) -> Dict[str, np.ndarray]:
        if self.dtype == np.float64:
            return self.weights
        return {name: value.astype(self.dtype) for name, value in self.weights.items()}

    def _check_input(self, x: AudioClip):
        if x.sample_rate != self.sample_rate:
            raise ParameterError(
                f"{self.architecture} model expects {self.sample_rate} Hz input, got {x.sample_rate} Hz"
            )

    def forward_array(self, x: AudioClip) -> np.ndarray:
        self._check_input(x)
        outputs, _ = self._forward(x.samples.astype(self.dtype))
        check_finite(outputs, f"{self.architecture} forward output")
        return np.asarray(outputs, dtype=np.float64)

    def forward(self, x: AudioClip) -> List[AudioClip]:
        return [x.with_samples(y) for y in self.forward_array(x)]

    def full_cotangent(self, req: GradientRequest) -> np.ndarray:
        x = req.input
        full_shape = (self.num_sources,) + x.shape
        cotangent = np.asarray(req.cotangent, dtype=np.float64)
        target = req.target_source
        if target is not None and not 0 <= target < self.num_sources:
            raise ParameterError(f"target_source {target} outside [0, {self.num_sources})")
        if cotangent.shape == x.shape:
            if target is None:
                raise ParameterError("A single-source cotangent needs a target_source")
            full = np.zeros(full_shape)
            full[target] = cotangent
            return full
        if cotangent.shape != full_shape:
            raise ParameterError(f"Cotangent shape {cotangent.shape} does not match output shape {full_shape}")
        if target is None:
            return cotangent
        full = np.zeros(full_shape)
        full[target] = cotangent[target]
        return full

    def pullback(self, x: AudioClip, cotangent_fn: Callable[[np.ndarray], np.ndarray], with_weights: bool = False):
        """One forward pass, then the vector–Jacobian product at ``cotangent_fn(outputs)``.

        Returns (outputs, input gradient, weight gradients or None).
        """
        self._check_input(x)
        outputs, cache = self._forward(x.samples.astype(self.dtype))
        check_finite(outputs, f"{self.architecture} forward output")
        outputs = np.asarray(outputs, dtype=np.float64)
        cotangent = np.asarray(cotangent_fn(outputs), dtype=self.dtype)
        grad, weight_grads = self._backward(cache, cotangent, with_weights)
        check_finite(grad, f"{self.architecture} input gradient")
        if weight_grads is not None:
            weight_grads = {name: np.asarray(value, dtype=np.float64) for name, value in weight_grads.items()}
            for name, value in weight_grads.items():
                check_finite(value, f"gradient of '{name}'")
        return outputs, np.asarray(grad, dtype=np.float64), weight_grads

    def vjp(self, x: AudioClip, cotangent: np.ndarray, with_weights: bool = False):
        return self.pullback(x, lambda _: cotangent, with_weights)

    def mse_gradients(self, x: AudioClip, targets: np.ndarray) -> Tuple[float, Dict[str, np.ndarray]]:
        """Mean squared error against ``targets`` and its weight gradients."""
        losses = []

        def cotangent(outputs):
            residual = outputs - targets
            losses.append(float(np.mean(residual ** 2)))
            if not np.isfinite(losses[-1]):
                raise NumericError("Non-finite training loss")
            return 2.0 * residual / residual.size

        _, _, weight_grads = self.pullback(x, cotangent, with_weights=True)
        return losses[0], weight_grads

    def input_gradient(self, req: GradientRequest) -> AudioClip:
        _, grad, _ = self.vjp(req.input, self.full_cotangent(req))
        return req.input.with_samples(grad)

    def describe(self) -> Dict[str, object]:
        return {
            "architecture": self.architecture,
            "num_sources": self.num_sources,
            "source_names": list(self.source_names),
            "sample_rate": self.sample_rate,
            "seed": self.seed,
            "stft": self.stft_cfg.model_dump() if self.stft_cfg is not None else None,
        }

    def differs_from(self, other: "SeparationModel") -> bool:
        if self.architecture != other.architecture or self.weights.keys() != other.weights.keys():
            return True
        return any(not np.array_equal(self.weights[k], other.weights[k]) for k in self.weights)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(sources={list(self.source_names)}, seed={self.seed})"

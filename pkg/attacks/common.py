"""Pieces shared by the three attack methods.

None of them ever sees a ground-truth source: the reference is the model's own
output on the clean input, computed once and held fixed.
"""
import logging
from typing import List, Tuple

import numpy as np

from attacks.config import AttackConfig
from attacks.constraints import constraint_array
from audio_io.clip import AudioClip
from errors import NumericError, ParameterError
from models.base import SeparationModel
from seeding import make_rng

logger = logging.getLogger(__name__)


def initial_noise(x: AudioClip, cfg: AttackConfig) -> np.ndarray:
    """Uniform noise in [-init_scale, init_scale], deterministic per seed."""
    if cfg.init_scale == 0:
        return np.zeros(x.shape)
    return make_rng(cfg.seed, "attack", cfg.method, "init").uniform(-cfg.init_scale, cfg.init_scale, size=x.shape)


def attacked_sources(model: SeparationModel, cfg: AttackConfig) -> List[int]:
    if cfg.target_source >= model.num_sources:
        raise ParameterError(f"target_source {cfg.target_source} outside a {model.num_sources}-source model")
    if cfg.attack_all_sources:
        return list(range(model.num_sources))
    return [cfg.target_source]


class DataTerm:
    """Squared l2 distance between the attacked outputs and the frozen clean outputs."""

    def __init__(self, model: SeparationModel, x: AudioClip, cfg: AttackConfig):
        self.model = model
        self.x = x
        self.cfg = cfg
        self.sources = attacked_sources(model, cfg)
        self.selector = np.zeros((model.num_sources, 1, 1))
        self.selector[self.sources] = 1.0
        self.reference = model.forward_array(x)

    def _perturbed(self, eta: np.ndarray, iteration: int) -> AudioClip:
        if not np.all(np.isfinite(eta)):
            raise NumericError("Perturbation became non-finite", iteration=iteration)
        return self.x.with_samples(self.x.samples + eta)

    def distance(self, eta: np.ndarray, iteration: int = 0) -> float:
        outputs = self.model.forward_array(self._perturbed(eta, iteration))
        return self._check(float(np.sum(((outputs - self.reference) * self.selector) ** 2)), iteration)

    def distance_and_gradient(self, eta: np.ndarray, iteration: int = 0) -> Tuple[float, np.ndarray]:
        """Distance and the gradient of its negation with respect to eta."""
        distances = []

        def cotangent(outputs):
            residual = (outputs - self.reference) * self.selector
            distances.append(float(np.sum(residual ** 2)))
            return -2.0 * residual

        try:
            _, grad, _ = self.model.pullback(self._perturbed(eta, iteration), cotangent)
        except NumericError as e:
            raise NumericError(str(e), iteration=iteration) from e
        return self._check(distances[0], iteration), grad

    def distance_and_mse_gradient(self, eta: np.ndarray, iteration: int = 0) -> Tuple[float, np.ndarray]:
        """Distance, and the gradient at x + eta of the mean squared error to the frozen reference."""
        scale = 2.0 / (len(self.sources) * self.x.channels * self.x.num_samples)
        distances = []

        def cotangent(outputs):
            residual = (outputs - self.reference) * self.selector
            distances.append(float(np.sum(residual ** 2)))
            return scale * residual

        try:
            _, grad, _ = self.model.pullback(self._perturbed(eta, iteration), cotangent)
        except NumericError as e:
            raise NumericError(str(e), iteration=iteration) from e
        return self._check(distances[0], iteration), grad

    def constraint(self, eta: np.ndarray) -> float:
        return constraint_array(eta, self.x.samples, self.cfg.constraint, self.x.sample_rate)

    @staticmethod
    def _check(value: float, iteration: int) -> float:
        if not np.isfinite(value):
            raise NumericError("Loss is NaN or Inf", iteration=iteration)
        return value

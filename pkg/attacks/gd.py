"""Gradient-descent attack.

Minimizes ``L(eta) = -||f_t(x + eta) - f_t(x)||^2 + lambda * C(eta)`` with a
fixed step: a gradient step on the data term, then the proximal map of
``lr * lambda * C`` on the time-domain perturbation. The iterate can live in
the time domain, in complex STFT coefficients, or in STFT magnitude offsets
along the phase of the clean input.
"""
import logging

import numpy as np

from attacks.common import DataTerm, initial_noise
from attacks.config import AttackConfig
from attacks.constraints import prox_constraint
from attacks.traces import AttackResult, TraceRecorder, build_result
from audio_io.clip import AudioClip
from dsp.griffin_lim import griffin_lim
from dsp.stft import istft_adjoint_array, istft_array, stft_array
from errors import ParameterError
from models.base import SeparationModel

logger = logging.getLogger(__name__)

LOG_EVERY = 50


class TimeDomain:
    def from_eta(self, eta: np.ndarray) -> np.ndarray:
        return eta

    def to_eta(self, state: np.ndarray) -> np.ndarray:
        return state

    def pull(self, grad: np.ndarray) -> np.ndarray:
        return grad


class ComplexSpectrum:
    """eta = istft(Z) over the real and imaginary parts of Z."""

    def __init__(self, x: AudioClip, cfg: AttackConfig):
        self.stft_cfg = cfg.stft
        self.length = x.num_samples

    def from_eta(self, eta: np.ndarray) -> np.ndarray:
        return stft_array(eta, self.stft_cfg)

    def to_eta(self, state: np.ndarray) -> np.ndarray:
        return istft_array(state, self.stft_cfg, self.length)

    def pull(self, grad: np.ndarray) -> np.ndarray:
        return istft_adjoint_array(grad, self.stft_cfg)


class MagnitudeSpectrum:
    """eta = istft(delta * phase(X)): real magnitude offsets along the clean phase."""

    def __init__(self, x: AudioClip, cfg: AttackConfig):
        self.stft_cfg = cfg.stft
        self.length = x.num_samples
        self.clean = stft_array(x.samples, cfg.stft)
        modulus = np.abs(self.clean)
        self.phase = np.ones_like(self.clean)
        nonzero = modulus > 0
        self.phase[nonzero] = self.clean[nonzero] / modulus[nonzero]

    def from_eta(self, eta: np.ndarray) -> np.ndarray:
        return np.real(np.conj(self.phase) * stft_array(eta, self.stft_cfg))

    def to_eta(self, state: np.ndarray) -> np.ndarray:
        return istft_array(state * self.phase, self.stft_cfg, self.length)

    def pull(self, grad: np.ndarray) -> np.ndarray:
        return np.real(np.conj(self.phase) * istft_adjoint_array(grad, self.stft_cfg))

    def reconstruct(self, state: np.ndarray, cfg: AttackConfig, x: AudioClip) -> np.ndarray:
        """Griffin–Lim reconstruction of the perturbed magnitude, returned as a perturbation."""
        magnitude = np.maximum(np.abs(self.clean) + state, 0.0)
        adversarial = griffin_lim(
            magnitude,
            self.stft_cfg,
            cfg.griffin_lim_iters,
            seed=cfg.seed,
            length=self.length,
            sample_rate=x.sample_rate,
            init_phase=self.clean,
        )
        return adversarial.samples - x.samples


def _parameterization(x: AudioClip, cfg: AttackConfig):
    if cfg.domain == "time":
        return TimeDomain()
    if cfg.frequency_mode == "complex":
        return ComplexSpectrum(x, cfg)
    return MagnitudeSpectrum(x, cfg)


def craft_gd(model: SeparationModel, x: AudioClip, cfg: AttackConfig) -> AttackResult:
    """Gradient-descent attack; see the module docstring for the objective."""
    if cfg.method != "gd":
        raise ParameterError(f"craft_gd needs method 'gd', got '{cfg.method}'")
    logger.info(
        f"GD attack ({cfg.domain}{'/' + cfg.frequency_mode if cfg.domain == 'frequency' else ''}, "
        f"{cfg.constraint.kind}, lambda={cfg.lam}, lr={cfg.lr}, T={cfg.iterations}) on {model!r}"
    )
    data = DataTerm(model, x, cfg)
    param = _parameterization(x, cfg)
    threshold = cfg.lr * cfg.lam
    recorder = TraceRecorder(cfg.lam)

    state = param.from_eta(initial_noise(x, cfg))
    eta = param.to_eta(state)
    distance, grad = data.distance_and_gradient(eta, 0)
    for iteration in range(1, cfg.iterations + 1):
        half = state - cfg.lr * param.pull(grad)
        eta = prox_constraint(param.to_eta(half), x.samples, cfg.constraint, threshold, x.sample_rate)
        state = param.from_eta(eta)
        if iteration < cfg.iterations:
            distance, grad = data.distance_and_gradient(eta, iteration)
        else:
            distance = data.distance(eta, iteration)
        recorder.record(distance, data.constraint(eta))
        if iteration % LOG_EVERY == 0:
            logger.debug(f"GD iteration {iteration}: loss {recorder.loss[-1]:.6g}, distance {distance:.6g}")

    if isinstance(param, MagnitudeSpectrum):
        eta = param.reconstruct(state, cfg, x)
        reconstructed = data.distance(eta, cfg.iterations)
        recorder.replace_last(reconstructed, data.constraint(eta))
        logger.info(f"Griffin–Lim reconstruction: distance {reconstructed:.6g} (last iterate {distance:.6g})")

    result = build_result(x, eta, recorder, cfg)
    logger.info(f"GD attack done: final loss {result.loss_trace[-1]:.6g}, C(eta) {result.constraint_trace[-1]:.6g}")
    return result

import logging

import numpy as np

from attacks.common import DataTerm, initial_noise
from attacks.config import AttackConfig
from attacks.traces import AttackResult, TraceRecorder, build_result
from audio_io.clip import AudioClip
from errors import ParameterError
from models.base import SeparationModel

logger = logging.getLogger(__name__)


def craft_fgsm(model: SeparationModel, x: AudioClip, cfg: AttackConfig) -> AttackResult:
    """Fast gradient sign method: ``eta = epsilon * sign(grad MSE(f(x + r0), f(x)))``.

    The gradient is taken at a slightly noised input x + r0 because at x itself
    the output equals the reference and the gradient vanishes. sign(0) = 0, so
    every sample of eta is one of -epsilon, 0, +epsilon.
    """
    if cfg.method != "fgsm":
        raise ParameterError(f"craft_fgsm needs method 'fgsm', got '{cfg.method}'")
    logger.info(f"FGSM attack (epsilon={cfg.epsilon}) on {model!r}")
    data = DataTerm(model, x, cfg)
    _, grad = data.distance_and_mse_gradient(initial_noise(x, cfg), 0)
    eta = cfg.epsilon * np.sign(grad)
    if not np.any(grad):
        logger.warning("FGSM gradient is identically zero; eta is zero (is init_scale 0?)")

    recorder = TraceRecorder(cfg.lam)
    recorder.record(data.distance(eta, 1), data.constraint(eta))
    return build_result(x, eta, recorder, cfg)

import logging

import numpy as np

from attacks.common import DataTerm, initial_noise
from attacks.config import AttackConfig
from attacks.traces import AttackResult, TraceRecorder, build_result
from audio_io.clip import AudioClip, require_same_layout
from errors import ParameterError
from models.base import SeparationModel

logger = logging.getLogger(__name__)

LOG_EVERY = 50


def project_sup_ball(candidate: AudioClip, center: AudioClip, epsilon: float) -> AudioClip:
    """Clamp every sample of ``candidate`` to [center - epsilon, center + epsilon]."""
    require_same_layout(candidate, center)
    if epsilon <= 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    return candidate.with_samples(center.samples + np.clip(candidate.samples - center.samples, -epsilon, epsilon))


def craft_pgd(model: SeparationModel, x: AudioClip, cfg: AttackConfig) -> AttackResult:
    """Projected gradient ascent of the MSE to the frozen clean output.

    ``x_{t+1} = P(x_t + alpha * sign(grad))`` where P clamps into the sup-norm
    epsilon-ball around x. The iterate is kept as its offset from x, so every
    recorded x_t satisfies ``|x_t - x| <= epsilon`` exactly.
    """
    if cfg.method != "pgd":
        raise ParameterError(f"craft_pgd needs method 'pgd', got '{cfg.method}'")
    alpha = cfg.resolved_step
    logger.info(f"PGD attack (epsilon={cfg.epsilon}, alpha={alpha:.4g}, T={cfg.iterations}) on {model!r}")
    data = DataTerm(model, x, cfg)
    recorder = TraceRecorder(cfg.lam)

    eta = np.clip(initial_noise(x, cfg), -cfg.epsilon, cfg.epsilon)
    _, grad = data.distance_and_mse_gradient(eta, 0)
    for iteration in range(1, cfg.iterations + 1):
        eta = np.clip(eta + alpha * np.sign(grad), -cfg.epsilon, cfg.epsilon)
        if iteration < cfg.iterations:
            distance, grad = data.distance_and_mse_gradient(eta, iteration)
        else:
            distance = data.distance(eta, iteration)
        recorder.record(distance, data.constraint(eta), sup_norm=float(np.max(np.abs(eta))))
        if iteration % LOG_EVERY == 0:
            logger.debug(f"PGD iteration {iteration}: distance {-recorder.objective[-1]:.6g}")

    result = build_result(x, eta, recorder, cfg)
    logger.info(f"PGD attack done: distance {-result.objective_trace[-1]:.6g}")
    return result

"""Log-space bisection of an attack hyperparameter to hit a target measurement."""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

from attacks import craft
from attacks.config import AttackConfig
from attacks.traces import AttackResult
from audio_io.clip import AudioClip, SourceSet
from errors import ParameterError
from metrics.degradation import di, ds
from metrics.ground import GroundMetric
from models.base import SeparationModel

logger = logging.getLogger(__name__)

# default search intervals, per tuned parameter
DEFAULT_BOUNDS = {
    "lam": (1e-6, 1e3),
    "epsilon": (1e-5, 1.0),
}


@dataclass(frozen=True)
class MatchOutcome:
    result: AttackResult
    config: AttackConfig
    measured: float
    matched: bool
    steps: int


def tuned_parameter(cfg: AttackConfig) -> str:
    return "lam" if cfg.method == "gd" else "epsilon"


def bisect_parameter(
    attack: Callable[[AttackConfig], AttackResult],
    measure: Callable[[AttackResult], float],
    cfg: AttackConfig,
    parameter: str,
    target: float,
    tolerance: float,
    increasing: bool,
    bounds: Tuple[float, float],
    max_steps: int,
) -> MatchOutcome:
    """Bisect ``parameter`` geometrically within ``bounds``.

    ``increasing`` states whether the measurement grows with the parameter.
    Returns the closest run found; ``matched`` tells whether it is within
    ``tolerance`` of the target.
    """
    low, high = bounds
    if not 0 < low < high:
        raise ParameterError(f"Bisection bounds must satisfy 0 < low < high, got {bounds}")
    best: Optional[MatchOutcome] = None
    for step in range(1, max_steps + 1):
        value = math.sqrt(low * high)
        trial_cfg = cfg.model_copy(update={parameter: value})
        result = attack(trial_cfg)
        measured = measure(result)
        error = abs(measured - target) if math.isfinite(measured) else math.inf
        matched = error <= tolerance
        if best is None or error < abs(best.measured - target) or not math.isfinite(best.measured):
            best = MatchOutcome(result, trial_cfg, measured, matched, step)
        logger.debug(f"Bisection step {step}: {parameter}={value:.4g} -> {measured:.3f} (target {target})")
        if matched:
            break
        if (measured < target) == increasing:
            low = value
        else:
            high = value
    if not best.matched:
        logger.warning(
            f"Could not bring the measurement within {tolerance} of {target} in {max_steps} steps; "
            f"closest {best.measured:.3f} at {parameter}={getattr(best.config, parameter):.4g}"
        )
    return best


def match_di(
    model: SeparationModel,
    x: AudioClip,
    cfg: AttackConfig,
    target_db: float,
    tolerance_db: float = 1.0,
    max_steps: int = 12,
    low: Optional[float] = None,
    high: Optional[float] = None,
) -> MatchOutcome:
    """Tune lambda (GD) or epsilon (FGSM/PGD) until DI(x, eta) is within tolerance of ``target_db``.

    DI grows with lambda and shrinks with epsilon.
    """
    parameter = tuned_parameter(cfg)
    default_low, default_high = DEFAULT_BOUNDS[parameter]
    return bisect_parameter(
        attack=lambda trial: craft(model, x, trial),
        measure=lambda result: di(x, result.eta),
        cfg=cfg,
        parameter=parameter,
        target=target_db,
        tolerance=tolerance_db,
        increasing=parameter == "lam",
        bounds=(low or default_low, high or default_high),
        max_steps=max_steps,
    )


def match_ds(
    model: SeparationModel,
    clip: SourceSet,
    cfg: AttackConfig,
    target_db: float,
    tolerance_db: float = 0.5,
    max_steps: int = 12,
    low: Optional[float] = None,
    high: Optional[float] = None,
    metric: GroundMetric = GroundMetric(kind="sdr"),
) -> MatchOutcome:
    """Tune lambda (GD) or epsilon (FGSM/PGD) until the whole-clip DS of the attacked source hits ``target_db``.

    DS shrinks as lambda grows and grows with epsilon.
    """
    parameter = tuned_parameter(cfg)
    default_low, default_high = DEFAULT_BOUNDS[parameter]
    index = cfg.target_source
    reference = clip.source(index)
    clean = model.forward(clip.mixture)[index]

    def measure(result: AttackResult) -> float:
        adversarial = model.forward(result.adversarial)[index]
        degradation = ds(metric, reference, clean, adversarial, clip, index)
        return degradation.value if degradation.defined else math.nan

    return bisect_parameter(
        attack=lambda trial: craft(model, clip.mixture, trial),
        measure=measure,
        cfg=cfg,
        parameter=parameter,
        target=target_db,
        tolerance=tolerance_db,
        increasing=parameter == "epsilon",
        bounds=(low or default_low, high or default_high),
        max_steps=max_steps,
    )

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from audio_io.clip import SourceSet
from errors import NumericError, ParameterError
from models.base import SeparationModel
from seeding import make_rng

logger = logging.getLogger(__name__)

TRACE_SLACK = 0.10


@dataclass(frozen=True)
class TrainingResult:
    model: SeparationModel
    loss_trace: Tuple[float, ...]
    initial_loss: float


def _targets(source_set: SourceSet) -> np.ndarray:
    return np.stack([clip.samples for clip in source_set.clips])


def separation_mse(model: SeparationModel, source_set: SourceSet) -> float:
    """Mean squared error between the model's estimates and the true sources."""
    estimates = model.forward_array(source_set.mixture)
    return float(np.mean((estimates - _targets(source_set)) ** 2))


def _check_data(model: SeparationModel, data: Sequence[SourceSet]):
    if not data:
        raise ParameterError("fit_toy needs at least one training SourceSet")
    shape = data[0].mixture.shape
    for source_set in data:
        if len(source_set) != model.num_sources:
            raise ParameterError(
                f"Track '{source_set.track_id}' has {len(source_set)} sources, model expects {model.num_sources}"
            )
        if source_set.mixture.shape != shape:
            raise ParameterError(f"Track '{source_set.track_id}' has shape {source_set.mixture.shape}, expected {shape}")
        if source_set.mixture.sample_rate != model.sample_rate:
            raise ParameterError(
                f"Track '{source_set.track_id}' is {source_set.mixture.sample_rate} Hz, model runs at {model.sample_rate} Hz"
            )


def _sgd_step(model: SeparationModel, source_set: SourceSet, lr: float, epoch: int) -> Tuple[SeparationModel, float]:
    try:
        loss, grads = model.mse_gradients(source_set.mixture, _targets(source_set))
        updated = {name: value - lr * grads[name] for name, value in model.weights.items()}
        return model.replace_weights(updated), loss
    except NumericError as e:
        raise NumericError(f"Training diverged on track '{source_set.track_id}': {e}", iteration=epoch) from e


def fit_toy(
    model: SeparationModel,
    data: Sequence[SourceSet],
    epochs: int,
    lr: float,
    seed: int,
    show_progress: bool = False,
) -> TrainingResult:
    """Train a separator by plain SGD on the MSE between estimates and true sources.

    Clips are visited in a seed-determined order that is reshuffled every epoch.
    The loss trace holds the mean per-clip loss of each epoch.
    """
    _check_data(model, data)
    if epochs < 0:
        raise ParameterError(f"epochs must be non-negative, got {epochs}")
    if lr <= 0:
        raise ParameterError(f"lr must be positive, got {lr}")

    initial_loss = float(np.mean([separation_mse(model, source_set) for source_set in data]))
    logger.info(f"Training {model!r} on {len(data)} clips for {epochs} epochs (lr={lr}), initial MSE {initial_loss:.6g}")

    trace: List[float] = []
    for epoch in tqdm(range(epochs), desc="Training", disable=not show_progress):
        order = make_rng(seed, "fit_toy", "epoch", epoch).permutation(len(data))
        losses = []
        for index in order:
            model, loss = _sgd_step(model, data[index], lr, epoch)
            losses.append(loss)
        trace.append(float(np.mean(losses)))
        if epoch % 10 == 0 or epoch == epochs - 1:
            logger.debug(f"Epoch {epoch}: mean MSE {trace[-1]:.6g}")

    for epoch in range(1, len(trace)):
        if trace[epoch] > trace[epoch - 1] * (1.0 + TRACE_SLACK):
            logger.warning(
                f"Loss rose by more than {TRACE_SLACK:.0%} at epoch {epoch}: "
                f"{trace[epoch - 1]:.6g} -> {trace[epoch]:.6g}; consider a smaller lr"
            )
            break

    if trace:
        logger.info(f"Training finished: MSE {initial_loss:.6g} -> {trace[-1]:.6g}")
    return TrainingResult(model=model, loss_trace=tuple(trace), initial_loss=initial_loss)

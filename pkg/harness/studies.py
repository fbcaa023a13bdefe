"""Side studies: untargeted-source effects and l2-versus-STPR localization."""
import logging
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from attacks import craft
from attacks.config import AttackConfig
from audio_io.clip import AudioClip, SourceSet
from errors import NumericError, PlanValidationError, UndefinedMetricError
from harness.matching import match_ds
from harness.plan import ExperimentPlan, resolve_clips, resolve_model
from harness.runner import clip_config
from metrics.aggregate import TrackSignals, aggregate, frame_samples
from metrics.degradation import di
from metrics.ground import GroundMetric
from metrics.reports import GLOBAL_TRACK
from models.base import SeparationModel

logger = logging.getLogger(__name__)

UNTARGETED_COLUMNS = ["track_id", "source_index", "source", "targeted", "DI"]
REGULARIZER_COLUMNS = [
    "track_id", "constraint", "lam", "DS_SDR", "DI", "silent_samples", "silent_energy_fraction", "matched",
]


def untargeted_effects(
    model: SeparationModel,
    clips: Sequence[SourceSet],
    cfg: AttackConfig,
    metrics: Sequence[GroundMetric] = (GroundMetric(kind="sdr"),),
    frame_seconds: float = 1.0,
    hop_seconds: float = 1.0,
    seed: int = 0,
    show_progress: bool = False,
) -> pd.DataFrame:
    """Attack one source and report DS for every source output.

    One row per (track, source) with the track median, plus one
    ``__global__`` row per source with the median over tracks.
    """
    if model.num_sources < 2:
        raise PlanValidationError("Untargeted effects need a model separating at least two sources")
    if cfg.target_source >= model.num_sources:
        raise PlanValidationError(f"target_source {cfg.target_source} out of range for {model.num_sources} sources")
    if not clips:
        raise PlanValidationError("Untargeted effects need at least one clip")
    for clip in clips:
        if len(clip) != model.num_sources:
            raise PlanValidationError(
                f"Clip '{clip.track_id}' has {len(clip)} sources, model separates {model.num_sources}"
            )

    crafted = []
    for clip in tqdm(clips, desc="Crafting", disable=not show_progress):
        result = craft(model, clip.mixture, clip_config(cfg, clip.track_id, seed))
        clean = model.forward(clip.mixture)
        adversarial = model.forward(result.adversarial)
        crafted.append((clip, result, clean, adversarial))

    sample_rate = clips[0].mixture.sample_rate
    frame_length, hop = frame_samples(sample_rate, frame_seconds), frame_samples(sample_rate, hop_seconds)
    rows = {}
    for index in range(model.num_sources):
        signals = [
            TrackSignals(
                track_id=clip.track_id,
                reference=clip.source(index),
                estimate=adversarial[index],
                clean_estimate=clean[index],
                mixture=clip.mixture,
                eta=result.eta,
                sources=clip,
                target_index=index,
            )
            for clip, result, clean, adversarial in crafted
        ]
        for clip, result, _, _ in crafted:
            rows[(clip.track_id, index)] = {
                "track_id": clip.track_id,
                "source_index": index,
                "source": model.source_names[index],
                "targeted": index == cfg.target_source,
                "DI": di(clip.mixture, result.eta),
            }
        rows[(GLOBAL_TRACK, index)] = {
            "track_id": GLOBAL_TRACK,
            "source_index": index,
            "source": model.source_names[index],
            "targeted": index == cfg.target_source,
            "DI": float(np.median([di(clip.mixture, result.eta) for clip, result, _, _ in crafted])),
        }
        for metric in metrics:
            column = f"DS_{metric.kind.upper()}"
            try:
                report = aggregate(frame_length, hop, signals, metric, "DS", "difference_then_aggregate")
            except UndefinedMetricError as e:
                logger.warning(f"{column} undefined for source {index}: {e}")
                continue
            for track_id, value in report.track_medians().items():
                rows[(track_id, index)][column] = value
            rows[(GLOBAL_TRACK, index)][column] = report.global_median

    table = pd.DataFrame(list(rows.values()))
    ordered = UNTARGETED_COLUMNS + [c for c in table.columns if c not in UNTARGETED_COLUMNS]
    table = table.reindex(columns=ordered)
    logger.info(f"Untargeted effects over {len(clips)} clips, attacked source {model.source_names[cfg.target_source]}")
    return table


def leading_silence(x: AudioClip, threshold: float = 0.0) -> int:
    """Number of leading samples whose magnitude stays at or below ``threshold`` on every channel."""
    loud = np.flatnonzero(np.max(np.abs(x.samples), axis=0) > threshold)
    return int(loud[0]) if loud.size else x.num_samples


def silent_energy_fraction(eta: AudioClip, silent: int) -> float:
    total = float(np.sum(eta.samples ** 2))
    if total == 0.0:
        return 0.0
    return float(np.sum(eta.samples[:, :silent] ** 2)) / total


def regularizer_comparison(
    model: SeparationModel,
    clips: Sequence[SourceSet],
    cfg: AttackConfig,
    target_ds_db: float,
    tolerance_db: float = 0.5,
    max_steps: int = 12,
    low: Optional[float] = None,
    high: Optional[float] = None,
    seed: int = 0,
    show_progress: bool = False,
) -> pd.DataFrame:
    """Paired l2 and STPR runs at matched DS_SDR, with the share of eta energy in the leading silence."""
    if cfg.method != "gd":
        raise PlanValidationError(f"Regularizer comparison needs a gd config, got {cfg.method}")
    if not clips:
        raise PlanValidationError("Regularizer comparison needs at least one clip")
    rows: List[dict] = []
    for clip in tqdm(clips, desc="Regularizers", disable=not show_progress):
        silent = leading_silence(clip.mixture)
        if silent == 0:
            logger.warning(f"Clip '{clip.track_id}' has no leading silence; silent fraction is 0 by construction")
        for kind in ("l2", "stpr"):
            run_cfg = clip_config(cfg, clip.track_id, seed).model_copy(
                update={"constraint": cfg.constraint.model_copy(update={"kind": kind})}
            )
            try:
                outcome = match_ds(model, clip, run_cfg, target_ds_db, tolerance_db, max_steps, low, high)
            except NumericError as e:
                logger.error(f"{kind} run failed on '{clip.track_id}': {e}")
                continue
            rows.append({
                "track_id": clip.track_id,
                "constraint": kind,
                "lam": outcome.config.lam,
                "DS_SDR": outcome.measured,
                "DI": di(clip.mixture, outcome.result.eta),
                "silent_samples": silent,
                "silent_energy_fraction": silent_energy_fraction(outcome.result.eta, silent),
                "matched": outcome.matched,
            })
    table = pd.DataFrame(rows, columns=REGULARIZER_COLUMNS)
    if not table.empty:
        fractions = table.groupby("constraint")["silent_energy_fraction"].median().to_dict()
        logger.info(f"Median silent-region energy fraction by constraint: {fractions}")
    return table


def _single_config(plan: ExperimentPlan) -> AttackConfig:
    if len(plan.attack_grid) != 1:
        raise PlanValidationError(f"{plan.experiment} plans take exactly one attack config, got {len(plan.attack_grid)}")
    return plan.attack_grid[0]


def run_untargeted(plan: ExperimentPlan, show_progress: bool = False) -> pd.DataFrame:
    cfg = _single_config(plan)
    model = resolve_model(plan.source_model, show_progress, plan.seed)
    return untargeted_effects(
        model, resolve_clips(plan), cfg, plan.metrics,
        plan.frames.frame_seconds, plan.frames.hop_seconds, plan.seed, show_progress,
    )


def run_regularizers(plan: ExperimentPlan, show_progress: bool = False) -> pd.DataFrame:
    cfg = _single_config(plan)
    model = resolve_model(plan.source_model, show_progress, plan.seed)
    matching = plan.ds_matching
    return regularizer_comparison(
        model, resolve_clips(plan), cfg, matching.target_ds_db, matching.tolerance_db, matching.max_steps,
        matching.low, matching.high, plan.seed, show_progress,
    )

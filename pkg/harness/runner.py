"""White-box sweeps and transfer experiments.

Crafting runs once per (clip, attack config) on the source model; every
target then evaluates the identical perturbation. Jobs run on a thread pool;
results are reduced in a fixed (clip id, config id, target label) order, so
the report does not depend on the number of workers.
"""
import hashlib
import logging
from dataclasses import dataclass
from multiprocessing.dummy import Pool as ThreadPool
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from attacks import craft
from attacks.config import AttackConfig
from attacks.traces import AttackResult
from audio_io.clip import AudioClip, SourceSet
from errors import NumericError, PlanValidationError, SepAdvError, UndefinedMetricError
from harness.matching import match_di, tuned_parameter
from harness.plan import ExperimentPlan, check_loaded_conditions, resolve_clips, resolve_model, validate_conditions
from harness.report import (
    STATUS_FAILED,
    TransferReport,
    TransferRow,
    empty_report,
    export_example_panels,
    merge_rows,
)
from metrics.aggregate import MetricsReport, TrackSignals, aggregate, frame_samples
from metrics.degradation import di
from models.base import SeparationModel
from seeding import derive_seed

logger = logging.getLogger(__name__)

DEGRADATIONS = ("DS", "DSA")


@dataclass(frozen=True)
class Target:
    label: str
    condition: str
    model: SeparationModel


@dataclass(frozen=True)
class CraftedExample:
    clip: SourceSet
    grid_config: AttackConfig
    config: AttackConfig
    result: Optional[AttackResult] = None
    checksum: Optional[str] = None
    di_matched: Optional[bool] = None
    error: Optional[str] = None

    @property
    def config_id(self) -> str:
        return self.grid_config.config_id


@dataclass(frozen=True)
class Evaluation:
    example: CraftedExample
    target: Target
    signals: Optional[TrackSignals] = None
    clean_estimate: Optional[AudioClip] = None
    error: Optional[str] = None


def eta_checksum(eta: AudioClip) -> str:
    return hashlib.sha256(np.ascontiguousarray(eta.samples, dtype="<f8").tobytes()).hexdigest()


def clip_config(cfg: AttackConfig, clip_id: str, seed: int = 0) -> AttackConfig:
    """Per-job copy of a grid entry with its seed fanned out from the run seed by clip id."""
    return cfg.model_copy(update={"seed": derive_seed(seed, "attack", cfg.seed, f"clip:{clip_id}")})


def _run_jobs(fn: Callable, jobs: Sequence, workers: int, desc: str, show_progress: bool) -> List:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in tqdm(jobs, desc=desc, disable=not show_progress)]
    with ThreadPool(processes=workers) as pool:
        return list(tqdm(pool.imap(fn, jobs), total=len(jobs), desc=desc, disable=not show_progress))


def _craft_job(source: SeparationModel, plan: ExperimentPlan) -> Callable[[Tuple[SourceSet, AttackConfig]], CraftedExample]:
    matching = plan.di_matching

    def run(job: Tuple[SourceSet, AttackConfig]) -> CraftedExample:
        clip, grid_cfg = job
        cfg = clip_config(grid_cfg, clip.track_id, plan.seed)
        try:
            if matching.enabled:
                outcome = match_di(
                    source, clip.mixture, cfg, matching.target_db, matching.tolerance_db,
                    matching.max_steps, matching.low, matching.high,
                )
                result, cfg, matched = outcome.result, outcome.config, outcome.matched
            else:
                result, matched = craft(source, clip.mixture, cfg), None
        except (NumericError, UndefinedMetricError) as e:
            logger.error(f"Attack {grid_cfg.config_id} failed on '{clip.track_id}': {e}")
            return CraftedExample(clip, grid_cfg, cfg, error=str(e))
        logger.debug(f"Crafted {grid_cfg.config_id} on '{clip.track_id}' in {result.iterations} iterations")
        return CraftedExample(clip, grid_cfg, cfg, result, eta_checksum(result.eta), matched)

    return run


def _evaluate_job(job: Tuple[CraftedExample, Target]) -> Evaluation:
    example, target = job
    if example.result is None:
        return Evaluation(example, target, error=example.error)
    result = example.result
    if eta_checksum(result.eta) != example.checksum:
        raise SepAdvError(f"Perturbation for '{example.clip.track_id}' changed between crafting and evaluation")
    index = example.config.target_source
    try:
        clean = target.model.forward(example.clip.mixture)[index]
        adversarial = target.model.forward(result.adversarial)[index]
    except NumericError as e:
        logger.error(f"Target '{target.label}' failed on '{example.clip.track_id}': {e}")
        return Evaluation(example, target, error=str(e))
    signals = TrackSignals(
        track_id=example.clip.track_id,
        reference=example.clip.source(index),
        estimate=adversarial,
        clean_estimate=clean,
        mixture=example.clip.mixture,
        eta=result.eta,
        sources=example.clip,
        target_index=index,
    )
    return Evaluation(example, target, signals, clean)


def _aggregate_group(plan: ExperimentPlan, evaluations: Sequence[Evaluation]) -> Tuple[MetricsReport, ...]:
    signals = [evaluation.signals for evaluation in evaluations if evaluation.signals is not None]
    if not signals:
        return ()
    sample_rate = signals[0].reference.sample_rate
    frame_length = frame_samples(sample_rate, plan.frames.frame_seconds)
    hop = frame_samples(sample_rate, plan.frames.hop_seconds)
    reports = []
    for metric in plan.metrics:
        if metric.kind == "sir" and len(signals[0].sources) < 2:
            logger.warning("SIR needs at least two sources; skipped")
            continue
        for quantity in DEGRADATIONS:
            try:
                reports.append(aggregate(frame_length, hop, signals, metric, quantity, plan.aggregation_order))
            except UndefinedMetricError as e:
                logger.warning(f"{quantity}_{metric.kind.upper()} undefined for this group: {e}")
    return tuple(reports)


def _rows(plan: ExperimentPlan, evaluations: Sequence[Evaluation], reports: Sequence[MetricsReport]) -> List[TransferRow]:
    medians = {f"{report.quantity}_{report.metric.kind.upper()}": report.track_medians() for report in reports}
    rows = []
    for evaluation in evaluations:
        example, target = evaluation.example, evaluation.target
        common = dict(
            condition=target.condition,
            source_label=plan.source_label,
            target_label=target.label,
            track_id=example.clip.track_id,
            config_id=example.config_id,
            method=example.config.method,
            tuned_parameter=tuned_parameter(example.config) if plan.di_matching.enabled else None,
            tuned_value=getattr(example.config, tuned_parameter(example.config)) if plan.di_matching.enabled else None,
            di_matched=example.di_matched,
            eta_checksum=example.checksum,
        )
        if evaluation.signals is None:
            rows.append(TransferRow(**common, status=STATUS_FAILED, error=evaluation.error))
            continue
        values = {"DI": di(example.clip.mixture, example.result.eta)}
        for name, per_track in medians.items():
            values[name] = per_track.get(example.clip.track_id, float("nan"))
        rows.append(TransferRow(**common, values=values))
    return rows


def _reduce(plan: ExperimentPlan, evaluations: Sequence[Evaluation]) -> Tuple[List[TransferRow], Dict]:
    groups: Dict[Tuple[str, str], List[Evaluation]] = {}
    for evaluation in evaluations:
        groups.setdefault((evaluation.target.label, evaluation.example.config_id), []).append(evaluation)
    rows, metric_reports = [], {}
    for key in sorted(groups):
        members = sorted(groups[key], key=lambda evaluation: evaluation.example.clip.track_id)
        reports = _aggregate_group(plan, members)
        metric_reports[key] = reports
        rows.extend(_rows(plan, members, reports))
    return rows, metric_reports


def _check_grid(plan: ExperimentPlan, source: SeparationModel):
    for cfg in plan.attack_grid:
        if cfg.target_source >= source.num_sources:
            raise PlanValidationError(
                f"Attack {cfg.config_id} targets source {cfg.target_source}, model has {source.num_sources}"
            )
    ids = [cfg.config_id for cfg in plan.attack_grid]
    if len(set(ids)) != len(ids):
        raise PlanValidationError(f"Attack config ids must be unique, got {ids}")


def _export_panels(evaluations: Sequence[Evaluation], panel_dir: Path):
    for evaluation in evaluations:
        if evaluation.signals is None or evaluation.target.condition != "white":
            continue
        example = evaluation.example
        export_example_panels(
            panel_dir / example.clip.track_id / example.config_id,
            mixture=example.clip.mixture,
            clean_estimate=evaluation.clean_estimate,
            eta=example.result.eta,
            adversarial_estimate=evaluation.signals.estimate,
            stft_cfg=example.config.stft,
        )


def _run(
    plan: ExperimentPlan,
    experiment: str,
    source: SeparationModel,
    targets: Sequence[Target],
    show_progress: bool,
    panel_dir: Optional[Path],
) -> TransferReport:
    clips = resolve_clips(plan)
    _check_grid(plan, source)
    for clip in clips:
        if len(clip) != source.num_sources:
            raise PlanValidationError(
                f"Clip '{clip.track_id}' has {len(clip)} sources, source model separates {source.num_sources}"
            )

    jobs = [(clip, cfg) for clip in clips for cfg in plan.attack_grid]
    logger.info(f"Crafting {len(jobs)} examples ({len(clips)} clips x {len(plan.attack_grid)} configs), jobs={plan.jobs}")
    crafted = _run_jobs(_craft_job(source, plan), jobs, plan.jobs, "Crafting", show_progress)

    evaluation_jobs = [(example, target) for example in crafted for target in targets]
    evaluations = _run_jobs(_evaluate_job, evaluation_jobs, plan.jobs, "Evaluating", show_progress)

    rows, metric_reports = _reduce(plan, evaluations)
    report = TransferReport(experiment=experiment, rows=merge_rows(rows), metric_reports=metric_reports)
    if report.failed_rows:
        logger.warning(f"{report.failed_rows} of {len(report.rows)} rows failed and are excluded from medians")
    if plan.export_spectrograms and panel_dir is not None:
        _export_panels(evaluations, Path(panel_dir))
    logger.info(f"{experiment} run finished: {len(report.rows)} rows")
    return report


def run_whitebox(
    plan: ExperimentPlan,
    show_progress: bool = False,
    panel_dir: Optional[Path] = None,
    source: Optional[SeparationModel] = None,
) -> TransferReport:
    """Craft and evaluate every (clip, config) on the source model itself."""
    validate_conditions(plan)
    if not plan.attack_grid:
        logger.warning("Attack grid is empty; nothing to run")
        return empty_report("whitebox")
    source = source or resolve_model(plan.source_model, show_progress, plan.seed)
    return _run(plan, "whitebox", source, [Target(plan.source_label, "white", source)], show_progress, panel_dir)


def run_transfer(
    plan: ExperimentPlan,
    show_progress: bool = False,
    panel_dir: Optional[Path] = None,
) -> TransferReport:
    """Craft on the source model once per (clip, config) and evaluate on every target."""
    validate_conditions(plan, require_transfer=True)
    if not plan.attack_grid:
        logger.warning("Attack grid is empty; nothing to run")
        return empty_report("transfer")

    source = resolve_model(plan.source_model, show_progress, plan.seed)
    models: Dict[str, SeparationModel] = {}
    cache: Dict[str, SeparationModel] = {plan.source_model.key: source}
    for target in plan.target_models:
        if target.model.key not in cache:
            cache[target.model.key] = resolve_model(target.model, show_progress, plan.seed)
        models[target.label] = cache[target.model.key]
    check_loaded_conditions(source, models, plan)

    targets = [Target(t.label, t.condition, models[t.label]) for t in plan.target_models]
    return _run(plan, "transfer", source, targets, show_progress, panel_dir)

"""Subcommand implementations. Each returns the one-line summary printed on stdout."""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from attacks import craft, export_trace_csv
from audio_io.clip import AudioClip, SourceSet
from audio_io.synth import synth_source_set
from audio_io.wav import load_source_set, read_wav, write_source_set, write_wav
from cli.config_loader import resolved_echo
from cli.schemas import CraftConfig, EvaluateConfig, SynthConfig, TrainToyConfig
from errors import ConfigError, ParameterError, UndefinedMetricError
from file_utils import atomic_write_text, create_output_directory
from harness.plan import ExperimentPlan, resolve_model, train_model
from harness.report import write_transfer_report
from harness.runner import run_transfer, run_whitebox
from harness.studies import run_regularizers, run_untargeted
from metrics.aggregate import TrackSignals, aggregate, frame_samples
from metrics.degradation import Degradation, di, ds, dsa
from metrics.ground import SIR_NOTE
from metrics.reports import write_report_csv, write_summary_json
from models.weights import save_weights
from seeding import derive_seed

logger = logging.getLogger(__name__)

RUN_FILE = "run.json"


def write_run_file(output_dir: Path, subcommand: str, config) -> Path:
    """Echo the resolved config; no timestamps so identical runs give identical files."""
    return atomic_write_text(output_dir / RUN_FILE, json.dumps(resolved_echo(subcommand, config), indent=2, sort_keys=True))


def _json_db(value: float):
    if np.isnan(value):
        return None
    if np.isinf(value):
        return "inf" if value > 0 else "-inf"
    return float(value)


def _degradation_json(degradation: Degradation) -> Dict[str, Any]:
    return {"value_db": _json_db(degradation.value), "flag": degradation.flag}


def _write_json(path: Path, document: Dict[str, Any]) -> Path:
    return atomic_write_text(path, json.dumps(document, indent=2, sort_keys=True))


# craft

def _craft_input(cfg: CraftConfig) -> tuple:
    """(mixture, source set or None)."""
    spec = cfg.input
    if spec.synth is not None:
        source_set = synth_source_set(spec.synth, derive_seed(cfg.seed, "clip", spec.seed), track_id=spec.track_id)
        return source_set.mixture, source_set
    if spec.references:
        source_set = load_source_set(spec.wav, spec.references, track_id=spec.track_id)
        return source_set.mixture, source_set
    return read_wav(spec.wav), None


def cmd_craft(cfg: CraftConfig) -> str:
    out = create_output_directory(cfg.output_dir)
    write_run_file(out, "craft", cfg)

    model = resolve_model(cfg.model, seed=cfg.seed)
    x, source_set = _craft_input(cfg)
    attack = cfg.attack.model_copy(update={"seed": derive_seed(cfg.seed, "attack", cfg.attack.seed)})
    if attack.target_source >= model.num_sources:
        raise ParameterError(f"target_source {attack.target_source} out of range for {model.num_sources} sources")
    if source_set is not None and len(source_set) != model.num_sources:
        raise ParameterError(f"Input has {len(source_set)} reference sources, model separates {model.num_sources}")

    result = craft(model, x, attack)
    clipped = [
        write_wav(result.adversarial, out / "adversarial.wav", cfg.encoding),
        write_wav(result.eta, out / "eta.wav", cfg.encoding),
    ]
    for info in clipped:
        if info.clipped:
            logger.warning(f"{info.path}: {info.num_clipped} samples clamped to [-1, 1]")
    export_trace_csv(result, out / "loss_trace.csv")

    index = attack.target_source
    metrics: Dict[str, Any] = {
        "config_id": cfg.attack.config_id,
        "target_source": model.source_names[index],
        "iterations": result.iterations,
        "within_delta": result.within_delta,
        "DI": _json_db(di(x, result.eta)),
        "DS": {},
        "DSA": {},
        "note": SIR_NOTE,
    }
    if source_set is None:
        logger.warning("No reference sources given; DS and DSA are left empty")
    else:
        y = source_set.source(index)
        clean = model.forward(x)[index]
        adversarial = model.forward(result.adversarial)[index]
        for metric in cfg.metrics:
            name = metric.kind.upper()
            if metric.kind == "sir" and len(source_set) < 2:
                logger.warning("SIR needs at least two sources; skipped")
                continue
            try:
                metrics["DS"][name] = _degradation_json(ds(metric, y, clean, adversarial, source_set, index))
                metrics["DSA"][name] = _degradation_json(dsa(y, clean, result.eta, metric, source_set, index))
            except UndefinedMetricError as e:
                logger.warning(f"{name} undefined on this clip: {e}")
    _write_json(out / "metrics.json", metrics)

    ds_sdr = metrics["DS"].get("SDR", {}).get("value_db")
    return f"craft ok: {cfg.attack.config_id} DI={metrics['DI']} DS_SDR={ds_sdr} -> {out}"


# evaluate

def _optional_wav(path: Optional[str]) -> Optional[AudioClip]:
    return read_wav(path) if path else None


def _check_track_paths(track):
    """Paths named in the evaluate config are part of the config: a missing one is a config error."""
    paths = [track.reference, track.estimate, track.clean_estimate, track.mixture, track.eta]
    paths += list((track.sources or {}).values())
    missing = [path for path in paths if path and not Path(path).is_file()]
    if missing:
        raise ConfigError(f"Track '{track.track_id}' names missing files: {missing}")


def _track_signals(track) -> TrackSignals:
    sources: Optional[SourceSet] = None
    mixture = _optional_wav(track.mixture)
    if track.sources:
        if mixture is None:
            raise ParameterError(f"Track '{track.track_id}' lists sources but no mixture")
        sources = load_source_set(track.mixture, track.sources, track_id=track.track_id)
    return TrackSignals(
        track_id=track.track_id,
        reference=read_wav(track.reference),
        estimate=_optional_wav(track.estimate),
        clean_estimate=_optional_wav(track.clean_estimate),
        mixture=mixture,
        eta=_optional_wav(track.eta),
        sources=sources,
        target_index=track.target_index,
    )


def cmd_evaluate(cfg: EvaluateConfig) -> str:
    out = create_output_directory(cfg.output_dir)
    write_run_file(out, "evaluate", cfg)

    for track in cfg.tracks:
        _check_track_paths(track)
    signals = [_track_signals(track) for track in cfg.tracks]
    sample_rate = signals[0].reference.sample_rate
    frame_length = frame_samples(sample_rate, cfg.frames.frame_seconds)
    hop = frame_samples(sample_rate, cfg.frames.hop_seconds)

    reports = []
    for quantity in cfg.quantities:
        # DI does not depend on the ground metric
        metrics = cfg.metrics[:1] if quantity == "DI" else cfg.metrics
        for metric in metrics:
            reports.append(aggregate(frame_length, hop, signals, metric, quantity, cfg.aggregation_order))

    write_report_csv(reports, out / "metrics_report.csv")
    write_summary_json(reports, out / "metrics_summary.json")
    headline = ", ".join(
        f"{report.quantity}_{report.metric.kind.upper()}={_json_db(report.global_median)}" for report in reports
    )
    return f"evaluate ok: {len(signals)} tracks, {headline} -> {out}"


# transfer

def cmd_transfer(plan: ExperimentPlan) -> str:
    out = create_output_directory(plan.output_dir)
    write_run_file(out, "transfer", plan)

    if plan.experiment in ("whitebox", "transfer"):
        runner = run_whitebox if plan.experiment == "whitebox" else run_transfer
        report = runner(plan, show_progress=True, panel_dir=out / "spectrograms")
        write_transfer_report(report, out, stem=plan.experiment)
        if plan.experiment == "whitebox":
            atomic_write_text(out / "whitebox_curve.csv", report.curve().to_csv(index=False, float_format="%.10g"))
        medians = {k: _json_db(v) for k, v in report.medians_by_condition("DS_SDR").items()}
        return (
            f"{plan.experiment} ok: {len(report.rows)} rows, {report.failed_rows} failed, "
            f"median DS_SDR by condition {medians} -> {out}"
        )

    if plan.experiment == "untargeted":
        table = run_untargeted(plan, show_progress=True)
        path = out / "untargeted_effects.csv"
    else:
        table = run_regularizers(plan, show_progress=True)
        path = out / "regularizer_comparison.csv"
    atomic_write_text(path, table.to_csv(index=False, float_format="%.10g"))
    logger.info(f"Wrote {len(table)} rows to {path}")
    return f"{plan.experiment} ok: {len(table)} rows -> {path}"


# train-toy

def cmd_train_toy(cfg: TrainToyConfig) -> str:
    out = create_output_directory(cfg.output_dir)
    write_run_file(out, "train-toy", cfg)

    training = train_model(cfg.model_ref(), show_progress=True, seed=cfg.seed)
    weights_path = save_weights(
        training.model,
        out / cfg.weights_name,
        provenance={"training": cfg.training.model_dump(mode="json"), "seed": cfg.seed},
    )
    trace = pd.DataFrame({
        "epoch": np.arange(1, len(training.loss_trace) + 1, dtype=int),
        "loss": list(training.loss_trace),
    })
    atomic_write_text(out / "loss_trace.csv", trace.to_csv(index=False, float_format="%.10g"))
    final = training.loss_trace[-1] if training.loss_trace else training.initial_loss
    return f"train-toy ok: {cfg.arch} MSE {training.initial_loss:.6g} -> {final:.6g} -> {weights_path}"


# synth

def cmd_synth(cfg: SynthConfig) -> str:
    out = create_output_directory(cfg.output_dir)
    write_run_file(out, "synth", cfg)

    written: List[str] = []
    for index in range(cfg.count):
        seed = cfg.seed if cfg.count == 1 else derive_seed(cfg.seed, f"clip:{index}")
        track_id = f"{cfg.track_prefix}-{index}"
        source_set = synth_source_set(cfg.recipe, seed, track_id=track_id)
        infos = write_source_set(source_set, out / track_id, cfg.encoding)
        for name, info in infos.items():
            if info.clipped:
                logger.warning(f"{track_id}/{name}: {info.num_clipped} samples clamped to [-1, 1]")
        written.append(track_id)
    return f"synth ok: {len(written)} track(s) {written} -> {out}"


COMMANDS = {
    "craft": cmd_craft,
    "evaluate": cmd_evaluate,
    "transfer": cmd_transfer,
    "train-toy": cmd_train_toy,
    "synth": cmd_synth,
}

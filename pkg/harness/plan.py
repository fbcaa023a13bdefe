"""Experiment plans and the white/gray/black condition rules."""
import json
import logging
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from attacks.config import AttackConfig
from audio_io.clip import SourceSet
from audio_io.synth import SynthRecipe, default_recipe, synth_source_set
from audio_io.wav import load_source_set
from errors import PlanValidationError
from metrics.ground import GroundMetric
from models.base import SeparationModel
from models.registry import default_learning_rate, init_model
from models.training import TrainingResult, fit_toy
from models.weights import load_weights, read_weights_header
from seeding import derive_seed

logger = logging.getLogger(__name__)

Condition = Literal["white", "gray", "black"]
Experiment = Literal["whitebox", "transfer", "untargeted", "regularizers"]


class TrainingSpec(BaseModel):
    """Train a freshly initialized toy model on synthetic clips before use."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    epochs: int = Field(default=200, ge=0)
    lr: Optional[float] = Field(default=None, gt=0)
    num_clips: int = Field(default=8, ge=1)
    seed: int = 0
    recipe: Optional[SynthRecipe] = None


class ModelRef(BaseModel):
    """Either a weights file or an inline (architecture, seed) toy model."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    path: Optional[str] = None
    arch: Optional[Literal["mask_freq", "conv_time"]] = None
    num_sources: int = Field(default=2, ge=1)
    seed: int = 0
    source_names: Optional[List[str]] = None
    train: Optional[TrainingSpec] = None

    @model_validator(mode="after")
    def _check(self):
        if (self.path is None) == (self.arch is None):
            raise ValueError("A model reference needs exactly one of 'path' or 'arch'")
        return self

    @property
    def key(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True)


class TargetModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    label: str
    model: ModelRef
    condition: Condition


class ClipSpec(BaseModel):
    """A synthetic clip (recipe + seed) or a mixture WAV with its source WAVs."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    track_id: Optional[str] = None
    synth: Optional[SynthRecipe] = None
    seed: int = 0
    mixture: Optional[str] = None
    sources: Optional[Dict[str, str]] = None

    @model_validator(mode="after")
    def _check(self):
        if (self.synth is None) == (self.mixture is None):
            raise ValueError("A clip needs exactly one of 'synth' or 'mixture'")
        if self.mixture is not None and not self.sources:
            raise ValueError("A mixture clip needs its source WAV paths")
        return self

    @property
    def clip_id(self) -> str:
        if self.track_id:
            return self.track_id
        return f"synth-{self.seed}" if self.synth is not None else self.mixture


class DiMatching(BaseModel):
    """Bisection of lambda (GD) or epsilon (FGSM/PGD) until DI hits ``target_db``."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    enabled: bool = False
    target_db: float = 30.0
    tolerance_db: float = Field(default=1.0, gt=0)
    max_steps: int = Field(default=12, ge=1)
    low: Optional[float] = Field(default=None, gt=0)
    high: Optional[float] = Field(default=None, gt=0)


class RegularizerMatching(BaseModel):
    """DS target for the paired l2 / STPR runs of a regularizer comparison."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    target_ds_db: float = 3.0
    tolerance_db: float = Field(default=0.5, gt=0)
    max_steps: int = Field(default=12, ge=1)
    low: Optional[float] = Field(default=None, gt=0)
    high: Optional[float] = Field(default=None, gt=0)


class FrameSettings(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    frame_seconds: float = Field(default=1.0, gt=0)
    hop_seconds: float = Field(default=1.0, gt=0)


class ExperimentPlan(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    experiment: Experiment = "transfer"
    clips: List[ClipSpec] = Field(default_factory=list)
    source_model: ModelRef
    source_label: str = "source"
    target_models: List[TargetModel] = Field(default_factory=list)
    attack_grid: List[AttackConfig] = Field(default_factory=list)
    metrics: List[GroundMetric] = Field(default_factory=lambda: [GroundMetric(kind="sdr"), GroundMetric(kind="sir")])
    output_dir: str = "sepadv_output"
    di_matching: DiMatching = Field(default_factory=DiMatching)
    ds_matching: RegularizerMatching = Field(default_factory=RegularizerMatching)
    frames: FrameSettings = Field(default_factory=FrameSettings)
    aggregation_order: Literal["aggregate_then_difference", "difference_then_aggregate"] = "aggregate_then_difference"
    export_spectrograms: bool = False
    jobs: int = Field(default=1, ge=1)
    seed: int = 0


def model_architecture(ref: ModelRef) -> str:
    """Architecture id of a reference, reading only the header of weight files."""
    if ref.arch is not None:
        return ref.arch
    return read_weights_header(ref.path)["architecture"]


def validate_conditions(plan: ExperimentPlan, require_transfer: bool = False):
    """Check every target's declared condition against the source model reference.

    white: same reference as the source; gray: same architecture, different
    reference; black: different architecture.
    """
    if require_transfer:
        if not plan.target_models:
            raise PlanValidationError("Transfer plan has no target models")
        if all(target.condition == "white" for target in plan.target_models):
            raise PlanValidationError("Transfer plan needs at least one gray or black target")

    source_arch = model_architecture(plan.source_model)
    labels = set()
    for target in plan.target_models:
        if target.label in labels:
            raise PlanValidationError(f"Duplicate target label '{target.label}'")
        labels.add(target.label)
        target_arch = model_architecture(target.model)
        same_ref = target.model.key == plan.source_model.key
        if target.condition == "white" and not same_ref:
            raise PlanValidationError(f"Target '{target.label}' is declared white but is not the source model")
        if target.condition == "gray" and (target_arch != source_arch or same_ref):
            raise PlanValidationError(
                f"Target '{target.label}' is declared gray: needs architecture {source_arch} with different "
                f"weights, got {target_arch}{' (same reference)' if same_ref else ''}"
            )
        if target.condition == "black" and target_arch == source_arch:
            raise PlanValidationError(
                f"Target '{target.label}' is declared black but shares architecture {source_arch} with the source"
            )
    logger.info(f"Plan conditions valid: {[(t.label, t.condition) for t in plan.target_models]}")


TRAINING_KINDS = ("vocals", "bass", "drums", "other")
TRAINING_CLIP_SECONDS = 1.0


def training_recipe(ref: ModelRef) -> SynthRecipe:
    """Recipe used to train an inline model: one source per model output."""
    if ref.train.recipe is not None:
        return ref.train.recipe
    if not 2 <= ref.num_sources <= len(TRAINING_KINDS):
        raise PlanValidationError(
            f"Cannot synthesize training material for {ref.num_sources} sources; give a training recipe"
        )
    return default_recipe(TRAINING_KINDS[:ref.num_sources], duration_s=TRAINING_CLIP_SECONDS)


def model_seed(ref: ModelRef, plan_seed: int) -> int:
    """Initialization seed of an inline model; ``ref.seed`` only salts the run seed."""
    return derive_seed(plan_seed, "model", ref.arch, ref.seed)


def clip_seed(spec: ClipSpec, plan_seed: int) -> int:
    """Synthesis seed of a clip; ``spec.seed`` only salts the run seed."""
    return derive_seed(plan_seed, "clip", spec.seed)


def resolve_model(ref: ModelRef, show_progress: bool = False, seed: int = 0) -> SeparationModel:
    """Load a weights file, or initialize (and optionally train) an inline toy model.

    ``seed`` is the run seed every inline model's randomness derives from.
    """
    if ref.path is not None:
        return load_weights(ref.path)
    if ref.train is None:
        return init_model(ref.arch, ref.num_sources, model_seed(ref, seed), source_names=ref.source_names)
    return train_model(ref, show_progress, seed).model


def train_model(ref: ModelRef, show_progress: bool = False, seed: int = 0) -> TrainingResult:
    """Initialize an inline model from the run seed and fit it on synthesized clips."""
    if ref.arch is None or ref.train is None:
        raise PlanValidationError("Only inline model references with a 'train' section can be trained")
    recipe = training_recipe(ref)
    if len(recipe.sources) != ref.num_sources:
        raise PlanValidationError(
            f"Training recipe has {len(recipe.sources)} sources, model reference expects {ref.num_sources}"
        )
    names = ref.source_names or [spec.name for spec in recipe.sources]
    model = init_model(ref.arch, ref.num_sources, model_seed(ref, seed), source_names=names,
                       sample_rate=recipe.sample_rate)
    train_seed = derive_seed(seed, "train", ref.arch, ref.seed, ref.train.seed)
    data = [
        synth_source_set(recipe, derive_seed(train_seed, "clip", index), track_id=f"train-{index}")
        for index in range(ref.train.num_clips)
    ]
    lr = ref.train.lr or default_learning_rate(ref.arch)
    return fit_toy(model, data, ref.train.epochs, lr, train_seed, show_progress=show_progress)


def resolve_clip(spec: ClipSpec, seed: int = 0) -> SourceSet:
    if spec.synth is not None:
        return synth_source_set(spec.synth, clip_seed(spec, seed), track_id=spec.clip_id)
    return load_source_set(spec.mixture, spec.sources, track_id=spec.clip_id)


def resolve_clips(plan: ExperimentPlan) -> List[SourceSet]:
    if not plan.clips:
        raise PlanValidationError("Plan has no clips")
    clips = [resolve_clip(spec, plan.seed) for spec in plan.clips]
    ids = [clip.track_id for clip in clips]
    if len(set(ids)) != len(ids):
        raise PlanValidationError(f"Clip ids must be unique, got {ids}")
    return clips


def check_loaded_conditions(source: SeparationModel, targets: Dict[str, SeparationModel], plan: ExperimentPlan):
    """Re-check gray targets once weights are loaded: they must actually differ from the source."""
    for target in plan.target_models:
        model = targets[target.label]
        if target.condition == "gray" and not model.differs_from(source):
            raise PlanValidationError(f"Target '{target.label}' is declared gray but has the source model's weights")
        if target.condition == "black" and model.architecture == source.architecture:
            raise PlanValidationError(f"Target '{target.label}' is declared black but shares the source architecture")
        if model.num_sources != source.num_sources:
            raise PlanValidationError(
                f"Target '{target.label}' separates {model.num_sources} sources, source model {source.num_sources}"
            )

"""Config file schemas, one per subcommand."""
from typing import Dict, List, Literal, Optional, Type

from pydantic import BaseModel, ConfigDict, Field, model_validator

from attacks.config import AttackConfig
from audio_io.synth import SynthRecipe, default_recipe
from harness.plan import ExperimentPlan, FrameSettings, ModelRef, TrainingSpec
from metrics.ground import GroundMetric

WavEncoding = Literal["float32", "pcm16"]


def _default_metrics() -> List[GroundMetric]:
    return [GroundMetric(kind="sdr"), GroundMetric(kind="sir")]


class CraftInput(BaseModel):
    """A mixture WAV (with optional reference stems) or a synthetic recipe."""

    model_config = ConfigDict(extra="forbid")

    wav: Optional[str] = None
    references: Optional[Dict[str, str]] = None
    synth: Optional[SynthRecipe] = None
    seed: int = 0
    track_id: Optional[str] = None

    @model_validator(mode="after")
    def _check(self):
        if (self.wav is None) == (self.synth is None):
            raise ValueError("input needs exactly one of 'wav' or 'synth'")
        return self


class CraftConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelRef
    input: CraftInput
    attack: AttackConfig = Field(default_factory=AttackConfig)
    metrics: List[GroundMetric] = Field(default_factory=_default_metrics)
    output_dir: str = "sepadv_output"
    encoding: WavEncoding = "float32"
    seed: int = 0


class EvaluateTrack(BaseModel):
    """WAV paths of one track. ``reference`` is the true target source."""

    model_config = ConfigDict(extra="forbid")

    track_id: str
    reference: str
    estimate: Optional[str] = None
    clean_estimate: Optional[str] = None
    mixture: Optional[str] = None
    eta: Optional[str] = None
    sources: Optional[Dict[str, str]] = None
    target_index: int = Field(default=0, ge=0)


class EvaluateConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    tracks: List[EvaluateTrack] = Field(min_length=1)
    metrics: List[GroundMetric] = Field(default_factory=lambda: [GroundMetric(kind="sdr")])
    quantities: List[Literal["value", "DS", "DI", "DSA"]] = Field(default_factory=lambda: ["value"])
    frames: FrameSettings = Field(default_factory=FrameSettings)
    aggregation_order: Literal["aggregate_then_difference", "difference_then_aggregate"] = "aggregate_then_difference"
    output_dir: str = "sepadv_output"
    seed: int = 0


class TrainToyConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    arch: Literal["mask_freq", "conv_time"]
    num_sources: int = Field(default=2, ge=2)
    source_names: Optional[List[str]] = None
    training: TrainingSpec = Field(default_factory=TrainingSpec)
    output_dir: str = "sepadv_output"
    weights_name: str = "model.sepw"
    seed: int = 0

    def model_ref(self) -> ModelRef:
        return ModelRef(
            arch=self.arch,
            num_sources=self.num_sources,
            source_names=self.source_names,
            train=self.training,
        )


class SynthConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    recipe: SynthRecipe = Field(default_factory=default_recipe)
    count: int = Field(default=1, ge=1)
    track_prefix: str = "synth"
    encoding: WavEncoding = "float32"
    output_dir: str = "sepadv_output"
    seed: int = 0


SCHEMAS: Dict[str, Type[BaseModel]] = {
    "craft": CraftConfig,
    "evaluate": EvaluateConfig,
    "transfer": ExperimentPlan,
    "train-toy": TrainToyConfig,
    "synth": SynthConfig,
}

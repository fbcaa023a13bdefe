import hashlib
import json
import math
from typing import Any, Dict, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from dsp.stft import StftConfig

# STPR patch length at 44.1 kHz; scaled proportionally at other rates
REFERENCE_PATCH_LEN = 2048
REFERENCE_RATE = 44100


class ConstraintKind(BaseModel):
    """Perturbation size measure C(eta): global l2, sup norm, or short-term power ratio."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["l2", "sup", "stpr"] = "l2"
    stpr_patch_len: Optional[int] = Field(default=None, ge=1)
    floor: float = Field(default=1e-6, gt=0)

    def patch_length(self, sample_rate: int) -> int:
        if self.stpr_patch_len is not None:
            return self.stpr_patch_len
        return max(1, int(round(REFERENCE_PATCH_LEN * sample_rate / REFERENCE_RATE)))


class AttackConfig(BaseModel):
    """All hyperparameters of one attack run.

    ``lam`` is read from and written as ``lambda`` in config files.
    """

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    method: Literal["gd", "fgsm", "pgd"] = "gd"
    target_source: int = Field(default=0, ge=0)
    epsilon: float = Field(default=0.05, ge=0)
    lam: float = Field(default=100.0, ge=0, alias="lambda")
    iterations: int = Field(default=300, ge=1)
    step: Optional[float] = Field(default=None, gt=0)
    lr: float = Field(default=1e-3, gt=0)
    init_scale: float = Field(default=1e-4, ge=0)
    seed: int = 0
    domain: Literal["time", "frequency"] = "time"
    frequency_mode: Literal["complex", "magnitude"] = "complex"
    griffin_lim_iters: int = Field(default=32, ge=1)
    stft: StftConfig = Field(default_factory=StftConfig)
    constraint: ConstraintKind = Field(default_factory=ConstraintKind)
    delta: Optional[float] = Field(default=None, gt=0)
    attack_all_sources: bool = False
    label: Optional[str] = None

    @model_validator(mode="after")
    def _check(self):
        if self.method in ("fgsm", "pgd") and self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive for {self.method}, got {self.epsilon}")
        if self.method != "gd" and self.domain != "time":
            raise ValueError(f"{self.method} perturbs samples with signed steps; only the time domain is supported")
        return self

    @property
    def resolved_step(self) -> float:
        """PGD step size; defaults to epsilon / sqrt(iterations)."""
        if self.step is not None:
            return self.step
        return self.epsilon / math.sqrt(self.iterations)

    def echo(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True)

    @property
    def config_id(self) -> str:
        if self.label:
            return self.label
        digest = hashlib.sha256(json.dumps(self.echo(), sort_keys=True).encode("utf-8")).hexdigest()
        return f"{self.method}-{digest[:10]}"

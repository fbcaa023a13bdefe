import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from attacks.config import AttackConfig
from audio_io.clip import AudioClip
from file_utils import atomic_write_text

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["iteration", "loss", "objective", "constraint"]


@dataclass
class TraceRecorder:
    """Per-iterate values of the total loss, the data objective and C(eta)."""

    lam: float
    loss: List[float] = field(default_factory=list)
    objective: List[float] = field(default_factory=list)
    constraint: List[float] = field(default_factory=list)
    extras: Dict[str, List[float]] = field(default_factory=dict)

    def record(self, distance: float, constraint: float, **extras: float):
        self.objective.append(-distance)
        self.constraint.append(constraint)
        self.loss.append(-distance + self.lam * constraint)
        for name, value in extras.items():
            self.extras.setdefault(name, []).append(value)

    def replace_last(self, distance: float, constraint: float):
        """Overwrite the final entry with the values of the perturbation actually returned."""
        if not self.loss:
            raise ValueError("No recorded iterate to replace")
        self.objective[-1] = -distance
        self.constraint[-1] = constraint
        self.loss[-1] = -distance + self.lam * constraint

    def __len__(self) -> int:
        return len(self.loss)


@dataclass(frozen=True)
class AttackResult:
    """Crafted perturbation, adversarial input and optimization traces.

    ``adversarial`` is exactly ``x + eta`` sample by sample, whatever domain
    the perturbation was crafted in.
    """

    eta: AudioClip
    adversarial: AudioClip
    loss_trace: Tuple[float, ...]
    objective_trace: Tuple[float, ...]
    constraint_trace: Tuple[float, ...]
    config: AttackConfig
    within_delta: Optional[bool] = None
    extra_traces: Dict[str, Tuple[float, ...]] = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return len(self.loss_trace)

    def trace_table(self) -> pd.DataFrame:
        table = pd.DataFrame({
            "iteration": np.arange(1, self.iterations + 1),
            "loss": self.loss_trace,
            "objective": self.objective_trace,
            "constraint": self.constraint_trace,
        })
        for name, values in self.extra_traces.items():
            table[name] = values
        return table


def build_result(x: AudioClip, eta: np.ndarray, recorder: TraceRecorder, cfg: AttackConfig) -> AttackResult:
    eta_clip = x.with_samples(eta)
    final_constraint = recorder.constraint[-1] if recorder.constraint else 0.0
    return AttackResult(
        eta=eta_clip,
        adversarial=x.with_samples(x.samples + eta_clip.samples),
        loss_trace=tuple(recorder.loss),
        objective_trace=tuple(recorder.objective),
        constraint_trace=tuple(recorder.constraint),
        config=cfg,
        within_delta=None if cfg.delta is None else bool(final_constraint < cfg.delta),
        extra_traces={name: tuple(values) for name, values in recorder.extras.items()},
    )


def export_trace_csv(result: AttackResult, path) -> Path:
    path = atomic_write_text(path, result.trace_table().to_csv(index=False, float_format="%.10g"))
    logger.info(f"Wrote {result.iterations}-row loss trace to {path}")
    return path

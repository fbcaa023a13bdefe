from typing import Callable, Dict

from attacks.config import AttackConfig, ConstraintKind
from attacks.constraints import constraint_value, project_l1_ball, prox_constraint
from attacks.fgsm import craft_fgsm
from attacks.gd import craft_gd
from attacks.pgd import craft_pgd, project_sup_ball
from attacks.traces import AttackResult, export_trace_csv
from audio_io.clip import AudioClip
from models.base import SeparationModel

CRAFTERS: Dict[str, Callable[[SeparationModel, AudioClip, AttackConfig], AttackResult]] = {
    "gd": craft_gd,
    "fgsm": craft_fgsm,
    "pgd": craft_pgd,
}


def craft(model: SeparationModel, x: AudioClip, cfg: AttackConfig) -> AttackResult:
    """Run the attack named by ``cfg.method``."""
    return CRAFTERS[cfg.method](model, x, cfg)


__all__ = [
    "AttackConfig",
    "AttackResult",
    "CRAFTERS",
    "ConstraintKind",
    "constraint_value",
    "craft",
    "craft_fgsm",
    "craft_gd",
    "craft_pgd",
    "export_trace_csv",
    "project_l1_ball",
    "project_sup_ball",
    "prox_constraint",
]

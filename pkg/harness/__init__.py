from harness.matching import MatchOutcome, bisect_parameter, match_di, match_ds
from harness.plan import (
    ClipSpec,
    DiMatching,
    ExperimentPlan,
    ModelRef,
    RegularizerMatching,
    TargetModel,
    TrainingSpec,
    resolve_clips,
    resolve_model,
    validate_conditions,
)
from harness.report import TransferReport, TransferRow, export_example_panels, write_transfer_report
from harness.runner import eta_checksum, run_transfer, run_whitebox
from harness.studies import regularizer_comparison, run_regularizers, run_untargeted, untargeted_effects

__all__ = [
    "ClipSpec",
    "DiMatching",
    "ExperimentPlan",
    "MatchOutcome",
    "ModelRef",
    "RegularizerMatching",
    "TargetModel",
    "TrainingSpec",
    "TransferReport",
    "TransferRow",
    "bisect_parameter",
    "eta_checksum",
    "export_example_panels",
    "match_di",
    "match_ds",
    "regularizer_comparison",
    "resolve_clips",
    "resolve_model",
    "run_regularizers",
    "run_transfer",
    "run_untargeted",
    "run_whitebox",
    "untargeted_effects",
    "validate_conditions",
]

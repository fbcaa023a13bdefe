from dsp.export import export_spectrogram_csv, magnitude_db, spectrogram_table
from dsp.griffin_lim import GriffinLimResult, griffin_lim, griffin_lim_with_trace, spectral_convergence
from dsp.patches import PatchNorms, num_patches, patch_l2_norms, patch_norm_values
from dsp.stft import (
    Spectrogram,
    StftConfig,
    istft,
    istft_adjoint_array,
    istft_array,
    real_inner,
    stft,
    stft_adjoint,
    stft_adjoint_array,
    stft_array,
)

__all__ = [
    "GriffinLimResult",
    "PatchNorms",
    "Spectrogram",
    "StftConfig",
    "export_spectrogram_csv",
    "griffin_lim",
    "griffin_lim_with_trace",
    "istft",
    "istft_adjoint_array",
    "istft_array",
    "magnitude_db",
    "num_patches",
    "patch_l2_norms",
    "patch_norm_values",
    "real_inner",
    "spectral_convergence",
    "spectrogram_table",
    "stft",
    "stft_adjoint",
    "stft_adjoint_array",
    "stft_array",
]

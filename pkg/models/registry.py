import logging
from typing import Dict, List, Optional, Sequence, Type

import numpy as np

from audio_io.clip import AudioClip
from dsp.stft import StftConfig
from errors import ParameterError
from models.base import GradientRequest, SeparationModel
from models.conv_time import ConvTimeModel
from models.mask_freq import MaskFreqModel
from seeding import make_rng

logger = logging.getLogger(__name__)

MODEL_CLASSES: Dict[str, Type[SeparationModel]] = {
    MaskFreqModel.architecture: MaskFreqModel,
    ConvTimeModel.architecture: ConvTimeModel,
}

# plain SGD step sizes that make fit_toy converge on the synthetic material
DEFAULT_LEARNING_RATES = {
    MaskFreqModel.architecture: 10.0,
    ConvTimeModel.architecture: 0.5,
}


def model_class(arch: str) -> Type[SeparationModel]:
    try:
        return MODEL_CLASSES[arch]
    except KeyError:
        raise ParameterError(f"Unknown architecture '{arch}', expected one of {sorted(MODEL_CLASSES)}") from None


def default_learning_rate(arch: str) -> float:
    model_class(arch)
    return DEFAULT_LEARNING_RATES[arch]


def init_model(
    arch: str,
    num_sources: int,
    seed: int,
    source_names: Optional[Sequence[str]] = None,
    stft_cfg: Optional[StftConfig] = None,
    sample_rate: int = 8000,
) -> SeparationModel:
    """Build a model whose weights are drawn from uniform(-s, s), s = 1 / sqrt(fan_in)."""
    cls = model_class(arch)
    if num_sources < 1:
        raise ParameterError(f"num_sources must be at least 1, got {num_sources}")
    weights = {}
    for name, shape in cls.weight_shapes(num_sources, stft_cfg).items():
        bound = 1.0 / np.sqrt(cls.fan_in(name, shape))
        weights[name] = make_rng(seed, "init", arch, name).uniform(-bound, bound, size=shape)
    model = cls(
        weights=weights,
        num_sources=num_sources,
        source_names=source_names,
        stft_cfg=stft_cfg,
        sample_rate=sample_rate,
        seed=seed,
    )
    logger.debug(f"Initialized {model!r} ({sum(w.size for w in model.weights.values())} parameters)")
    return model


def forward(model: SeparationModel, x: AudioClip) -> List[AudioClip]:
    return model.forward(x)


def input_gradient(model: SeparationModel, req: GradientRequest) -> AudioClip:
    return model.input_gradient(req)

from models.base import GradientRequest, SeparationModel
from models.conv_time import ConvTimeModel
from models.layers import Conv1dLayer, Dense
from models.mask_freq import MaskFreqModel
from models.registry import MODEL_CLASSES, default_learning_rate, forward, init_model, input_gradient, model_class
from models.training import TrainingResult, fit_toy, separation_mse
from models.weights import load_weights, read_weights_header, save_weights

__all__ = [
    "Conv1dLayer",
    "ConvTimeModel",
    "Dense",
    "GradientRequest",
    "MODEL_CLASSES",
    "MaskFreqModel",
    "SeparationModel",
    "TrainingResult",
    "default_learning_rate",
    "fit_toy",
    "forward",
    "init_model",
    "input_gradient",
    "load_weights",
    "model_class",
    "read_weights_header",
    "save_weights",
    "separation_mse",
]

from .baselines import FrameAverageEncoder, FrameConvStack, baseline1, baseline2, frame_avg_encode
from .c3d import (
    CONFIGS,
    C3DEncoder,
    Conv,
    EncoderConfig,
    Pool,
    WeightBundle,
    c3d_config,
    classify,
    desk_config,
    encode,
    init_weights,
)
from .hog import hog_descriptor, hog_length
from .layers import conv3d_forward, maxpool3d_forward
from .train import PretrainResult, TrainHyper, pretrain, softmax_cross_entropy
from .weightio import load_weights, save_weights

__all__ = [
    "CONFIGS", "C3DEncoder", "Conv", "EncoderConfig", "FrameAverageEncoder", "FrameConvStack",
    "Pool", "PretrainResult", "TrainHyper", "WeightBundle", "baseline1", "baseline2", "c3d_config",
    "classify", "conv3d_forward", "desk_config", "encode", "frame_avg_encode", "hog_descriptor",
    "hog_length", "init_weights", "load_weights", "maxpool3d_forward", "pretrain", "save_weights",
    "softmax_cross_entropy",
]

"""Numpy neural-network core: conv (direct and spectral), batch norm, FCN, training."""

from .conv import SpectralMask, conv1d, conv1d_backward, conv1d_reference, fft_conv1d, fft_conv1d_backward, fft_length
from .fcn import CheckpointError, FcnModel
from .gradcheck import grad_check
from .layers import BatchNorm1d, Conv1d, Dense, GlobalAvgPool, ReLU, cross_entropy, softmax
from .optim import SGD, Adam, ReduceOnPlateau
from .train import History, NumericError, TrainConfig, evaluate, train

__all__ = [
    "Adam", "BatchNorm1d", "CheckpointError", "Conv1d", "Dense", "FcnModel", "GlobalAvgPool", "History",
    "NumericError", "ReLU", "ReduceOnPlateau", "SGD", "SpectralMask", "TrainConfig", "conv1d",
    "conv1d_backward", "conv1d_reference", "cross_entropy", "evaluate", "fft_conv1d", "fft_conv1d_backward",
    "fft_length", "grad_check", "softmax", "train",
]

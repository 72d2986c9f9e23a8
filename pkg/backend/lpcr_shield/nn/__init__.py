# LPCR Shield - Neural Network Kernel
"""
NumPy conv/batchnorm/relu/maxpool/fc/dropout network with explicit
backward passes, classic-momentum SGD and a finite-difference checker.
"""

from .gradcheck import GradCheckReport, check_model_gradients, gradient_check, relative_error
from .layers import LayerKind, LayerSpec, batchnorm, conv, dropout, fc, maxpool, relu, softmax_layer
from .network import (
    ForwardResult,
    LossGrad,
    Mode,
    ModelParams,
    backward,
    cross_entropy,
    forward,
    infer_shapes,
    init_params,
    log_softmax,
    loss_and_grad,
    sgd_momentum_step,
    softmax,
)
from .serialization import decode_params, encode_params, load_params, save_params

__all__ = [
    "GradCheckReport",
    "check_model_gradients",
    "gradient_check",
    "relative_error",
    "LayerKind",
    "LayerSpec",
    "batchnorm",
    "conv",
    "dropout",
    "fc",
    "maxpool",
    "relu",
    "softmax_layer",
    "ForwardResult",
    "LossGrad",
    "Mode",
    "ModelParams",
    "backward",
    "cross_entropy",
    "forward",
    "infer_shapes",
    "init_params",
    "log_softmax",
    "loss_and_grad",
    "sgd_momentum_step",
    "softmax",
    "decode_params",
    "encode_params",
    "load_params",
    "save_params",
]

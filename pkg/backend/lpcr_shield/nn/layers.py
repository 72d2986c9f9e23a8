# LPCR Shield - Layer Kernels (NHWC, forward and backward)
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

BN_EPSILON = 1e-5
BN_MOMENTUM = 0.1


class LayerKind(str, Enum):
    CONV3X3 = "conv3x3"
    BATCHNORM = "batchnorm"
    RELU = "relu"
    MAXPOOL2 = "maxpool2"
    FC = "fc"
    DROPOUT = "dropout"
    SOFTMAX = "softmax"


@dataclass(frozen=True)
class LayerSpec:
    """One layer of a sequential network.

    `units` is the filter count for conv3x3 and the neuron count for fc;
    `rate` is the drop probability for dropout. Convolutions feeding a
    batchnorm are built without a bias.
    """

    kind: LayerKind
    units: int = 0
    rate: float = 0.0
    bias: bool = True

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {"kind": self.kind.value}
        if self.kind in (LayerKind.CONV3X3, LayerKind.FC):
            payload["units"] = self.units
            payload["bias"] = self.bias
        if self.kind == LayerKind.DROPOUT:
            payload["rate"] = self.rate
        return payload

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "LayerSpec":
        return cls(
            kind=LayerKind(payload["kind"]),
            units=int(payload.get("units", 0)),
            rate=float(payload.get("rate", 0.0)),
            bias=bool(payload.get("bias", True)),
        )


def conv(units: int, bias: bool = True) -> LayerSpec:
    return LayerSpec(LayerKind.CONV3X3, units=units, bias=bias)


def batchnorm() -> LayerSpec:
    return LayerSpec(LayerKind.BATCHNORM)


def relu() -> LayerSpec:
    return LayerSpec(LayerKind.RELU)


def maxpool() -> LayerSpec:
    return LayerSpec(LayerKind.MAXPOOL2)


def fc(units: int, bias: bool = True) -> LayerSpec:
    return LayerSpec(LayerKind.FC, units=units, bias=bias)


def dropout(rate: float) -> LayerSpec:
    return LayerSpec(LayerKind.DROPOUT, rate=rate)


def softmax_layer() -> LayerSpec:
    return LayerSpec(LayerKind.SOFTMAX)


# conv3x3, same padding, stride 1; weights are (3, 3, C_in, C_out)

def _im2col(x: np.ndarray) -> np.ndarray:
    n, h, w, c = x.shape
    padded = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    windows = sliding_window_view(padded, (3, 3), axis=(1, 2))  # n, h, w, c, 3, 3
    return windows.transpose(0, 1, 2, 4, 5, 3).reshape(n * h * w, 9 * c)


def conv_forward(x: np.ndarray, weight: np.ndarray, bias: Optional[np.ndarray]) -> np.ndarray:
    n, h, w, c = x.shape
    out = _im2col(x) @ weight.reshape(9 * c, -1)
    if bias is not None:
        out += bias
    return out.reshape(n, h, w, -1)


def conv_backward(
    x: np.ndarray, weight: np.ndarray, dout: np.ndarray, has_bias: bool
) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    n, h, w, c = x.shape
    filters = weight.shape[-1]
    dout2d = dout.reshape(-1, filters)

    dweight = (_im2col(x).T @ dout2d).reshape(weight.shape)
    dbias = dout2d.sum(axis=0) if has_bias else None

    dcols = (dout2d @ weight.reshape(9 * c, filters).T).reshape(n, h, w, 3, 3, c)
    dpadded = np.zeros((n, h + 2, w + 2, c), dtype=dout.dtype)
    for kh in range(3):
        for kw in range(3):
            dpadded[:, kh:kh + h, kw:kw + w, :] += dcols[:, :, :, kh, kw, :]
    return dpadded[:, 1:-1, 1:-1, :], dweight, dbias


# maxpool2, 2x2 stride 2; odd trailing rows/columns are dropped

def maxpool_forward(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    n, h, w, c = x.shape
    ho, wo = h // 2, w // 2
    blocks = (
        x[:, :2 * ho, :2 * wo, :]
        .reshape(n, ho, 2, wo, 2, c)
        .transpose(0, 1, 3, 5, 2, 4)
        .reshape(n, ho, wo, c, 4)
    )
    argmax = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, argmax[..., None], axis=-1)[..., 0]
    return out, argmax


def maxpool_backward(dout: np.ndarray, argmax: np.ndarray, input_shape: Tuple[int, ...]) -> np.ndarray:
    n, h, w, c = input_shape
    ho, wo = h // 2, w // 2
    dblocks = np.zeros((n, ho, wo, c, 4), dtype=dout.dtype)
    np.put_along_axis(dblocks, argmax[..., None], dout[..., None], axis=-1)
    dx = np.zeros(input_shape, dtype=dout.dtype)
    dx[:, :2 * ho, :2 * wo, :] = (
        dblocks.reshape(n, ho, wo, c, 2, 2)
        .transpose(0, 1, 4, 2, 5, 3)
        .reshape(n, 2 * ho, 2 * wo, c)
    )
    return dx


# batchnorm over every axis except the channel axis

@dataclass
class BatchNormCache:
    xhat: np.ndarray
    inv_std: np.ndarray
    gamma: np.ndarray
    batch_stats: bool


def batchnorm_forward(
    x: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    train: bool,
) -> Tuple[np.ndarray, BatchNormCache, Tuple[np.ndarray, np.ndarray]]:
    """Returns (output, cache, (new_running_mean, new_running_var))"""
    axes = tuple(range(x.ndim - 1))
    if train:
        count = int(np.prod([x.shape[a] for a in axes]))
        mean = x.mean(axis=axes)
        var = x.var(axis=axes)
        unbiased = var * count / (count - 1) if count > 1 else var
        new_mean = (1.0 - BN_MOMENTUM) * running_mean + BN_MOMENTUM * mean
        new_var = (1.0 - BN_MOMENTUM) * running_var + BN_MOMENTUM * unbiased
        buffers = (new_mean.astype(running_mean.dtype), new_var.astype(running_var.dtype))
    else:
        mean, var = running_mean, running_var
        buffers = (running_mean, running_var)

    inv_std = 1.0 / np.sqrt(var + BN_EPSILON)
    xhat = (x - mean) * inv_std
    out = gamma * xhat + beta
    return out.astype(x.dtype, copy=False), BatchNormCache(xhat, inv_std, gamma, train), buffers


def batchnorm_backward(dout: np.ndarray, cache: BatchNormCache) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    axes = tuple(range(dout.ndim - 1))
    dgamma = (dout * cache.xhat).sum(axis=axes)
    dbeta = dout.sum(axis=axes)
    dxhat = dout * cache.gamma
    if not cache.batch_stats:
        return (dxhat * cache.inv_std).astype(dout.dtype, copy=False), dgamma, dbeta

    count = int(np.prod([dout.shape[a] for a in axes]))
    dx = (cache.inv_std / count) * (
        count * dxhat
        - dxhat.sum(axis=axes)
        - cache.xhat * (dxhat * cache.xhat).sum(axis=axes)
    )
    return dx.astype(dout.dtype, copy=False), dgamma, dbeta


def relu_forward(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    mask = x > 0
    return x * mask, mask


def dropout_forward(x: np.ndarray, rate: float, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Inverted dropout: kept units are scaled by 1/(1-rate)"""
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / x.dtype.type(1.0 - rate)
    return x * keep, keep


def fc_forward(x: np.ndarray, weight: np.ndarray, bias: Optional[np.ndarray]) -> np.ndarray:
    out = x.reshape(x.shape[0], -1) @ weight
    if bias is not None:
        out += bias
    return out


def fc_backward(
    x: np.ndarray, weight: np.ndarray, dout: np.ndarray, has_bias: bool
) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    flat = x.reshape(x.shape[0], -1)
    dweight = flat.T @ dout
    dbias = dout.sum(axis=0) if has_bias else None
    dx = (dout @ weight.T).reshape(x.shape)
    return dx, dweight, dbias

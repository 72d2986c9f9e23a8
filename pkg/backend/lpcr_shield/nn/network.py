# LPCR Shield - Sequential Network: shapes, init, forward, backward, SGD
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.exceptions import ArchitectureError, DatasetValidationError, LayerShapeError
from ..utils.rng import RngStream
from . import layers as L
from .layers import LayerKind, LayerSpec

Shape = Tuple[int, ...]
Tensors = Dict[str, np.ndarray]


class Mode(str, Enum):
    TRAIN = "train"
    EVAL = "eval"


def tensor_name(index: int, role: str) -> str:
    return f"layer{index:02d}.{role}"


@dataclass
class ModelParams:
    """Layer topology plus every trainable tensor and batchnorm buffer"""

    specs: Tuple[LayerSpec, ...]
    input_shape: Shape
    params: Tensors
    buffers: Tensors = field(default_factory=dict)

    @property
    def num_outputs(self) -> int:
        return infer_shapes(self.specs, self.input_shape)[-1][0]

    @property
    def parameter_count(self) -> int:
        return int(sum(tensor.size for tensor in self.params.values()))

    @property
    def has_dropout(self) -> bool:
        return any(spec.kind == LayerKind.DROPOUT and spec.rate > 0 for spec in self.specs)

    def copy(self) -> "ModelParams":
        return ModelParams(
            specs=self.specs,
            input_shape=self.input_shape,
            params={name: tensor.copy() for name, tensor in self.params.items()},
            buffers={name: tensor.copy() for name, tensor in self.buffers.items()},
        )

    def replace(self, params: Optional[Tensors] = None, buffers: Optional[Tensors] = None) -> "ModelParams":
        return ModelParams(
            specs=self.specs,
            input_shape=self.input_shape,
            params=self.params if params is None else params,
            buffers=self.buffers if buffers is None else buffers,
        )

    def astype(self, dtype: Any) -> "ModelParams":
        return ModelParams(
            specs=self.specs,
            input_shape=self.input_shape,
            params={name: tensor.astype(dtype) for name, tensor in self.params.items()},
            buffers={name: tensor.astype(dtype) for name, tensor in self.buffers.items()},
        )


def infer_shapes(specs: Sequence[LayerSpec], input_shape: Shape) -> List[Shape]:
    """Output shape of every layer, excluding the batch axis"""
    shapes: List[Shape] = []
    shape = tuple(int(d) for d in input_shape)
    if not specs:
        raise ArchitectureError("network has no layers")

    for index, spec in enumerate(specs):
        kind = spec.kind
        if kind == LayerKind.CONV3X3:
            if len(shape) != 3:
                raise LayerShapeError(index, kind.value, f"expects an HxWxC input, got {shape}")
            if spec.units < 1:
                raise ArchitectureError(f"layer {index}: conv3x3 needs at least one filter")
            shape = (shape[0], shape[1], spec.units)
        elif kind == LayerKind.MAXPOOL2:
            if len(shape) != 3:
                raise LayerShapeError(index, kind.value, f"expects an HxWxC input, got {shape}")
            if shape[0] < 2 or shape[1] < 2:
                raise LayerShapeError(index, kind.value, f"{shape[0]}x{shape[1]} input would pool to zero")
            shape = (shape[0] // 2, shape[1] // 2, shape[2])
        elif kind == LayerKind.FC:
            if spec.units < 1:
                raise ArchitectureError(f"layer {index}: fc needs at least one neuron")
            shape = (spec.units,)
        elif kind == LayerKind.DROPOUT:
            if not 0.0 <= spec.rate < 1.0:
                raise ArchitectureError(f"layer {index}: dropout rate {spec.rate} outside [0, 1)")
        elif kind == LayerKind.SOFTMAX:
            if index != len(specs) - 1:
                raise ArchitectureError(f"layer {index}: softmax must be the last layer")
            if len(shape) != 1:
                raise LayerShapeError(index, kind.value, f"expects a flat input, got {shape}")
        shapes.append(shape)

    if len(shapes[-1]) != 1:
        raise ArchitectureError(f"network must end in a flat output, got {shapes[-1]}")
    return shapes


def init_params(
    specs: Sequence[LayerSpec],
    input_shape: Shape,
    rng: Union[np.random.Generator, RngStream],
    dtype: Any = np.float32,
    scheme: str = "he",
) -> ModelParams:
    """He-normal weights, zero biases, unit batchnorm scale; `scheme="zeros"` zeroes every weight"""
    if isinstance(rng, RngStream):
        rng = rng.generator()
    if scheme not in ("he", "zeros"):
        raise ArchitectureError(f"unknown init scheme '{scheme}'")

    specs = tuple(specs)
    shapes = infer_shapes(specs, input_shape)
    params: Tensors = {}
    buffers: Tensors = {}
    previous = tuple(input_shape)

    for index, spec in enumerate(specs):
        if spec.kind == LayerKind.CONV3X3:
            fan_in = 9 * previous[-1]
            weight_shape: Shape = (3, 3, previous[-1], spec.units)
        elif spec.kind == LayerKind.FC:
            fan_in = int(np.prod(previous))
            weight_shape = (fan_in, spec.units)
        elif spec.kind == LayerKind.BATCHNORM:
            channels = previous[-1]
            params[tensor_name(index, "gamma")] = np.ones(channels, dtype=dtype)
            params[tensor_name(index, "beta")] = np.zeros(channels, dtype=dtype)
            buffers[tensor_name(index, "running_mean")] = np.zeros(channels, dtype=dtype)
            buffers[tensor_name(index, "running_var")] = np.ones(channels, dtype=dtype)
            previous = shapes[index]
            continue
        else:
            previous = shapes[index]
            continue

        if scheme == "zeros":
            weight = np.zeros(weight_shape, dtype=dtype)
        else:
            weight = (rng.standard_normal(weight_shape) * np.sqrt(2.0 / fan_in)).astype(dtype)
        params[tensor_name(index, "weight")] = weight
        if spec.bias:
            params[tensor_name(index, "bias")] = np.zeros(spec.units, dtype=dtype)
        previous = shapes[index]

    return ModelParams(specs=specs, input_shape=tuple(input_shape), params=params, buffers=buffers)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(np.asarray(logits)))


@dataclass
class ForwardResult:
    logits: np.ndarray
    inputs: List[np.ndarray]
    caches: List[Any]
    buffers: Tensors
    mode: Mode


def _check_batch(model: ModelParams, batch: np.ndarray) -> None:
    kind = model.specs[0].kind.value
    if batch.ndim == 0 or batch.shape[0] == 0:
        raise LayerShapeError(0, kind, "empty batch")
    if tuple(batch.shape[1:]) != tuple(model.input_shape):
        raise LayerShapeError(
            0, kind, f"expected per-sample shape {tuple(model.input_shape)}, got {tuple(batch.shape[1:])}"
        )


def forward(
    model: ModelParams,
    batch: np.ndarray,
    mode: Union[Mode, str] = Mode.EVAL,
    rng: Optional[np.random.Generator] = None,
    dropout: bool = True,
) -> ForwardResult:
    """Run the network; returns pre-softmax logits and the caches backward needs.

    Eval mode uses running batchnorm statistics and never touches an RNG.
    Train mode normalizes with batch statistics and returns the updated
    running buffers instead of mutating `model`.
    """
    mode = Mode(mode)
    _check_batch(model, batch)
    train = mode == Mode.TRAIN
    params = model.params
    buffers = dict(model.buffers)

    x = batch
    inputs: List[np.ndarray] = []
    caches: List[Any] = []
    for index, spec in enumerate(model.specs):
        inputs.append(x)
        kind = spec.kind
        cache: Any = None
        if kind == LayerKind.CONV3X3:
            x = L.conv_forward(x, params[tensor_name(index, "weight")], params.get(tensor_name(index, "bias")))
        elif kind == LayerKind.BATCHNORM:
            mean_key, var_key = tensor_name(index, "running_mean"), tensor_name(index, "running_var")
            x, cache, (buffers[mean_key], buffers[var_key]) = L.batchnorm_forward(
                x,
                params[tensor_name(index, "gamma")],
                params[tensor_name(index, "beta")],
                buffers[mean_key],
                buffers[var_key],
                train,
            )
        elif kind == LayerKind.RELU:
            x, cache = L.relu_forward(x)
        elif kind == LayerKind.MAXPOOL2:
            x, cache = L.maxpool_forward(x)
        elif kind == LayerKind.FC:
            x = L.fc_forward(x, params[tensor_name(index, "weight")], params.get(tensor_name(index, "bias")))
        elif kind == LayerKind.DROPOUT:
            if train and dropout and spec.rate > 0:
                if rng is None:
                    raise ArchitectureError("train-mode dropout needs a random generator")
                x, cache = L.dropout_forward(x, spec.rate, rng)
        # softmax is applied by the loss; forward stops at the logits
        caches.append(cache)

    return ForwardResult(logits=x, inputs=inputs, caches=caches, buffers=buffers, mode=mode)


def backward(model: ModelParams, result: ForwardResult, dlogits: np.ndarray) -> Tuple[Tensors, np.ndarray]:
    """Gradients of every parameter tensor and of the network input"""
    params = model.params
    grads: Tensors = {}
    dx = dlogits
    for index in range(len(model.specs) - 1, -1, -1):
        spec = model.specs[index]
        kind = spec.kind
        x = result.inputs[index]
        cache = result.caches[index]
        if kind == LayerKind.CONV3X3:
            has_bias = tensor_name(index, "bias") in params
            dx, dweight, dbias = L.conv_backward(x, params[tensor_name(index, "weight")], dx, has_bias)
            grads[tensor_name(index, "weight")] = dweight
            if dbias is not None:
                grads[tensor_name(index, "bias")] = dbias
        elif kind == LayerKind.BATCHNORM:
            dx, dgamma, dbeta = L.batchnorm_backward(dx, cache)
            grads[tensor_name(index, "gamma")] = dgamma
            grads[tensor_name(index, "beta")] = dbeta
        elif kind == LayerKind.RELU:
            dx = dx * cache
        elif kind == LayerKind.MAXPOOL2:
            dx = L.maxpool_backward(dx, cache, x.shape)
        elif kind == LayerKind.FC:
            has_bias = tensor_name(index, "bias") in params
            dx, dweight, dbias = L.fc_backward(x, params[tensor_name(index, "weight")], dx, has_bias)
            grads[tensor_name(index, "weight")] = dweight
            if dbias is not None:
                grads[tensor_name(index, "bias")] = dbias
        elif kind == LayerKind.DROPOUT:
            if cache is not None:
                dx = dx * cache
    return {name: grads[name] for name in params}, dx


@dataclass
class LossGrad:
    loss: float
    grads: Tensors
    input_grad: np.ndarray
    buffers: Tensors
    logits: np.ndarray


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean softmax cross-entropy and its gradient with respect to the logits"""
    logp = log_softmax(logits)
    n = logits.shape[0]
    rows = np.arange(n)
    loss = float(-logp[rows, labels].mean())
    dlogits = np.exp(logp)
    dlogits[rows, labels] -= 1.0
    return loss, (dlogits / n).astype(logits.dtype, copy=False)


def loss_and_grad(
    model: ModelParams,
    batch: np.ndarray,
    labels: Sequence[int],
    mode: Union[Mode, str] = Mode.TRAIN,
    rng: Optional[np.random.Generator] = None,
    dropout: bool = True,
) -> LossGrad:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.ndim != 1 or labels.shape[0] != batch.shape[0]:
        raise DatasetValidationError("labels", f"expected {batch.shape[0]} labels, got shape {labels.shape}")
    outputs = model.num_outputs
    if labels.size and (labels.min() < 0 or labels.max() >= outputs):
        raise DatasetValidationError("labels", f"labels must lie in 0..{outputs - 1}")

    result = forward(model, batch, mode=mode, rng=rng, dropout=dropout)
    loss, dlogits = cross_entropy(result.logits, labels)
    grads, input_grad = backward(model, result, dlogits)
    return LossGrad(loss=loss, grads=grads, input_grad=input_grad, buffers=result.buffers, logits=result.logits)


def sgd_momentum_step(
    params: Tensors, velocity: Tensors, grads: Tensors, lr: float, momentum: float
) -> Tuple[Tensors, Tensors]:
    """Classic momentum: v <- momentum*v + g; p <- p - lr*v"""
    if set(grads) != set(params):
        raise ArchitectureError(f"gradient names {sorted(grads)} do not match parameters {sorted(params)}")
    new_params: Tensors = {}
    new_velocity: Tensors = {}
    for name, value in params.items():
        grad = grads[name]
        if grad.shape != value.shape:
            raise ArchitectureError(f"gradient for '{name}' has shape {grad.shape}, expected {value.shape}")
        v = velocity.get(name)
        v = grad.copy() if v is None else momentum * v + grad
        new_velocity[name] = v.astype(value.dtype, copy=False)
        new_params[name] = (value - lr * v).astype(value.dtype, copy=False)
    return new_params, new_velocity

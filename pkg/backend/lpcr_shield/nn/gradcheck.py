# LPCR Shield - Finite-Difference Gradient Verification
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.exceptions import ArchitectureError, GradientCheckFailedError
from ..core.logging import get_logger
from ..utils.rng import RngStream
from .layers import LayerSpec
from .network import ModelParams, Mode, init_params, loss_and_grad

logger = get_logger('lpcr.nn')

DEFAULT_EPSILON = 1e-5
DEFAULT_TOLERANCE = 1e-4
MAX_CHECK_PARAMS = 5000
INPUT_TENSOR = "input"


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """max |a - n| / max(|a|, |n|, 1e-8) over all entries"""
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / scale)) if analytic.size else 0.0


@dataclass
class GradCheckReport:
    errors: Dict[str, float] = field(default_factory=dict)
    parameter_count: int = 0
    epsilon: float = DEFAULT_EPSILON
    mode: str = Mode.EVAL.value

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)

    @property
    def worst_tensor(self) -> Optional[str]:
        if not self.errors:
            return None
        return max(self.errors, key=lambda name: self.errors[name])

    def passed(self, tolerance: float = DEFAULT_TOLERANCE) -> bool:
        return self.max_error < tolerance

    def raise_for_tolerance(self, tolerance: float = DEFAULT_TOLERANCE) -> None:
        if not self.passed(tolerance):
            raise GradientCheckFailedError(self.worst_tensor or "?", self.max_error, tolerance)

    def to_dict(self) -> Dict[str, object]:
        return {
            "errors": dict(self.errors),
            "max_error": self.max_error,
            "worst_tensor": self.worst_tensor,
            "parameter_count": self.parameter_count,
            "epsilon": self.epsilon,
            "mode": self.mode,
        }


def _randomize_for_check(model: ModelParams, rng: np.random.Generator) -> ModelParams:
    """Move batchnorm scale/shift and running statistics away from their trivial init"""
    params = dict(model.params)
    buffers = dict(model.buffers)
    for name in params:
        if name.endswith(".gamma"):
            params[name] = 1.0 + 0.1 * rng.standard_normal(params[name].shape)
        elif name.endswith(".beta") or name.endswith(".bias"):
            params[name] = 0.1 * rng.standard_normal(params[name].shape)
    for name in buffers:
        if name.endswith(".running_mean"):
            buffers[name] = 0.1 * rng.standard_normal(buffers[name].shape)
        elif name.endswith(".running_var"):
            buffers[name] = rng.uniform(0.5, 1.5, buffers[name].shape)
    return model.replace(params=params, buffers=buffers)


def check_model_gradients(
    model: ModelParams,
    batch: np.ndarray,
    labels: np.ndarray,
    epsilon: float = DEFAULT_EPSILON,
    mode: Union[Mode, str] = Mode.EVAL,
    include_input: bool = False,
) -> GradCheckReport:
    """Compare analytic gradients against central differences, entry by entry"""
    mode = Mode(mode)
    if mode == Mode.TRAIN and model.has_dropout:
        raise ArchitectureError("gradient check cannot run with active dropout; use eval mode or rate 0")

    model = model.astype(np.float64)
    batch = np.asarray(batch, dtype=np.float64)

    def loss_at(m: ModelParams, x: np.ndarray) -> float:
        return loss_and_grad(m, x, labels, mode=mode).loss

    analytic = loss_and_grad(model, batch, labels, mode=mode)
    report = GradCheckReport(parameter_count=model.parameter_count, epsilon=epsilon, mode=mode.value)

    for name, tensor in model.params.items():
        numeric = np.zeros_like(tensor)
        for idx in np.ndindex(tensor.shape):
            original = tensor[idx]
            tensor[idx] = original + epsilon
            plus = loss_at(model, batch)
            tensor[idx] = original - epsilon
            minus = loss_at(model, batch)
            tensor[idx] = original
            numeric[idx] = (plus - minus) / (2.0 * epsilon)
        report.errors[name] = relative_error(analytic.grads[name], numeric)

    if include_input:
        numeric = np.zeros_like(batch)
        shifted = batch.copy()
        for idx in np.ndindex(batch.shape):
            original = shifted[idx]
            shifted[idx] = original + epsilon
            plus = loss_at(model, shifted)
            shifted[idx] = original - epsilon
            minus = loss_at(model, shifted)
            shifted[idx] = original
            numeric[idx] = (plus - minus) / (2.0 * epsilon)
        report.errors[INPUT_TENSOR] = relative_error(analytic.input_grad, numeric)

    return report


def gradient_check(
    layer_specs: Sequence[LayerSpec],
    seed: int,
    epsilon: float = DEFAULT_EPSILON,
    input_shape: Tuple[int, int, int] = (16, 16, 3),
    batch_size: int = 2,
    mode: Union[Mode, str] = Mode.EVAL,
    include_input: bool = False,
) -> GradCheckReport:
    """Build a tiny seeded net and batch from `layer_specs` and verify its gradients"""
    mode = Mode(mode)
    stream = RngStream(seed, ("gradcheck",))
    model = init_params(layer_specs, input_shape, stream.child("init"), dtype=np.float64)
    if model.parameter_count > MAX_CHECK_PARAMS:
        raise ArchitectureError(
            f"gradient check net has {model.parameter_count} parameters; keep it under {MAX_CHECK_PARAMS}"
        )
    if mode == Mode.TRAIN and model.has_dropout:
        raise ArchitectureError("gradient check cannot run with active dropout; use eval mode or rate 0")

    rng = stream.child("data").generator()
    model = _randomize_for_check(model, rng)
    batch = rng.uniform(0.0, 1.0, (batch_size,) + tuple(input_shape))
    labels = rng.integers(0, model.num_outputs, batch_size)

    report = check_model_gradients(model, batch, labels, epsilon=epsilon, mode=mode, include_input=include_input)
    logger.info(
        f"Gradient check over {report.parameter_count} parameters: "
        f"max relative error {report.max_error:.3e} ({report.worst_tensor})"
    )
    return report

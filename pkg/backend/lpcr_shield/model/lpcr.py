# LPCR Shield - LPCR Character Classifier
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.exceptions import ArchitectureError, ConfigurationError, ModelFileError
from ..core.logging import get_logger
from ..dataset.types import DIM_MULTIPLE, NUM_CLASSES
from ..nn import layers as nl
from ..nn.layers import LayerSpec
from ..nn.network import Mode, ModelParams, cross_entropy, forward, backward, init_params, log_softmax
from ..nn.serialization import load_params, save_params
from ..utils.rng import RngStream, derive_seed
from .types import ArchitectureConfig, TrainConfig

logger = get_logger('lpcr.model')

# filters per conv layer, one tuple per pooling block
CONV_BLOCKS: Tuple[Tuple[int, ...], ...] = ((16, 16), (32, 32), (64, 64), (128, 128, 128))
DEFAULT_FC_WIDTHS = (2304, 500)
DEFAULT_EVAL_BATCH = 256


def scaled_width(base: int, width_multiplier: float) -> int:
    return max(1, int(round(base * width_multiplier)))


def lpcr_layer_specs(
    num_classes: int = NUM_CLASSES,
    fc_widths: Sequence[int] = DEFAULT_FC_WIDTHS,
    width_multiplier: float = 1.0,
    dropout_rate: float = 0.5,
) -> Tuple[LayerSpec, ...]:
    """conv-bn-relu blocks with a max-pool after each block, then fc-relu-dropout-fc-relu-fc-softmax"""
    specs: List[LayerSpec] = []
    for block in CONV_BLOCKS:
        for filters in block:
            specs += [nl.conv(scaled_width(filters, width_multiplier), bias=False), nl.batchnorm(), nl.relu()]
        specs.append(nl.maxpool())
    first, second = fc_widths
    specs += [
        nl.fc(first), nl.relu(), nl.dropout(dropout_rate),
        nl.fc(second), nl.relu(),
        nl.fc(num_classes), nl.softmax_layer(),
    ]
    return tuple(specs)


def flatten_width(input_dims: Sequence[int], width_multiplier: float = 1.0) -> int:
    height, width = input_dims
    pools = len(CONV_BLOCKS)
    return (height >> pools) * (width >> pools) * scaled_width(CONV_BLOCKS[-1][-1], width_multiplier)


def preprocess(images: np.ndarray) -> np.ndarray:
    """uint8 pixels scale to [0, 1] float32; float input is taken as already scaled"""
    images = np.asarray(images)
    if images.ndim == 3:
        images = images[None]
    if images.dtype == np.uint8:
        return images.astype(np.float32) / np.float32(255.0)
    return images.astype(np.float32, copy=False)


@dataclass
class LpcrModel:
    network: ModelParams
    num_classes: int = NUM_CLASSES
    provenance: Dict[str, Any] = field(default_factory=dict)
    eval_batch_size: int = DEFAULT_EVAL_BATCH

    @property
    def input_dims(self) -> Tuple[int, int]:
        return self.network.input_shape[0], self.network.input_shape[1]

    @property
    def parameter_count(self) -> int:
        return self.network.parameter_count

    def logits(self, images: np.ndarray) -> np.ndarray:
        batch = preprocess(images)
        chunks = [
            forward(self.network, batch[start:start + self.eval_batch_size], mode=Mode.EVAL).logits
            for start in range(0, batch.shape[0], self.eval_batch_size)
        ]
        return np.concatenate(chunks, axis=0)

    def predict_log_proba(self, images: np.ndarray) -> np.ndarray:
        return log_softmax(self.logits(images).astype(np.float64))

    def predict_proba(self, images: np.ndarray) -> np.ndarray:
        return np.exp(self.predict_log_proba(images))

    def predict(self, images: np.ndarray) -> np.ndarray:
        return self.predict_log_proba(images).argmax(axis=1)

    def loss_input_gradient(self, images: np.ndarray, labels: Sequence[int]) -> np.ndarray:
        """Per-sample gradient of cross-entropy with respect to the [0, 1]-scaled input"""
        batch = preprocess(images)
        labels = np.asarray(labels, dtype=np.int64)
        result = forward(self.network, batch, mode=Mode.EVAL)
        _, dlogits = cross_entropy(result.logits, labels)
        _, input_grad = backward(self.network, result, dlogits)
        return input_grad * batch.shape[0]

    def copy(self) -> "LpcrModel":
        return LpcrModel(
            network=self.network.copy(),
            num_classes=self.num_classes,
            provenance=dict(self.provenance),
            eval_batch_size=self.eval_batch_size,
        )


def build_lpcr(
    input_dims: Sequence[int],
    num_classes: int = NUM_CLASSES,
    fc_widths: Sequence[int] = DEFAULT_FC_WIDTHS,
    width_multiplier: float = 1.0,
    seed: int = 0,
    dropout_rate: float = 0.5,
) -> LpcrModel:
    """Initialize the LPCR network for (H, W) RGB input"""
    if len(input_dims) != 2:
        raise ArchitectureError(f"input dims must be (H, W), got {tuple(input_dims)}")
    height, width = int(input_dims[0]), int(input_dims[1])
    if height <= 0 or width <= 0 or height % DIM_MULTIPLE or width % DIM_MULTIPLE:
        raise ArchitectureError(f"input dims {height}x{width} must be positive multiples of {DIM_MULTIPLE}")
    if num_classes < 2:
        raise ArchitectureError(f"need at least two classes, got {num_classes}")

    specs = lpcr_layer_specs(num_classes, fc_widths, width_multiplier, dropout_rate)
    network = init_params(specs, (height, width, 3), RngStream(seed, ("lpcr", "init")))
    provenance = {
        "init_seed": seed,
        "width_multiplier": width_multiplier,
        "fc_widths": list(fc_widths),
        "flatten_width": flatten_width((height, width), width_multiplier),
        "attack_aware": False,
    }
    logger.debug(f"Built LPCR for {height}x{width} input with {network.parameter_count} parameters")
    return LpcrModel(network=network, num_classes=num_classes, provenance=provenance)


def build_from_config(
    input_dims: Sequence[int],
    config: TrainConfig,
    *seed_path: Union[str, int],
    architecture: Optional[ArchitectureConfig] = None,
) -> LpcrModel:
    if config.seed is None:
        raise ConfigurationError("train.seed", "seed must be resolved before building a model")
    arch = architecture or config.architecture
    return build_lpcr(
        input_dims,
        fc_widths=arch.fc_widths,
        width_multiplier=arch.width_multiplier,
        dropout_rate=arch.dropout_rate,
        seed=derive_seed(config.seed, "init", *seed_path),
    )


def save_model(model: LpcrModel, path: Union[str, Path]) -> Path:
    metadata = {"num_classes": model.num_classes, "provenance": model.provenance}
    saved = save_params(path, model.network, metadata)
    logger.info(f"Saved model to {saved}")
    return saved


def load_model(path: Union[str, Path], num_classes: int = NUM_CLASSES) -> LpcrModel:
    network, metadata = load_params(path)
    declared = metadata.get("num_classes")
    if declared != num_classes or network.num_outputs != num_classes:
        raise ModelFileError(str(path), f"model has {declared} classes, expected {num_classes}")
    return LpcrModel(network=network, num_classes=num_classes, provenance=dict(metadata.get("provenance", {})))

# LPCR Shield - Fast Gradient Sign Baseline
from typing import List, Sequence, Union

import numpy as np

from ..core.exceptions import ConfigurationError
from ..dataset.types import GlyphImage, stack_pixels
from .exhaustive import clean_record
from .metrics import mse
from .types import FGSM, AttackRecord, Classifier


def _check_epsilon(epsilon: float) -> None:
    if not epsilon > 0:
        raise ConfigurationError("epsilon", f"FGSM step must be positive on the [0, 1] scale, got {epsilon}")


def _signed_step(pixels: np.ndarray, gradient: np.ndarray, epsilon: float) -> np.ndarray:
    scaled = pixels.astype(np.float64) / 255.0
    stepped = np.clip(scaled + epsilon * np.sign(gradient), 0.0, 1.0)
    return np.clip(np.rint(stepped * 255.0), 0, 255).astype(np.uint8)


def fgsm_attack(
    model: Classifier, image: Union[GlyphImage, np.ndarray], true_label: int, epsilon: float
) -> np.ndarray:
    """x' = clip(x + eps * sign(dloss/dx), 0, 1) on the [0, 1] scale, returned as uint8"""
    _check_epsilon(epsilon)
    pixels = image.pixels if isinstance(image, GlyphImage) else np.asarray(image)
    gradient = model.loss_input_gradient(pixels[None], [true_label])[0]
    return _signed_step(pixels, gradient, epsilon)


def fgsm_dataset(
    model: Classifier, dataset: Sequence[GlyphImage], epsilon: float, batch_size: int = 64
) -> List[AttackRecord]:
    """One FGSM record per image, in input order"""
    _check_epsilon(epsilon)
    images = list(dataset)
    records: List[AttackRecord] = []
    for start in range(0, len(images), batch_size):
        chunk = images[start:start + batch_size]
        pixels = stack_pixels(chunk)
        labels = [image.label for image in chunk]
        perturbed = _signed_step(pixels, model.loss_input_gradient(pixels, labels), epsilon)
        log_proba = model.predict_log_proba(perturbed)

        for k, image in enumerate(chunk):
            predicted = int(np.argmax(log_proba[k]))
            if predicted == image.label:
                records.append(clean_record(model, image.pixels, image.label, FGSM, image.id, FGSM, queries=1))
                continue
            records.append(AttackRecord(
                image_id=image.id,
                true_label=image.label,
                shape=FGSM,
                success=True,
                patch=None,
                predicted_label=predicted,
                confidence=float(np.exp(log_proba[k, predicted])),
                loss=float(-log_proba[k, image.label]),
                mse=mse(image.pixels, perturbed[k]),
                method=FGSM,
                image_dims=image.dims,
                queries=2,
                adversarial=perturbed[k],
            ))
    return records

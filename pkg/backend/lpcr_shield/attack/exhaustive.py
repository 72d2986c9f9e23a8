# LPCR Shield - Exhaustive Geometric Mask Attack
from typing import Optional, Tuple, Union

import numpy as np

from ..dataset.types import GlyphImage
from .metrics import mse
from .patches import PatchShape, PatchSpec, darkest_pixel, perturb_image, positions
from .types import EXHAUSTIVE, AttackConfig, AttackRecord, Classifier


def _pixels(image: Union[GlyphImage, np.ndarray]) -> np.ndarray:
    return image.pixels if isinstance(image, GlyphImage) else np.asarray(image)


def clean_record(
    model: Classifier,
    pixels: np.ndarray,
    true_label: int,
    shape: str,
    image_id: str,
    method: str,
    queries: int,
) -> AttackRecord:
    """Failure record: the input comes back untouched, scored as-is"""
    log_proba = model.predict_log_proba(pixels[None])[0]
    predicted = int(np.argmax(log_proba))
    return AttackRecord(
        image_id=image_id,
        true_label=int(true_label),
        shape=shape,
        success=False,
        patch=None,
        predicted_label=predicted,
        confidence=float(np.exp(log_proba[predicted])),
        loss=float(-log_proba[true_label]),
        mse=0.0,
        method=method,
        image_dims=(pixels.shape[0], pixels.shape[1]),
        queries=queries + 1,
        adversarial=pixels,
    )


def exhaustive_mask_attack(
    model: Classifier,
    image: Union[GlyphImage, np.ndarray],
    true_label: int,
    shape: Union[PatchShape, str],
    config: Optional[AttackConfig] = None,
    image_id: str = "",
) -> AttackRecord:
    """Smallest patch size that fools the model, and the highest-loss placement at that size.

    Sizes grow from 1 to the shape's threshold. At each size every in-bounds
    placement is scored; a placement is a hit when it changes the image, is
    misclassified (unless `require_misclassification` is off) and raises the
    loss above the best hit so far at this size. The sweep stops at the first
    size with a hit. Placements that leave the image unchanged are not scored.
    """
    config = config or AttackConfig()
    shape = PatchShape(shape)
    pixels = _pixels(image)
    if isinstance(image, GlyphImage) and not image_id:
        image_id = image.id
    dims = pixels.shape[:2]
    color = darkest_pixel(pixels)
    flat_original = pixels.reshape(1, -1)

    queries = 0
    chosen: Optional[Tuple[PatchSpec, np.ndarray, int, np.ndarray]] = None
    for size in range(1, config.size_limit(shape, dims) + 1):
        best_loss = 0.0
        hits = 0
        best: Optional[Tuple[PatchSpec, np.ndarray, int, np.ndarray]] = None
        candidates = [PatchSpec(shape, position, size, color) for position in positions(shape, size, dims)]

        for start in range(0, len(candidates), config.batch_size):
            chunk = candidates[start:start + config.batch_size]
            perturbed = np.stack([perturb_image(pixels, patch) for patch in chunk])
            changed = np.flatnonzero(np.any(perturbed.reshape(len(chunk), -1) != flat_original, axis=1))
            if changed.size == 0:
                continue
            log_proba = model.predict_log_proba(perturbed[changed])
            queries += int(changed.size)
            losses = -log_proba[:, true_label]
            predictions = log_proba.argmax(axis=1)

            for k, index in enumerate(changed):
                if config.require_misclassification and predictions[k] == true_label:
                    continue
                if losses[k] > best_loss:
                    best_loss = float(losses[k])
                    hits += 1
                    best = (chunk[index], perturbed[index], int(predictions[k]), log_proba[k])

        if hits:
            chosen = best
            break

    if chosen is None or chosen[2] == true_label:
        return clean_record(model, pixels, true_label, shape.value, image_id, EXHAUSTIVE, queries)

    patch, adversarial, predicted, log_proba = chosen
    return AttackRecord(
        image_id=image_id,
        true_label=int(true_label),
        shape=shape.value,
        success=True,
        patch=patch,
        predicted_label=predicted,
        confidence=float(np.exp(log_proba[predicted])),
        loss=float(-log_proba[true_label]),
        mse=mse(pixels, adversarial),
        method=EXHAUSTIVE,
        image_dims=(dims[0], dims[1]),
        queries=queries,
        adversarial=adversarial,
    )

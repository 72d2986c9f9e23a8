# LPCR Shield - Hard-Set, Transfer, Rare-Case and Random-Patch Evaluation
from dataclasses import dataclass
from typing import Any, Dict, Sequence, Union

import numpy as np
import pandas as pd

from ..attack.patches import ALL_SHAPES
from ..attack.types import Classifier
from ..core.exceptions import DatasetValidationError, EmptyHardSetError
from ..dataset.types import CLASS_ALPHABET, NUM_CLASSES, GlyphDataset, GlyphImage, stack_pixels

HardSet = Union[GlyphDataset, Sequence[GlyphImage]]


def _predict(model: Classifier, images: Sequence[GlyphImage]) -> np.ndarray:
    return model.predict_log_proba(stack_pixels(images))


def _non_empty(hard_set: HardSet) -> list:
    images = list(hard_set)
    if not images:
        raise EmptyHardSetError()
    return images


def hard_set_accuracy(model: Classifier, hard_set: HardSet) -> float:
    images = _non_empty(hard_set)
    predicted = _predict(model, images).argmax(axis=1)
    labels = np.array([image.label for image in images])
    return float((predicted == labels).mean())


@dataclass
class TransferResult:
    misclassified: int
    total: int
    per_class: pd.DataFrame

    @property
    def rate(self) -> float:
        return self.misclassified / self.total

    def to_dict(self) -> Dict[str, Any]:
        return {"misclassified": self.misclassified, "total": self.total, "rate": self.rate}


def transfer_eval(hard_set: HardSet, external_model: Classifier) -> TransferResult:
    """How much of the hard set also fools a model that never took part in generating it"""
    images = _non_empty(hard_set)
    labels = np.array([image.label for image in images], dtype=np.int64)
    wrong = _predict(external_model, images).argmax(axis=1) != labels

    totals = np.bincount(labels, minlength=NUM_CLASSES)
    misses = np.bincount(labels, weights=wrong.astype(np.float64), minlength=NUM_CLASSES).astype(np.int64)
    per_class = pd.DataFrame({
        "class": list(CLASS_ALPHABET),
        "total": totals,
        "misclassified": misses,
        "rate": np.divide(misses, totals, out=np.full(NUM_CLASSES, np.nan), where=totals > 0),
    })
    return TransferResult(misclassified=int(wrong.sum()), total=len(images), per_class=per_class)


RARE_CASE_COLUMNS = [
    "id", "source_id", "shape", "true",
    "baseline_predicted", "baseline_confidence", "aa_predicted", "aa_confidence",
]


def rare_cases(hard_set: HardSet, aa_model: Classifier) -> pd.DataFrame:
    """Hard-set images the attack-aware model still gets wrong, with both models' predictions"""
    images = _non_empty(hard_set)
    extras = {}
    if isinstance(hard_set, GlyphDataset):
        extras = {entry.id: entry.extra for entry in hard_set.manifest.entries}

    log_proba = _predict(aa_model, images)
    rows = []
    for image, row in zip(images, log_proba):
        predicted = int(np.argmax(row))
        if predicted == image.label:
            continue
        extra = extras.get(image.id, {})
        baseline_label = extra.get("predicted_label")
        rows.append({
            "id": image.id,
            "source_id": extra.get("source_id", ""),
            "shape": extra.get("shape", ""),
            "true": image.symbol,
            "baseline_predicted": CLASS_ALPHABET[baseline_label] if baseline_label is not None else "",
            "baseline_confidence": extra.get("confidence", np.nan),
            "aa_predicted": CLASS_ALPHABET[predicted],
            "aa_confidence": float(np.exp(row[predicted])),
        })
    return pd.DataFrame(rows, columns=RARE_CASE_COLUMNS)


@dataclass
class RandomPatchResult:
    count: int
    clean_accuracy: float
    patched_accuracy: float
    per_shape: Dict[str, float]

    @property
    def accuracy_drop(self) -> float:
        return self.clean_accuracy - self.patched_accuracy

    def to_dict(self) -> Dict[str, Any]:
        return {
            "count": self.count,
            "clean_accuracy": self.clean_accuracy,
            "patched_accuracy": self.patched_accuracy,
            "accuracy_drop": self.accuracy_drop,
            "per_shape": dict(self.per_shape),
        }


def random_patch_eval(model: Classifier, clean_set: HardSet, patched_set: GlyphDataset) -> RandomPatchResult:
    """Accuracy before and after one random patch per image, split by the patch shape"""
    clean = _non_empty(clean_set)
    patched = _non_empty(patched_set)
    if [image.id for image in clean] != [image.id for image in patched]:
        raise DatasetValidationError("patched_set", "patched images do not pair one-to-one with the clean images")

    labels = np.array([image.label for image in clean], dtype=np.int64)
    clean_hits = _predict(model, clean).argmax(axis=1) == labels
    patched_hits = _predict(model, patched).argmax(axis=1) == labels

    shapes = {entry.id: entry.extra.get("patch", {}).get("shape", "") for entry in patched_set.manifest.entries}
    patch_shapes = np.array([shapes.get(image.id, "") for image in patched])
    per_shape: Dict[str, float] = {}
    for shape in [s.value for s in ALL_SHAPES if s.value in set(patch_shapes)]:
        mask = patch_shapes == shape
        per_shape[shape] = float(patched_hits[mask].mean())
    return RandomPatchResult(
        count=len(clean),
        clean_accuracy=float(clean_hits.mean()),
        patched_accuracy=float(patched_hits.mean()),
        per_shape=per_shape,
    )

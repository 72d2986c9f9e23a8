# LPCR Shield - Stratified Splits and Folds
from collections import defaultdict
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..core.exceptions import DatasetValidationError
from ..utils.rng import derive_rng
from .types import GlyphImage


def _indices_by_class(dataset: Sequence[GlyphImage]) -> Dict[int, List[int]]:
    groups: Dict[int, List[int]] = defaultdict(list)
    for index, image in enumerate(dataset):
        groups[image.label].append(index)
    return dict(sorted(groups.items()))


def split(dataset: Sequence[GlyphImage], ratio: float, seed: int) -> Tuple[List[GlyphImage], List[GlyphImage]]:
    """Stratified train/validation split; both halves keep the input order"""
    if not 0.0 < ratio < 1.0:
        raise DatasetValidationError("ratio", f"ratio must lie in (0, 1), got {ratio}")

    train_indices: List[int] = []
    for label, indices in _indices_by_class(dataset).items():
        if len(indices) < 2:
            raise DatasetValidationError("dataset", f"class {label} has {len(indices)} image(s); need at least 2")
        n_train = int(np.floor(ratio * len(indices) + 0.5))
        n_train = min(max(n_train, 1), len(indices) - 1)
        order = derive_rng(seed, "split", label).permutation(len(indices))
        train_indices.extend(indices[i] for i in order[:n_train])

    chosen = set(train_indices)
    train = [image for i, image in enumerate(dataset) if i in chosen]
    validation = [image for i, image in enumerate(dataset) if i not in chosen]
    return train, validation


def stratified_folds(dataset: Sequence[GlyphImage], k: int, seed: int) -> List[List[int]]:
    """Partition dataset indices into k disjoint folds, dealing each class round-robin"""
    if k < 2:
        raise DatasetValidationError("k", f"need at least 2 folds, got {k}")

    folds: List[List[int]] = [[] for _ in range(k)]
    for label, indices in _indices_by_class(dataset).items():
        if len(indices) < k:
            raise DatasetValidationError("dataset", f"class {label} has {len(indices)} image(s); need at least {k}")
        order = derive_rng(seed, "folds", label).permutation(len(indices))
        for position, i in enumerate(order):
            folds[position % k].append(indices[i])
    return [sorted(fold) for fold in folds]

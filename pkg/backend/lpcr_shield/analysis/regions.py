# LPCR Shield - Attack-Prone Region Maps
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..attack.patches import PatchShape
from ..attack.types import AttackRecord
from ..core.exceptions import AnalysisException
from ..dataset.types import CLASS_ALPHABET


@dataclass
class RegionMap:
    """Fraction of successful band attacks for one (true, predicted) pair that cover each row (or column)"""

    true_label: int
    predicted_label: int
    shape: PatchShape
    counts: np.ndarray
    successes: int
    image_dims: Tuple[int, int]

    @property
    def scores(self) -> np.ndarray:
        return self.counts / self.successes

    @property
    def axis(self) -> str:
        return "row" if self.shape == PatchShape.HORIZONTAL else "column"

    def to_image(self) -> np.ndarray:
        """HxW grayscale overlay; each row (or column) is its score scaled to [0, 255]"""
        height, width = self.image_dims
        levels = np.rint(self.scores * 255.0).astype(np.uint8)
        if self.shape == PatchShape.HORIZONTAL:
            return np.repeat(levels[:, None], width, axis=1)
        return np.repeat(levels[None, :], height, axis=0)

    def stem(self, tag: str) -> str:
        true, predicted = CLASS_ALPHABET[self.true_label], CLASS_ALPHABET[self.predicted_label]
        return f"region_{tag}_{self.shape.value}_{true}_{predicted}"

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "true": CLASS_ALPHABET[self.true_label],
            "predicted": CLASS_ALPHABET[self.predicted_label],
            self.axis: np.arange(len(self.counts)),
            "hits": self.counts,
            "successes": self.successes,
            "score": self.scores,
        })


def attack_prone_regions(
    records: Sequence[AttackRecord], shape: Union[PatchShape, str] = PatchShape.HORIZONTAL
) -> List[RegionMap]:
    """One map per (true, predicted) pair with at least one successful band attack"""
    shape = PatchShape(shape)
    if shape == PatchShape.CIRCULAR:
        raise AnalysisException("region maps are defined for band patches only", code="UNSUPPORTED_REGION_SHAPE")

    groups: Dict[Tuple[int, int], List[AttackRecord]] = {}
    for record in records:
        if record.success and record.shape == shape.value and record.patch is not None:
            groups.setdefault((record.true_label, record.predicted_label), []).append(record)

    maps = []
    for (true_label, predicted_label), members in sorted(groups.items()):
        dims = members[0].image_dims
        length = dims[0] if shape == PatchShape.HORIZONTAL else dims[1]
        counts = np.zeros(length, dtype=np.int64)
        for record in members:
            start = record.patch.position[0]  # type: ignore[union-attr]
            counts[start:start + record.patch.size] += 1  # type: ignore[union-attr]
        maps.append(RegionMap(true_label, predicted_label, shape, counts, len(members), (dims[0], dims[1])))
    return maps

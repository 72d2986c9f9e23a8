# LPCR Shield - Confusion Matrices
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..attack.types import AttackRecord, Classifier
from ..dataset.types import CLASS_ALPHABET, NUM_CLASSES, GlyphImage, stack_pixels
from ..utils.helpers import write_csv, write_json
from ..utils.netpbm import write_pgm


@dataclass
class ConfusionMatrix:
    """Counts with rows = true class and columns = predicted class"""

    counts: np.ndarray
    classes: List[str]

    @property
    def percentages(self) -> np.ndarray:
        totals = self.counts.sum(axis=1, keepdims=True)
        return np.divide(
            100.0 * self.counts, totals, out=np.zeros(self.counts.shape, dtype=np.float64), where=totals > 0
        )

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_frame(self, percent: bool = True) -> pd.DataFrame:
        values = self.percentages if percent else self.counts
        frame = pd.DataFrame(values, index=self.classes, columns=self.classes)
        frame.index.name = "true"
        return frame

    def to_dict(self) -> Dict[str, Any]:
        return {
            "classes": list(self.classes),
            "counts": self.counts.tolist(),
            "percentages": np.round(self.percentages, 6).tolist(),
        }

    def to_image(self, cell: int = 16) -> np.ndarray:
        """Grayscale heatmap, one cell x cell block per matrix entry, 100% = white"""
        levels = np.rint(self.percentages * 255.0 / 100.0).astype(np.uint8)
        return np.kron(levels, np.ones((cell, cell), dtype=np.uint8))

    def write(self, directory: Union[str, Path], stem: str, cell: int = 16) -> Dict[str, Path]:
        directory = Path(directory)
        paths = {
            "json": directory / f"{stem}.json",
            "csv": directory / f"{stem}.csv",
            "pgm": directory / f"{stem}.pgm",
        }
        write_json(paths["json"], self.to_dict())
        write_csv(paths["csv"], self.to_frame(), index=True)
        write_pgm(paths["pgm"], self.to_image(cell))
        return paths


def confusion_from_labels(
    true_labels: Sequence[int], predicted_labels: Sequence[int], num_classes: int = NUM_CLASSES
) -> ConfusionMatrix:
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    if len(true_labels):
        np.add.at(counts, (np.asarray(true_labels, dtype=np.int64), np.asarray(predicted_labels, dtype=np.int64)), 1)
    classes = list(CLASS_ALPHABET[:num_classes]) if num_classes <= NUM_CLASSES else [str(i) for i in range(num_classes)]
    return ConfusionMatrix(counts=counts, classes=classes)


def confusion_matrix(
    source: Union[Sequence[AttackRecord], Classifier],
    dataset: Optional[Sequence[GlyphImage]] = None,
    num_classes: int = NUM_CLASSES,
) -> ConfusionMatrix:
    """From attack records (true vs. post-attack prediction) or from a model over a dataset"""
    if dataset is not None:
        images = list(dataset)
        if not images:
            return confusion_from_labels([], [], num_classes)
        predicted = source.predict_log_proba(stack_pixels(images)).argmax(axis=1)  # type: ignore[union-attr]
        return confusion_from_labels([image.label for image in images], predicted, num_classes)

    records = list(source)  # type: ignore[arg-type]
    return confusion_from_labels(
        [record.true_label for record in records], [record.predicted_label for record in records], num_classes
    )


def top_confusions(matrix: ConfusionMatrix, k: int = 10) -> pd.DataFrame:
    """The k most frequent off-diagonal (true, predicted) pairs"""
    percentages = matrix.percentages
    rows = [
        {
            "true": matrix.classes[t],
            "predicted": matrix.classes[p],
            "count": int(matrix.counts[t, p]),
            "percent": float(percentages[t, p]),
            "_t": t,
            "_p": p,
        }
        for t in range(matrix.counts.shape[0])
        for p in range(matrix.counts.shape[1])
        if t != p and matrix.counts[t, p] > 0
    ]
    frame = pd.DataFrame(rows, columns=["true", "predicted", "count", "percent", "_t", "_p"])
    frame = frame.sort_values(["count", "percent", "_t", "_p"], ascending=[False, False, True, True], kind="mergesort")
    return frame.drop(columns=["_t", "_p"]).head(k).reset_index(drop=True)

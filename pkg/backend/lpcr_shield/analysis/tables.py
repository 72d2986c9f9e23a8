# LPCR Shield - Attack Outcome Tables
from typing import Dict, List, Sequence, Set

import numpy as np
import pandas as pd

from ..attack.patches import ALL_SHAPES
from ..attack.types import FGSM, AttackRecord
from ..core.exceptions import RecordMismatchError
from ..dataset.types import CLASS_ALPHABET, NUM_CLASSES

SHAPE_ORDER = [shape.value for shape in ALL_SHAPES] + [FGSM]
AVERAGE_ROW = "Average"
TOTAL_ROW = "All"


def ordered_shapes(records: Sequence[AttackRecord]) -> List[str]:
    present = {record.shape for record in records}
    known = [shape for shape in SHAPE_ORDER if shape in present]
    return known + sorted(present - set(SHAPE_ORDER))


def misclassification_distribution(records: Sequence[AttackRecord], num_classes: int = NUM_CLASSES) -> pd.DataFrame:
    """Per class: image count and, per shape, how many attacks fooled the model.

    Every class keeps a row even without images; the trailing "All" row
    carries the overall rate (sum misclassified / sum total).
    """
    shapes = ordered_shapes(records)
    images_per_class: Dict[int, Set[str]] = {label: set() for label in range(num_classes)}
    fooled = {shape: np.zeros(num_classes, dtype=np.int64) for shape in shapes}
    for record in records:
        images_per_class[record.true_label].add(record.image_id)
        if record.success:
            fooled[record.shape][record.true_label] += 1

    totals = np.array([len(images_per_class[label]) for label in range(num_classes)], dtype=np.int64)
    frame = pd.DataFrame({"class": list(CLASS_ALPHABET[:num_classes]), "total": totals})
    for shape in shapes:
        frame[f"{shape}_misclassified"] = fooled[shape]
        frame[f"{shape}_rate"] = np.divide(
            fooled[shape], totals, out=np.full(num_classes, np.nan), where=totals > 0
        )

    overall: Dict[str, object] = {"class": TOTAL_ROW, "total": int(totals.sum())}
    for shape in shapes:
        count = int(fooled[shape].sum())
        overall[f"{shape}_misclassified"] = count
        overall[f"{shape}_rate"] = count / overall["total"] if overall["total"] else np.nan  # type: ignore[operator]
    return pd.concat([frame, pd.DataFrame([overall])], ignore_index=True)


def confidence_mse_table(records: Sequence[AttackRecord], num_classes: int = NUM_CLASSES) -> pd.DataFrame:
    """Mean confidence (percent) and mean MSE of successful attacks, per class and shape.

    Classes without a success stay NaN; the "Average" row is the mean of the
    classes that have one.
    """
    shapes = ordered_shapes(records)
    index = list(CLASS_ALPHABET[:num_classes])
    columns: Dict[str, np.ndarray] = {}
    for shape in shapes:
        confidence = np.full(num_classes, np.nan)
        error = np.full(num_classes, np.nan)
        for label in range(num_classes):
            hits = [r for r in records if r.shape == shape and r.true_label == label and r.success]
            if hits:
                confidence[label] = 100.0 * float(np.mean([r.confidence for r in hits]))
                error[label] = float(np.mean([r.mse for r in hits]))
        columns[f"{shape}_confidence"] = confidence
        columns[f"{shape}_mse"] = error

    frame = pd.DataFrame(columns, index=index)
    average = pd.DataFrame([frame.mean(axis=0, skipna=True)], index=[AVERAGE_ROW])
    frame = pd.concat([frame, average]) if shapes else pd.DataFrame(index=index + [AVERAGE_ROW])
    frame.index.name = "class"
    return frame


def _rates(records: Sequence[AttackRecord]) -> Dict[str, float]:
    rates = {}
    for shape in ordered_shapes(records):
        shape_records = [r for r in records if r.shape == shape]
        rates[shape] = sum(r.success for r in shape_records) / len(shape_records)
    return rates


def success_rate_comparison(
    baseline_records: Sequence[AttackRecord], aa_records: Sequence[AttackRecord]
) -> pd.DataFrame:
    """Per-shape success rate of the baseline vs. the attack-aware model"""
    base_shapes = ordered_shapes(baseline_records)
    aa_shapes = ordered_shapes(aa_records)
    if base_shapes != aa_shapes:
        raise RecordMismatchError("shape sets differ", base_shapes, aa_shapes)
    for shape in base_shapes:
        base_ids = sorted(r.image_id for r in baseline_records if r.shape == shape)
        aa_ids = sorted(r.image_id for r in aa_records if r.shape == shape)
        if base_ids != aa_ids:
            raise RecordMismatchError(f"images attacked with '{shape}' differ", len(base_ids), len(aa_ids))

    base_rates = _rates(baseline_records)
    aa_rates = _rates(aa_records)
    return pd.DataFrame(
        [
            {
                "shape": shape,
                "baseline_rate": base_rates[shape],
                "aa_rate": aa_rates[shape],
                "delta": aa_rates[shape] - base_rates[shape],
            }
            for shape in base_shapes
        ],
        columns=["shape", "baseline_rate", "aa_rate", "delta"],
    )

# LPCR Shield - Dataset-Level Attacks, Records and Hard Sets
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..core.exceptions import DatasetValidationError
from ..core.logging import get_logger, log_attack_summary, log_performance_metric
from ..dataset.storage import save_dataset
from ..dataset.types import DatasetManifest, GlyphDataset, GlyphImage, ManifestEntry
from ..utils.helpers import default_threads, ensure_dir, write_csv
from .exhaustive import exhaustive_mask_attack
from .patches import PatchShape
from .types import AttackConfig, AttackRecord, Classifier

logger = get_logger('lpcr.attack')

SUMMARY_COLUMNS = ["shape", "attempts", "successes", "rate", "mean_confidence", "mean_mse"]


@dataclass
class AttackRun:
    records: List[AttackRecord]
    hard_set: GlyphDataset


def hard_set_id(image_id: str, shape: str) -> str:
    return f"{image_id}__{shape}"


def build_hard_set(records: Sequence[AttackRecord], dims: Tuple[int, int]) -> GlyphDataset:
    """Every successful adversarial image, linked back to its source through the manifest"""
    images: List[GlyphImage] = []
    entries: List[ManifestEntry] = []
    for record in records:
        if not record.success or record.adversarial is None:
            continue
        image_id = hard_set_id(record.image_id, record.shape)
        images.append(GlyphImage(pixels=record.adversarial, label=record.true_label, id=image_id))
        entries.append(ManifestEntry(
            id=image_id,
            label=record.true_label,
            filename=f"images/{image_id}.ppm",
            extra={
                "source_id": record.image_id,
                "shape": record.shape,
                "patch": record.patch.to_dict() if record.patch else None,
                "predicted_label": record.predicted_label,
                "confidence": record.confidence,
            },
        ))
    manifest = DatasetManifest(dims=dims, entries=entries, metadata={"kind": "hard_set"})
    return GlyphDataset(images=images, manifest=manifest)


def attack_dataset(
    model: Classifier,
    dataset: Sequence[GlyphImage],
    shapes: Optional[Sequence[Union[PatchShape, str]]] = None,
    config: Optional[AttackConfig] = None,
    threads: Optional[int] = None,
) -> AttackRun:
    """Attack every (image, shape) pair in parallel; records come back sorted by image id, then shape"""
    config = config or AttackConfig()
    shape_list = [PatchShape(s) for s in (shapes if shapes is not None else config.shapes)]
    images = sorted(dataset, key=lambda image: image.id)
    if not images:
        raise DatasetValidationError("dataset", "cannot attack an empty dataset")
    tasks = [(image, shape) for image in images for shape in shape_list]
    workers = threads or default_threads()

    def run(task: Tuple[GlyphImage, PatchShape]) -> AttackRecord:
        image, shape = task
        return exhaustive_mask_attack(model, image.pixels, image.label, shape, config, image_id=image.id)

    started = time.perf_counter()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        records = list(pool.map(run, tasks))
    log_performance_metric("attack_time", time.perf_counter() - started, "s", tasks=len(tasks), threads=workers)

    for shape in shape_list:
        shape_records = [r for r in records if r.shape == shape.value]
        log_attack_summary(shape.value, len(shape_records), sum(r.success for r in shape_records))

    return AttackRun(records=records, hard_set=build_hard_set(records, images[0].dims))


def write_records(path: Union[str, Path], records: Sequence[AttackRecord]) -> None:
    """One JSON object per line, keys sorted"""
    lines = [json.dumps(record.to_dict(), sort_keys=True) for record in records]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def read_records(path: Union[str, Path]) -> List[AttackRecord]:
    text = Path(path).read_text(encoding="utf-8")
    return [AttackRecord.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]


def attack_summary(records: Sequence[AttackRecord]) -> pd.DataFrame:
    """Per-shape attempts, successes, rate and the mean confidence/MSE over successes"""
    rows = []
    shapes: List[str] = []
    for record in records:
        if record.shape not in shapes:
            shapes.append(record.shape)
    for shape in shapes:
        shape_records = [r for r in records if r.shape == shape]
        successes = [r for r in shape_records if r.success]
        rows.append({
            "shape": shape,
            "attempts": len(shape_records),
            "successes": len(successes),
            "rate": len(successes) / len(shape_records),
            "mean_confidence": float(np.mean([r.confidence for r in successes])) if successes else np.nan,
            "mean_mse": float(np.mean([r.mse for r in successes])) if successes else np.nan,
        })
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def write_attack_summary(path: Union[str, Path], records: Sequence[AttackRecord]) -> pd.DataFrame:
    summary = attack_summary(records)
    write_csv(path, summary)
    return summary


def save_hard_set(path: Union[str, Path], hard_set: GlyphDataset) -> None:
    ensure_dir(path)
    save_dataset(path, hard_set)
    logger.info(f"Hard set with {len(hard_set)} images saved to {path}")

# LPCR Shield - Report Bundle Assembly
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from ..attack.patches import ALL_SHAPES, PatchShape
from ..attack.runner import attack_summary
from ..attack.types import AttackRecord, Classifier
from ..core.logging import get_logger
from ..dataset.types import GlyphDataset
from ..utils.helpers import ensure_dir, write_csv, write_json
from ..utils.netpbm import write_pgm
from .confusion import confusion_matrix, top_confusions
from .evaluation import RandomPatchResult, hard_set_accuracy, rare_cases, transfer_eval
from .regions import RegionMap, attack_prone_regions
from .tables import confidence_mse_table, misclassification_distribution, ordered_shapes, success_rate_comparison

logger = get_logger('lpcr.analysis')


class AnalysisConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    top_k: int = Field(default=10, ge=1)
    region_shapes: List[PatchShape] = Field(default_factory=lambda: [PatchShape.HORIZONTAL, PatchShape.VERTICAL])
    heatmap_cell: int = Field(default=16, ge=1)
    transfer_width_multiplier: float = Field(default=0.5, gt=0.0)
    transfer_seed: Optional[int] = None
    random_patch_seed: Optional[int] = None


@dataclass
class ReportBundle:
    root: Path
    files: Dict[str, Path] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)

    def add(self, key: str, path: Path) -> None:
        self.files[key] = path


def _write_table(bundle: ReportBundle, key: str, frame: pd.DataFrame, index: bool = False) -> None:
    path = bundle.root / f"{key}.csv"
    write_csv(path, frame, index=index)
    bundle.add(key, path)


def _model_tables(bundle: ReportBundle, tag: str, records: Sequence[AttackRecord], config: AnalysisConfig) -> None:
    _write_table(bundle, f"attack_summary_{tag}", attack_summary(records))
    _write_table(bundle, f"misclassification_{tag}", misclassification_distribution(records))
    _write_table(bundle, f"confidence_mse_{tag}", confidence_mse_table(records), index=True)

    # FGSM records have no patch; the overall matrix sums the patch shapes only
    patch_shapes = {shape.value for shape in ALL_SHAPES}
    overall = confusion_matrix([r for r in records if r.shape in patch_shapes])
    _write_table(bundle, f"top_confusions_{tag}", top_confusions(overall, config.top_k))
    for shape in ordered_shapes(records):
        shape_records = [r for r in records if r.shape == shape]
        for kind, path in confusion_matrix(shape_records).write(
            bundle.root, f"confusion_{tag}_{shape}", config.heatmap_cell
        ).items():
            bundle.add(f"confusion_{tag}_{shape}_{kind}", path)

    for shape in config.region_shapes:
        maps: List[RegionMap] = attack_prone_regions(records, shape)
        frames = [region.to_frame() for region in maps]
        axis = "row" if shape == PatchShape.HORIZONTAL else "column"
        columns = ["true", "predicted", axis, "hits", "successes", "score"]
        frame = pd.concat(frames) if frames else pd.DataFrame(columns=columns)
        _write_table(bundle, f"regions_{tag}_{shape.value}", frame)
        region_dir = ensure_dir(bundle.root / "regions")
        for region in maps:
            path = region_dir / f"{region.stem(tag)}.pgm"
            write_pgm(path, region.to_image())
            bundle.add(region.stem(tag), path)


def write_report(
    out_dir: Union[str, Path],
    baseline_records: Sequence[AttackRecord],
    aa_records: Optional[Sequence[AttackRecord]] = None,
    hard_set: Optional[GlyphDataset] = None,
    baseline_model: Optional[Classifier] = None,
    aa_model: Optional[Classifier] = None,
    transfer_model: Optional[Classifier] = None,
    config: Optional[AnalysisConfig] = None,
    random_patch: Optional[Mapping[str, RandomPatchResult]] = None,
    tag: str = "lpcr",
    aa_tag: str = "aa_lpcr",
) -> ReportBundle:
    """Write every table, heatmap and region map the inputs allow; zero records give an empty-but-valid bundle"""
    config = config or AnalysisConfig()
    bundle = ReportBundle(root=ensure_dir(out_dir))
    baseline_records = list(baseline_records)

    _model_tables(bundle, tag, baseline_records, config)
    bundle.summary["records"] = {tag: len(baseline_records)}
    bundle.summary["success_rates"] = {tag: attack_summary(baseline_records).set_index("shape")["rate"].to_dict()}

    if aa_records is not None:
        aa_records = list(aa_records)
        _model_tables(bundle, aa_tag, aa_records, config)
        bundle.summary["records"][aa_tag] = len(aa_records)
        bundle.summary["success_rates"][aa_tag] = attack_summary(aa_records).set_index("shape")["rate"].to_dict()
        if baseline_records and aa_records:
            _write_table(bundle, "success_rate_comparison", success_rate_comparison(baseline_records, aa_records))

    if hard_set is not None and len(hard_set) > 0:
        hard: Dict[str, Any] = {"size": len(hard_set)}
        if baseline_model is not None:
            hard[f"{tag}_accuracy"] = hard_set_accuracy(baseline_model, hard_set)
        if aa_model is not None:
            hard[f"{aa_tag}_accuracy"] = hard_set_accuracy(aa_model, hard_set)
            _write_table(bundle, "rare_cases", rare_cases(hard_set, aa_model))
        if transfer_model is not None:
            transfer = transfer_eval(hard_set, transfer_model)
            hard["transfer"] = transfer.to_dict()
            _write_table(bundle, "transfer", transfer.per_class)
        bundle.summary["hard_set"] = hard
    else:
        bundle.summary["hard_set"] = {"size": 0}

    if random_patch:
        rows = [{"model": name, **result.to_dict()} for name, result in random_patch.items()]
        frame = pd.DataFrame(rows).drop(columns="per_shape")
        for shape in ALL_SHAPES:
            frame[f"accuracy_{shape.value}"] = [row["per_shape"].get(shape.value, float("nan")) for row in rows]
        _write_table(bundle, "random_patch", frame)
        bundle.summary["random_patch"] = {name: result.to_dict() for name, result in random_patch.items()}

    summary_path = bundle.root / "summary.json"
    bundle.summary["files"] = sorted(str(path.relative_to(bundle.root)) for path in bundle.files.values())
    write_json(summary_path, bundle.summary)
    bundle.add("summary", summary_path)
    logger.info(f"Report with {len(bundle.files)} files written to {bundle.root}")
    return bundle

import dataclasses
import json

import numpy as np
import pandas as pd
import pytest

from lpcr_shield.advtrain import AdvMixConfig, random_patch_set
from lpcr_shield.analysis import (
    RandomPatchResult,
    attack_prone_regions,
    confidence_mse_table,
    confusion_from_labels,
    confusion_matrix,
    hard_set_accuracy,
    misclassification_distribution,
    random_patch_eval,
    rare_cases,
    success_rate_comparison,
    top_confusions,
    transfer_eval,
    write_report,
)
from lpcr_shield.attack import PatchShape, attack_dataset
from lpcr_shield.core.exceptions import (
    AnalysisException,
    DatasetValidationError,
    EmptyHardSetError,
    RecordMismatchError,
)
from lpcr_shield.dataset.types import GlyphImage
from lpcr_shield.utils.netpbm import decode_netpbm

from tests.fixtures.models import DARK_ROW, ConstantClassifier, bright_image

pytestmark = pytest.mark.unit


@pytest.fixture
def hardened_records(sample_records):
    """The same attacks, all failed"""
    return [
        dataclasses.replace(r, success=False, patch=None, predicted_label=r.true_label, mse=0.0)
        for r in sample_records
    ]


@pytest.fixture
def hard_set(detector, bright_images):
    return attack_dataset(detector, bright_images, ["horizontal"], threads=1).hard_set


class TestConfusion:
    def test_counts_from_records(self, sample_records):
        matrix = confusion_matrix(sample_records)
        assert matrix.counts[0, :3].tolist() == [1, 2, 1]
        assert matrix.counts[1, :2].tolist() == [1, 1]
        assert matrix.total == 6
        assert matrix.percentages[0, :3].tolist() == [25.0, 50.0, 25.0]
        assert matrix.percentages[5].sum() == 0.0

    def test_from_model(self, constant_model, bright_images):
        matrix = confusion_matrix(constant_model, bright_images)
        assert matrix.counts[0, 0] == 4
        assert matrix.total == 4

    def test_heatmap_image(self, sample_records):
        image = confusion_matrix(sample_records).to_image(cell=4)
        assert image.shape == (52, 52)
        assert image[0, 4] == 128
        assert image[4, 0] == 128

    def test_top_confusions_order(self, sample_records):
        frame = top_confusions(confusion_matrix(sample_records))
        assert list(zip(frame["true"], frame["predicted"])) == [("0", "1"), ("1", "0"), ("0", "2")]
        assert frame["count"].tolist() == [2, 1, 1]
        assert top_confusions(confusion_matrix(sample_records), k=1).shape[0] == 1

    def test_written_files(self, tmp_path):
        matrix = confusion_from_labels([0, 0, 1], [0, 1, 1], num_classes=2)
        paths = matrix.write(tmp_path, "c", cell=1)
        assert json.loads(paths["json"].read_text())["counts"] == [[1, 1], [0, 1]]
        assert decode_netpbm(paths["pgm"].read_bytes()).tolist() == [[128, 128], [0, 255]]
        assert paths["csv"].read_text().splitlines()[0] == "true,0,1"


class TestTables:
    def test_misclassification_distribution(self, sample_records):
        frame = misclassification_distribution(sample_records).set_index("class")
        assert frame.loc["0", "total"] == 2
        assert frame.loc["0", "horizontal_misclassified"] == 2
        assert frame.loc["0", "vertical_misclassified"] == 1
        assert frame.loc["1", "total"] == 1
        assert frame.loc["1", "horizontal_misclassified"] == 0
        assert frame.loc["1", "vertical_rate"] == 1.0
        assert np.isnan(frame.loc["F", "horizontal_rate"])
        assert frame.loc["All", "total"] == 3
        assert frame.loc["All", "vertical_rate"] == pytest.approx(2 / 3)
        assert len(frame) == 14

    def test_confidence_mse_table(self, sample_records):
        frame = confidence_mse_table(sample_records)
        assert frame.loc["0", "horizontal_confidence"] == pytest.approx(80.0)
        assert frame.loc["0", "horizontal_mse"] == pytest.approx(200.0)
        assert np.isnan(frame.loc["1", "horizontal_confidence"])
        assert frame.loc["Average", "horizontal_confidence"] == pytest.approx(80.0)
        assert frame.loc["Average", "vertical_confidence"] == pytest.approx(55.0)
        assert frame.loc["Average", "vertical_mse"] == pytest.approx(30.0)

    def test_success_rate_comparison(self, sample_records, hardened_records):
        frame = success_rate_comparison(sample_records, hardened_records).set_index("shape")
        assert frame.loc["horizontal", "baseline_rate"] == pytest.approx(2 / 3)
        assert frame.loc["horizontal", "aa_rate"] == 0.0
        assert frame.loc["vertical", "delta"] == pytest.approx(-2 / 3)

    def test_comparison_needs_matching_attacks(self, sample_records, hardened_records):
        with pytest.raises(RecordMismatchError):
            success_rate_comparison(sample_records, hardened_records[:-1])
        with pytest.raises(RecordMismatchError):
            success_rate_comparison(sample_records, [r for r in hardened_records if r.shape == "horizontal"])


class TestRegions:
    def test_band_counts(self, sample_records):
        maps = attack_prone_regions(sample_records, "horizontal")
        assert [(m.true_label, m.predicted_label) for m in maps] == [(0, 1), (0, 2)]
        assert np.flatnonzero(maps[0].counts).tolist() == [2, 3]
        assert maps[0].scores.max() == 1.0
        assert maps[0].to_image().shape == (16, 16)

        vertical = attack_prone_regions(sample_records, "vertical")
        assert [(m.true_label, m.predicted_label) for m in vertical] == [(0, 1), (1, 0)]
        assert np.flatnonzero(vertical[0].counts).tolist() == [5, 6, 7]
        assert vertical[0].to_frame().columns.tolist() == ["true", "predicted", "column", "hits", "successes", "score"]

    def test_circles_are_unsupported(self, sample_records):
        with pytest.raises(AnalysisException):
            attack_prone_regions(sample_records, "circular")


class TestHardSetEvaluation:
    def test_empty_hard_set(self, detector):
        with pytest.raises(EmptyHardSetError):
            hard_set_accuracy(detector, [])

    def test_transfer(self, hard_set):
        result = transfer_eval(hard_set, ConstantClassifier(label=5))
        assert result.misclassified == 4
        assert result.rate == 1.0
        assert result.per_class.loc[0, "total"] == 4
        assert transfer_eval(hard_set, ConstantClassifier(label=0)).misclassified == 0

    def test_rare_cases(self, hard_set):
        frame = rare_cases(hard_set, ConstantClassifier(label=5))
        assert frame["source_id"].tolist() == ["img_0", "img_1", "img_2", "img_3"]
        assert set(frame["baseline_predicted"]) == {"1"}
        assert set(frame["aa_predicted"]) == {"5"}
        assert rare_cases(hard_set, ConstantClassifier(label=0)).empty


class TestRandomPatchEvaluation:
    @pytest.fixture
    def clean_images(self):
        return [GlyphImage(pixels=bright_image(), label=0, id=f"img_{i}") for i in range(40)]

    @pytest.fixture
    def band_config(self):
        return AdvMixConfig(shape_probabilities={PatchShape.HORIZONTAL: 1.0})

    def test_drop_counts_bands_over_the_detector_row(self, detector, clean_images, band_config):
        patched = random_patch_set(clean_images, band_config, seed=11)
        patches = [entry.extra["patch"] for entry in patched.manifest.entries]
        covered = np.mean([p["position"][0] <= DARK_ROW < p["position"][0] + p["size"] for p in patches])

        result = random_patch_eval(detector, clean_images, patched)
        assert result.count == 40
        assert result.clean_accuracy == 1.0
        assert result.patched_accuracy == pytest.approx(1.0 - covered)
        assert result.accuracy_drop == pytest.approx(covered)
        assert list(result.per_shape) == ["horizontal"]

    def test_constant_model_loses_nothing(self, clean_images):
        patched = random_patch_set(clean_images, AdvMixConfig(), seed=11)
        result = random_patch_eval(ConstantClassifier(label=0), clean_images, patched)
        assert result.accuracy_drop == 0.0
        assert set(result.per_shape) <= {"horizontal", "vertical", "circular"}
        assert all(value == 1.0 for value in result.per_shape.values())

    def test_sets_must_pair(self, detector, clean_images, band_config):
        patched = random_patch_set(clean_images, band_config, seed=11)
        with pytest.raises(DatasetValidationError):
            random_patch_eval(detector, clean_images[:3], patched)
        with pytest.raises(EmptyHardSetError):
            random_patch_eval(detector, [], patched)


class TestReport:
    def test_zero_records(self, tmp_path):
        bundle = write_report(tmp_path / "report", [])
        summary = json.loads((tmp_path / "report" / "summary.json").read_text())
        assert summary["records"] == {"lpcr": 0}
        assert summary["hard_set"] == {"size": 0}
        assert (tmp_path / "report" / "attack_summary_lpcr.csv").exists()
        assert "summary" in bundle.files

    def test_full_bundle(self, tmp_path, sample_records, hardened_records, hard_set, detector):
        root = tmp_path / "report"
        write_report(
            root,
            sample_records,
            aa_records=hardened_records,
            hard_set=hard_set,
            baseline_model=detector,
            aa_model=ConstantClassifier(label=0),
            transfer_model=ConstantClassifier(label=5),
        )
        summary = json.loads((root / "summary.json").read_text())
        assert summary["hard_set"]["lpcr_accuracy"] == 0.0
        assert summary["hard_set"]["aa_lpcr_accuracy"] == 1.0
        assert summary["hard_set"]["transfer"]["rate"] == 1.0
        assert summary["success_rates"]["aa_lpcr"] == {"horizontal": 0.0, "vertical": 0.0}
        for name in (
            "success_rate_comparison.csv",
            "rare_cases.csv",
            "transfer.csv",
            "confusion_lpcr_horizontal.pgm",
            "regions_lpcr_vertical.csv",
            "regions/region_lpcr_horizontal_0_1.pgm",
        ):
            assert name in summary["files"]
            assert (root / name).exists()

    def test_rerun_is_byte_identical(self, tmp_path, sample_records):
        write_report(tmp_path / "a", sample_records)
        write_report(tmp_path / "b", sample_records)
        for path in sorted((tmp_path / "a").rglob("*")):
            if path.is_file():
                assert path.read_bytes() == (tmp_path / "b" / path.relative_to(tmp_path / "a")).read_bytes()

    def test_overall_confusions_leave_out_fgsm(self, tmp_path, sample_records):
        fgsm = dataclasses.replace(
            sample_records[0], image_id="f", shape="fgsm", method="fgsm", patch=None, predicted_label=9
        )
        write_report(tmp_path / "report", sample_records + [fgsm])
        frame = pd.read_csv(tmp_path / "report" / "top_confusions_lpcr.csv", dtype=str)
        assert list(zip(frame["true"], frame["predicted"])) == [("0", "1"), ("1", "0"), ("0", "2")]
        assert (tmp_path / "report" / "confusion_lpcr_fgsm.pgm").exists()

    def test_random_patch_table(self, tmp_path, sample_records):
        result = RandomPatchResult(
            count=4, clean_accuracy=1.0, patched_accuracy=0.75, per_shape={"horizontal": 0.5, "circular": 1.0}
        )
        write_report(tmp_path / "report", sample_records, random_patch={"lpcr": result})
        summary = json.loads((tmp_path / "report" / "summary.json").read_text())
        assert summary["random_patch"]["lpcr"]["accuracy_drop"] == pytest.approx(0.25)
        assert "random_patch.csv" in summary["files"]
        frame = pd.read_csv(tmp_path / "report" / "random_patch.csv")
        assert frame.columns.tolist() == [
            "model", "count", "clean_accuracy", "patched_accuracy", "accuracy_drop",
            "accuracy_horizontal", "accuracy_vertical", "accuracy_circular",
        ]
        assert frame.loc[0, "accuracy_horizontal"] == 0.5
        assert np.isnan(frame.loc[0, "accuracy_vertical"])

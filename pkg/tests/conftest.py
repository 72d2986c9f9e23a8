# Shared pytest fixtures
import logging
from typing import List

import pytest

from lpcr_shield.attack.patches import PatchShape, PatchSpec
from lpcr_shield.attack.types import AttackRecord
from lpcr_shield.dataset import generate_dataset
from lpcr_shield.dataset.types import DatasetConfig, GlyphDataset, GlyphImage
from lpcr_shield.model import build_lpcr
from lpcr_shield.model.types import ArchitectureConfig, TrainConfig

from tests.fixtures.models import ConstantClassifier, bright_image, row_detector

TINY_DIMS = (16, 16)
TINY_ARCHITECTURE = ArchitectureConfig(fc_widths=(8, 8), width_multiplier=1.0 / 16.0, dropout_rate=0.5)


@pytest.fixture(autouse=True)
def quiet_logs():
    """Keep `lpcr` output out of test reports unless a test asks for it"""
    logging.getLogger("lpcr").setLevel(logging.WARNING)
    yield


@pytest.fixture
def tiny_dataset_config() -> DatasetConfig:
    return DatasetConfig(
        classes=["0", "1", "7"],
        per_class_count=6,
        image_dims=TINY_DIMS,
        seed=1234,
        augment=True,
    )


@pytest.fixture
def tiny_dataset(tiny_dataset_config) -> GlyphDataset:
    return generate_dataset(tiny_dataset_config)


@pytest.fixture
def tiny_train_config() -> TrainConfig:
    return TrainConfig(
        learning_rate=0.01,
        batch_size=4,
        epochs=2,
        seed=99,
        split_ratio=0.5,
        kfold=2,
        architecture=TINY_ARCHITECTURE,
    )


@pytest.fixture
def tiny_model():
    return build_lpcr(
        TINY_DIMS,
        fc_widths=TINY_ARCHITECTURE.fc_widths,
        width_multiplier=TINY_ARCHITECTURE.width_multiplier,
        seed=7,
    )


@pytest.fixture
def detector():
    return row_detector()


@pytest.fixture
def constant_model():
    return ConstantClassifier()


@pytest.fixture
def bright_images() -> List[GlyphImage]:
    """Four copies of the row-detector test image, all class 0"""
    return [GlyphImage(pixels=bright_image(), label=0, id=f"img_{i}") for i in range(4)]


@pytest.fixture
def sample_records() -> List[AttackRecord]:
    """Hand-built records over two classes and two shapes"""
    def record(image_id, true_label, shape, success, predicted, confidence, mse, position=(3,), size=2):
        patch = PatchSpec(PatchShape(shape), position, size, (0, 0, 0)) if success else None
        return AttackRecord(
            image_id=image_id,
            true_label=true_label,
            shape=shape,
            success=success,
            patch=patch,
            predicted_label=predicted,
            confidence=confidence,
            loss=1.0,
            mse=mse,
            image_dims=TINY_DIMS,
        )

    return [
        record("a", 0, "horizontal", True, 1, 0.9, 100.0, position=(2,), size=2),
        record("a", 0, "vertical", False, 0, 0.8, 0.0),
        record("b", 0, "horizontal", True, 2, 0.7, 300.0, position=(3,), size=1),
        record("b", 0, "vertical", True, 1, 0.6, 50.0, position=(5,), size=3),
        record("c", 1, "horizontal", False, 1, 0.95, 0.0),
        record("c", 1, "vertical", True, 0, 0.5, 10.0, position=(0,), size=1),
    ]

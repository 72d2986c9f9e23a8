# LPCR Shield - Model Configuration and Result Types
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..utils.helpers import write_csv


class ArchitectureConfig(BaseModel):
    """Width knobs of the LPCR network; the layer order itself is fixed"""

    model_config = ConfigDict(extra="forbid")

    fc_widths: Tuple[int, int] = (2304, 500)
    width_multiplier: float = Field(default=1.0, gt=0.0)
    dropout_rate: float = Field(default=0.5, ge=0.0, lt=1.0)

    @field_validator("fc_widths")
    @classmethod
    def validate_fc_widths(cls, v: Tuple[int, int]) -> Tuple[int, int]:
        if min(v) < 1:
            raise ValueError("fully connected widths must be positive")
        return v


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    learning_rate: float = Field(default=0.001, gt=0.0)
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0)
    batch_size: int = Field(default=64, ge=1)
    epochs: int = Field(default=30, ge=0)
    seed: Optional[int] = None
    dropout: bool = True
    split_ratio: float = Field(default=0.8, gt=0.0, lt=1.0)
    kfold: int = Field(default=10, ge=2)
    architecture: ArchitectureConfig = Field(default_factory=ArchitectureConfig)


@dataclass
class Metrics:
    accuracy: float
    per_class_accuracy: List[float]
    per_class_counts: List[int]
    mean_loss: float
    count: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_acc: float
    val_loss: float


@dataclass
class TrainingHistory:
    records: List[EpochRecord] = field(default_factory=list)
    best_epoch: Optional[int] = None

    def append(self, record: EpochRecord) -> None:
        self.records.append(record)

    @property
    def best_val_acc(self) -> Optional[float]:
        for record in self.records:
            if record.epoch == self.best_epoch:
                return record.val_acc
        return None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [asdict(record) for record in self.records],
            columns=["epoch", "train_loss", "val_acc", "val_loss"],
        )

    def to_csv(self, path: Union[str, Path]) -> None:
        write_csv(path, self.to_frame())


@dataclass
class CrossValidationResult:
    folds: List[Metrics]
    fold_sizes: List[int]

    @property
    def accuracies(self) -> np.ndarray:
        return np.array([metrics.accuracy for metrics in self.folds], dtype=np.float64)

    @property
    def mean_accuracy(self) -> float:
        return float(self.accuracies.mean())

    @property
    def std_accuracy(self) -> float:
        return float(self.accuracies.std())

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "fold": list(range(len(self.folds))),
            "size": self.fold_sizes,
            "accuracy": self.accuracies,
            "mean_loss": [metrics.mean_loss for metrics in self.folds],
        })

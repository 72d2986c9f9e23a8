# LPCR Shield - Model Module
from .lpcr import (
    CONV_BLOCKS,
    LpcrModel,
    build_from_config,
    build_lpcr,
    flatten_width,
    load_model,
    lpcr_layer_specs,
    preprocess,
    save_model,
)
from .training import TrainResult, dataset_fingerprint, evaluate, kfold_cv, train
from .types import ArchitectureConfig, CrossValidationResult, EpochRecord, Metrics, TrainConfig, TrainingHistory

__all__ = [
    "CONV_BLOCKS",
    "LpcrModel",
    "build_from_config",
    "build_lpcr",
    "flatten_width",
    "load_model",
    "lpcr_layer_specs",
    "preprocess",
    "save_model",
    "TrainResult",
    "dataset_fingerprint",
    "evaluate",
    "kfold_cv",
    "train",
    "ArchitectureConfig",
    "CrossValidationResult",
    "EpochRecord",
    "Metrics",
    "TrainConfig",
    "TrainingHistory",
]

# LPCR Shield - Analysis Module
"""
Confusion heatmaps, misclassification distributions, confidence/MSE
tables, attack-prone region maps, transferability, random-patch accuracy
drops and success-rate comparisons, assembled into a report directory.
"""

from .confusion import ConfusionMatrix, confusion_from_labels, confusion_matrix, top_confusions
from .evaluation import (
    RandomPatchResult,
    TransferResult,
    hard_set_accuracy,
    random_patch_eval,
    rare_cases,
    transfer_eval,
)
from .regions import RegionMap, attack_prone_regions
from .report import AnalysisConfig, ReportBundle, write_report
from .tables import confidence_mse_table, misclassification_distribution, success_rate_comparison

__all__ = [
    "ConfusionMatrix",
    "confusion_from_labels",
    "confusion_matrix",
    "top_confusions",
    "RandomPatchResult",
    "TransferResult",
    "hard_set_accuracy",
    "random_patch_eval",
    "rare_cases",
    "transfer_eval",
    "RegionMap",
    "attack_prone_regions",
    "AnalysisConfig",
    "ReportBundle",
    "write_report",
    "confidence_mse_table",
    "misclassification_distribution",
    "success_rate_comparison",
]

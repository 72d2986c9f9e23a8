# LPCR Shield - Attack Module
"""
Exhaustive geometric-mask attack (horizontal bands, vertical bands,
circular spots), the FGSM baseline and perturbation metrics.
"""

from .exhaustive import exhaustive_mask_attack
from .fgsm import fgsm_attack, fgsm_dataset
from .metrics import mse
from .patches import (
    ALL_SHAPES,
    PatchShape,
    PatchSpec,
    darkest_pixel,
    enumerate_patches,
    max_size,
    patch_mask,
    perturb_image,
    positions,
    validate_patch,
)
from .runner import (
    AttackRun,
    attack_dataset,
    attack_summary,
    build_hard_set,
    read_records,
    save_hard_set,
    write_attack_summary,
    write_records,
)
from .types import EXHAUSTIVE, FGSM, AttackConfig, AttackRecord, Classifier

__all__ = [
    "exhaustive_mask_attack",
    "fgsm_attack",
    "fgsm_dataset",
    "mse",
    "ALL_SHAPES",
    "PatchShape",
    "PatchSpec",
    "darkest_pixel",
    "enumerate_patches",
    "max_size",
    "patch_mask",
    "perturb_image",
    "positions",
    "validate_patch",
    "AttackRun",
    "attack_dataset",
    "attack_summary",
    "build_hard_set",
    "read_records",
    "save_hard_set",
    "write_attack_summary",
    "write_records",
    "EXHAUSTIVE",
    "FGSM",
    "AttackConfig",
    "AttackRecord",
    "Classifier",
]

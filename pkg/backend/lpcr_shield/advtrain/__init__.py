# LPCR Shield - Adversarial Training Module
from .mixing import AdvMixConfig, build_adversarial_train_set, random_patch, random_patch_set
from .trainer import train_aa_lpcr

__all__ = ["AdvMixConfig", "build_adversarial_train_set", "random_patch", "random_patch_set", "train_aa_lpcr"]

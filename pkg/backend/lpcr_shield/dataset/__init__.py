# LPCR Shield - Dataset Module
"""
Deterministic synthetic character dataset: rendering, augmentation,
stratified splitting and PPM/JSON persistence.
"""

from .augment import AugmentLimits, AugmentParams, augment, gaussian_kernel1d, sample_augment_params
from .generator import generate_dataset
from .glyphs import GLYPH_SEGMENTS, render_glyph
from .split import split, stratified_folds
from .storage import load_dataset, save_dataset
from .types import (
    CLASS_ALPHABET,
    NUM_CLASSES,
    ClassProfile,
    DatasetConfig,
    DatasetManifest,
    GlyphDataset,
    GlyphImage,
    GlyphStyle,
    ManifestEntry,
    stack_pixels,
)

__all__ = [
    "AugmentLimits",
    "AugmentParams",
    "augment",
    "gaussian_kernel1d",
    "sample_augment_params",
    "generate_dataset",
    "GLYPH_SEGMENTS",
    "render_glyph",
    "split",
    "stratified_folds",
    "load_dataset",
    "save_dataset",
    "CLASS_ALPHABET",
    "NUM_CLASSES",
    "ClassProfile",
    "DatasetConfig",
    "DatasetManifest",
    "GlyphDataset",
    "GlyphImage",
    "GlyphStyle",
    "ManifestEntry",
    "stack_pixels",
]

# LPCR Shield - Clean/Perturbed Training Set Mixing
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..attack.patches import ALL_SHAPES, PatchShape, PatchSpec, darkest_pixel, max_size, perturb_image, positions
from ..core.exceptions import ConfigurationError, DatasetValidationError
from ..core.logging import get_logger
from ..dataset.types import DatasetManifest, GlyphDataset, GlyphImage, ManifestEntry
from ..utils.rng import RngStream

logger = get_logger('lpcr.advtrain')


class AdvMixConfig(BaseModel):
    """How the attack-aware training set mixes clean and patched images"""

    model_config = ConfigDict(extra="forbid")

    clean_fraction: float = Field(default=0.5, gt=0.0, le=1.0)
    shape_probabilities: Dict[PatchShape, float] = Field(
        default_factory=lambda: {shape: 1.0 / len(ALL_SHAPES) for shape in ALL_SHAPES}
    )
    # per-shape upper bound on sampled thickness/radius; absent shapes use the attack threshold
    size_limits: Dict[PatchShape, int] = Field(default_factory=dict)
    seed: Optional[int] = None
    online: bool = True
    exact_split: bool = False

    @field_validator("shape_probabilities")
    @classmethod
    def validate_probabilities(cls, v: Dict[PatchShape, float]) -> Dict[PatchShape, float]:
        if not v:
            raise ValueError("at least one shape needs a probability")
        if any(p < 0 for p in v.values()):
            raise ValueError("shape probabilities must be non-negative")
        if abs(sum(v.values()) - 1.0) > 1e-9:
            raise ValueError(f"shape probabilities sum to {sum(v.values())}, expected 1")
        return v

    def shape_table(self) -> Tuple[List[PatchShape], np.ndarray]:
        shapes = [shape for shape in ALL_SHAPES if shape in self.shape_probabilities]
        probabilities = np.array([self.shape_probabilities[shape] for shape in shapes], dtype=np.float64)
        return shapes, probabilities / probabilities.sum()

    def size_limit(self, shape: PatchShape, dims: Sequence[int]) -> int:
        bound = max_size(shape, dims)
        limit = self.size_limits.get(shape, bound)
        if not 1 <= limit <= bound:
            raise ConfigurationError(f"advtrain.size_limits.{shape.value}", f"{limit} outside [1, {bound}]")
        return limit


def random_patch(
    image: GlyphImage, rng: Union[np.random.Generator, RngStream], config: AdvMixConfig
) -> Tuple[GlyphImage, PatchSpec]:
    """One shape, a uniform size in [1, threshold] and a uniform in-bounds position, painted in the darkest color"""
    if isinstance(rng, RngStream):
        rng = rng.generator()
    shapes, probabilities = config.shape_table()
    shape = shapes[int(rng.choice(len(shapes), p=probabilities))]
    size = int(rng.integers(1, config.size_limit(shape, image.dims) + 1))
    placements = positions(shape, size, image.dims)
    position = placements[int(rng.integers(len(placements)))]
    patch = PatchSpec(shape, position, size, darkest_pixel(image.pixels))
    return image.with_pixels(perturb_image(image.pixels, patch)), patch


def _clean_mask(images: Sequence[GlyphImage], config: AdvMixConfig, stream: RngStream) -> np.ndarray:
    n = len(images)
    if config.clean_fraction >= 1.0:
        return np.ones(n, dtype=bool)
    if config.exact_split:
        n_clean = int(np.floor(config.clean_fraction * n + 0.5))
        order = stream.child("exact").generator().permutation(n)
        mask = np.zeros(n, dtype=bool)
        mask[order[:n_clean]] = True
        return mask
    return np.array(
        [stream.child("coin", image.id).generator().random() < config.clean_fraction for image in images],
        dtype=bool,
    )


def build_adversarial_train_set(
    clean_set: Union[GlyphDataset, Sequence[GlyphImage]], config: AdvMixConfig, epoch: int = 0
) -> GlyphDataset:
    """Same size and labels as `clean_set`; each image is kept or patched independently.

    Draws come from the (seed, "advmix", epoch) stream, so each epoch of
    online training sees fresh patches while the whole run stays reproducible.
    """
    images = list(clean_set)
    if not images:
        raise DatasetValidationError("dataset", "cannot mix an empty training set")
    if config.seed is None:
        raise ConfigurationError("advtrain.seed", "seed must be resolved before mixing")

    stream = RngStream(config.seed, ("advmix", epoch))
    keep_clean = _clean_mask(images, config, stream)

    mixed: List[GlyphImage] = []
    entries: List[ManifestEntry] = []
    for image, clean in zip(images, keep_clean):
        patch: Optional[PatchSpec] = None
        if not clean:
            image, patch = random_patch(image, stream.child("patch", image.id), config)
        mixed.append(image)
        entries.append(ManifestEntry(
            id=image.id,
            label=image.label,
            filename=f"images/{image.id}.ppm",
            extra={"perturbed": patch is not None, "patch": patch.to_dict() if patch else None},
        ))

    perturbed = len(images) - int(keep_clean.sum())
    manifest = DatasetManifest(
        dims=images[0].dims,
        entries=entries,
        metadata={"kind": "adversarial_mix", "epoch": epoch, "clean": int(keep_clean.sum()), "perturbed": perturbed},
    )
    logger.debug(f"Epoch {epoch} mix: {perturbed}/{len(images)} images patched")
    return GlyphDataset(images=mixed, manifest=manifest)


def random_patch_set(
    dataset: Union[GlyphDataset, Sequence[GlyphImage]], config: AdvMixConfig, seed: int
) -> GlyphDataset:
    """Every image carries exactly one random patch drawn the way the mixer draws them.

    Draws come from the (seed, "random_patch_set") stream, independent of the
    mixing stream, so the same test split always receives the same patches.
    """
    images = list(dataset)
    if not images:
        raise DatasetValidationError("dataset", "cannot patch an empty image set")

    stream = RngStream(seed, ("random_patch_set",))
    patched: List[GlyphImage] = []
    entries: List[ManifestEntry] = []
    for image in images:
        image, patch = random_patch(image, stream.child("patch", image.id), config)
        patched.append(image)
        entries.append(ManifestEntry(
            id=image.id,
            label=image.label,
            filename=f"images/{image.id}.ppm",
            extra={"patch": patch.to_dict()},
        ))

    manifest = DatasetManifest(dims=images[0].dims, entries=entries, metadata={"kind": "random_patch", "seed": seed})
    return GlyphDataset(images=patched, manifest=manifest)

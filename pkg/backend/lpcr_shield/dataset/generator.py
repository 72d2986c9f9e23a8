# LPCR Shield - Synthetic Dataset Generation
from ..core.exceptions import ConfigurationError
from ..core.logging import get_logger
from ..utils.rng import RngStream
from .augment import AugmentLimits, augment, sample_augment_params
from .glyphs import render_glyph
from .types import DatasetConfig, DatasetManifest, GlyphDataset, ManifestEntry

logger = get_logger('lpcr.dataset')


def image_filename(image_id: str) -> str:
    return f"images/{image_id}.ppm"


def generate_dataset(config: DatasetConfig) -> GlyphDataset:
    """Render every image the config describes; identical configs give identical datasets"""
    if config.seed is None:
        raise ConfigurationError("dataset.seed", "seed must be resolved before generation")

    root = RngStream(config.seed, ("dataset",))
    limits = AugmentLimits(
        max_rotation=config.augment_ranges.max_rotation,
        max_sigma=config.augment_ranges.max_sigma,
    )
    counts = config.class_counts()

    images = []
    entries = []
    for symbol in config.classes:
        for index in range(counts[symbol]):
            stream = root.child("glyph", symbol, index)
            image_id = f"{symbol}_{index:05d}"
            image = render_glyph(symbol, config.style, config.image_dims, stream, image_id=image_id)
            if config.augment:
                image = augment(image, sample_augment_params(stream, limits), limits)
            images.append(image)
            entries.append(ManifestEntry(
                id=image_id,
                label=image.label,
                filename=image_filename(image_id),
                seed_path=stream.label,
            ))

    manifest = DatasetManifest(
        dims=tuple(config.image_dims),  # type: ignore[arg-type]
        classes=list(config.classes),
        entries=entries,
        metadata={"seed": config.seed, "class_profile": config.class_profile.value},
    )
    logger.info(f"Generated {len(images)} glyph images across {len(config.classes)} classes")
    return GlyphDataset(images=images, manifest=manifest)

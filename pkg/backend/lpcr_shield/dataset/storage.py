# LPCR Shield - Dataset Persistence (PPM images + JSON manifest)
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

from ..core.exceptions import DatasetIntegrityError, DatasetValidationError, MalformedImageError
from ..core.logging import get_logger
from ..utils.helpers import ensure_dir, read_json, sha256_bytes, write_json
from ..utils.netpbm import decode_netpbm, encode_ppm
from .types import (
    CLASS_ALPHABET,
    MANIFEST_VERSION,
    NUM_CLASSES,
    DatasetManifest,
    GlyphDataset,
    GlyphImage,
    ManifestEntry,
    validate_dims,
)

logger = get_logger('lpcr.dataset')

MANIFEST_NAME = "manifest.json"
_CORE_FIELDS = {"id", "label", "filename", "checksum", "seed_path"}


def save_dataset(path: Union[str, Path], dataset: Union[GlyphDataset, Sequence[GlyphImage]],
                 manifest: Optional[DatasetManifest] = None) -> DatasetManifest:
    """Write every image as binary PPM and a manifest with per-file checksums"""
    root = ensure_dir(path)
    ensure_dir(root / "images")

    if isinstance(dataset, GlyphDataset):
        images = dataset.images
        manifest = manifest or dataset.manifest
    else:
        images = list(dataset)
    if manifest is None:
        if not images:
            raise DatasetValidationError("dataset", "cannot infer dims of an empty dataset without a manifest")
        manifest = DatasetManifest(dims=images[0].dims)

    existing: Dict[str, ManifestEntry] = {entry.id: entry for entry in manifest.entries}
    entries = []
    for image in images:
        entry = existing.get(image.id) or ManifestEntry(
            id=image.id, label=image.label, filename=f"images/{image.id}.ppm"
        )
        data = encode_ppm(image.pixels)
        (root / entry.filename).write_bytes(data)
        entries.append(ManifestEntry(
            id=image.id,
            label=image.label,
            filename=entry.filename,
            checksum=sha256_bytes(data),
            seed_path=entry.seed_path,
            extra=dict(entry.extra),
        ))

    saved = DatasetManifest(
        dims=manifest.dims,
        classes=list(manifest.classes),
        entries=entries,
        version=manifest.version,
        metadata=dict(manifest.metadata),
    )
    write_json(root / MANIFEST_NAME, saved.to_dict())
    logger.info(f"Saved {len(entries)} images to {root}")
    return saved


def _parse_entry(raw: Dict[str, Any]) -> ManifestEntry:
    try:
        label = int(raw["label"])
        entry = ManifestEntry(
            id=str(raw["id"]),
            label=label,
            filename=str(raw["filename"]),
            checksum=raw.get("checksum"),
            seed_path=raw.get("seed_path"),
            extra={key: value for key, value in raw.items() if key not in _CORE_FIELDS},
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DatasetValidationError("manifest", f"malformed entry {raw!r}: {e}") from e
    if not 0 <= label < NUM_CLASSES:
        raise DatasetValidationError("manifest", f"entry '{entry.id}' has label {label} outside 0..{NUM_CLASSES - 1}")
    return entry


def load_dataset(path: Union[str, Path]) -> GlyphDataset:
    """Load a saved dataset, verifying each file's checksum and header"""
    root = Path(path)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.exists():
        raise DatasetValidationError("path", f"no {MANIFEST_NAME} under {root}")
    raw = read_json(manifest_path)

    try:
        version = int(raw["version"])
        dims = validate_dims(raw["dims"])
        classes = list(raw.get("classes", CLASS_ALPHABET))
        raw_entries = raw["entries"]
    except (KeyError, TypeError, ValueError) as e:
        raise DatasetValidationError("manifest", f"malformed manifest header: {e}") from e
    if version != MANIFEST_VERSION:
        raise DatasetValidationError("manifest", f"unsupported manifest version {version}")

    images = []
    entries = []
    for raw_entry in raw_entries:
        entry = _parse_entry(raw_entry)
        file_path = root / entry.filename
        try:
            data = file_path.read_bytes()
        except OSError as e:
            raise MalformedImageError(str(file_path), f"unreadable: {e}") from e
        digest = sha256_bytes(data)
        if entry.checksum is None:
            raise DatasetIntegrityError(str(file_path), "<missing>", digest)
        if digest != entry.checksum:
            raise DatasetIntegrityError(str(file_path), entry.checksum, digest)
        pixels = decode_netpbm(data, source=str(file_path))
        if pixels.ndim != 3 or pixels.shape[:2] != dims:
            raise MalformedImageError(str(file_path), f"expected {dims[0]}x{dims[1]}x3, got {pixels.shape}")
        images.append(GlyphImage(pixels=pixels, label=entry.label, id=entry.id))
        entries.append(entry)

    manifest = DatasetManifest(
        dims=dims, classes=classes, entries=entries, version=version, metadata=raw.get("metadata", {})
    )
    logger.info(f"Loaded {len(images)} images from {root}")
    return GlyphDataset(images=images, manifest=manifest)

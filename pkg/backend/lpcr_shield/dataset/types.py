# LPCR Shield - Dataset Domain Types
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..core.exceptions import DatasetValidationError

CLASS_ALPHABET: Tuple[str, ...] = (
    "0", "1", "2", "3", "4", "5", "6", "7", "8", "9", "A", "B", "F",
)
NUM_CLASSES = len(CLASS_ALPHABET)

# Four 2x max-pools must leave at least one cell
DIM_MULTIPLE = 16

DESK_DIMS: Tuple[int, int] = (80, 48)
FULL_DIMS: Tuple[int, int] = (160, 112)

# Per-class image counts of the 1057-image reference collection
SKEWED_COUNTS: Dict[str, int] = {
    "0": 89, "1": 134, "2": 61, "3": 39, "4": 45, "5": 61, "6": 62,
    "7": 41, "8": 52, "9": 20, "A": 271, "B": 108, "F": 74,
}

MANIFEST_VERSION = 1


class ClassProfile(str, Enum):
    UNIFORM = "uniform"
    SKEWED = "skewed"


def validate_dims(dims: Sequence[int]) -> Tuple[int, int]:
    if len(dims) != 2:
        raise DatasetValidationError("image_dims", f"expected (H, W), got {tuple(dims)}")
    height, width = int(dims[0]), int(dims[1])
    if height <= 0 or width <= 0 or height % DIM_MULTIPLE or width % DIM_MULTIPLE:
        raise DatasetValidationError(
            "image_dims", f"H and W must be positive multiples of {DIM_MULTIPLE}, got {height}x{width}"
        )
    return height, width


def label_for(symbol: str) -> int:
    try:
        return CLASS_ALPHABET.index(symbol)
    except ValueError:
        raise DatasetValidationError("class_symbol", f"unknown class symbol {symbol!r}") from None


@dataclass(frozen=True)
class GlyphImage:
    """One HxWx3 character image with its class label"""

    pixels: np.ndarray = field(repr=False, compare=False)
    label: int
    id: str

    def __post_init__(self) -> None:
        pixels = self.pixels
        if not isinstance(pixels, np.ndarray) or pixels.dtype != np.uint8:
            raise DatasetValidationError("pixels", "pixels must be a uint8 numpy array")
        if pixels.ndim != 3 or pixels.shape[2] != 3:
            raise DatasetValidationError("pixels", f"expected HxWx3 pixels, got shape {pixels.shape}")
        validate_dims(pixels.shape[:2])
        if not 0 <= self.label < NUM_CLASSES:
            raise DatasetValidationError("label", f"label {self.label} outside 0..{NUM_CLASSES - 1}")
        pixels.setflags(write=False)

    @property
    def symbol(self) -> str:
        return CLASS_ALPHABET[self.label]

    @property
    def dims(self) -> Tuple[int, int]:
        return self.pixels.shape[0], self.pixels.shape[1]

    def with_pixels(self, pixels: np.ndarray, id: Optional[str] = None) -> "GlyphImage":
        return GlyphImage(pixels=pixels, label=self.label, id=id or self.id)


class GlyphStyle(BaseModel):
    """Ranges the renderer samples one concrete style from"""

    model_config = ConfigDict(extra="forbid")

    stroke_width: Tuple[int, int] = (3, 5)
    foreground: Tuple[int, int] = (0, 80)
    background: Tuple[int, int] = (170, 255)
    jitter: int = Field(default=2, ge=0)
    min_contrast: int = Field(default=80, ge=0, le=255)

    @field_validator("stroke_width", "foreground", "background")
    @classmethod
    def validate_range(cls, v: Tuple[int, int]) -> Tuple[int, int]:
        low, high = v
        if low > high:
            raise ValueError(f"range lower bound {low} exceeds upper bound {high}")
        return v

    @model_validator(mode="after")
    def validate_contrast(self) -> "GlyphStyle":
        if self.stroke_width[0] < 1:
            raise ValueError("stroke width must be at least 1 pixel")
        if not (0 <= self.foreground[0] and self.background[1] <= 255):
            raise ValueError("colors must lie in [0, 255]")
        if self.background[0] - self.foreground[1] < self.min_contrast:
            raise ValueError(
                f"background/foreground ranges leave less than {self.min_contrast} gray levels of contrast"
            )
        return self


class AugmentRanges(BaseModel):
    model_config = ConfigDict(extra="forbid")

    max_rotation: float = Field(default=10.0, ge=0.0, le=180.0)
    max_sigma: float = Field(default=1.5, ge=0.0)


class DatasetConfig(BaseModel):
    """Everything needed to regenerate a synthetic character dataset bit for bit"""

    model_config = ConfigDict(extra="forbid")

    classes: List[str] = Field(default_factory=lambda: list(CLASS_ALPHABET))
    per_class_count: int = Field(default=100, gt=0)
    image_dims: Tuple[int, int] = DESK_DIMS
    seed: Optional[int] = None
    style: GlyphStyle = Field(default_factory=GlyphStyle)
    class_profile: ClassProfile = ClassProfile.UNIFORM
    skew_scale: float = Field(default=1.0, gt=0.0)
    augment: bool = True
    augment_ranges: AugmentRanges = Field(default_factory=AugmentRanges)

    @field_validator("classes")
    @classmethod
    def validate_classes(cls, v: List[str]) -> List[str]:
        unknown = [symbol for symbol in v if symbol not in CLASS_ALPHABET]
        if unknown:
            raise ValueError(f"unknown class symbols: {unknown}")
        if len(set(v)) != len(v):
            raise ValueError("class symbols must be unique")
        return v

    @field_validator("image_dims")
    @classmethod
    def validate_image_dims(cls, v: Tuple[int, int]) -> Tuple[int, int]:
        height, width = v
        if height <= 0 or width <= 0 or height % DIM_MULTIPLE or width % DIM_MULTIPLE:
            raise ValueError(f"H and W must be positive multiples of {DIM_MULTIPLE}")
        return v

    def class_counts(self) -> Dict[str, int]:
        if self.class_profile == ClassProfile.SKEWED:
            return {
                symbol: max(2, int(np.floor(SKEWED_COUNTS[symbol] * self.skew_scale + 0.5)))
                for symbol in self.classes
            }
        return {symbol: self.per_class_count for symbol in self.classes}


@dataclass
class ManifestEntry:
    id: str
    label: int
    filename: str
    checksum: Optional[str] = None
    seed_path: Optional[str] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        payload = {
            "id": self.id,
            "label": self.label,
            "filename": self.filename,
            "checksum": self.checksum,
        }
        if self.seed_path is not None:
            payload["seed_path"] = self.seed_path
        payload.update(self.extra)
        return payload


@dataclass
class DatasetManifest:
    dims: Tuple[int, int]
    classes: List[str] = field(default_factory=lambda: list(CLASS_ALPHABET))
    entries: List[ManifestEntry] = field(default_factory=list)
    version: int = MANIFEST_VERSION
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": self.version,
            "dims": list(self.dims),
            "classes": list(self.classes),
            "metadata": self.metadata,
            "entries": [entry.to_dict() for entry in self.entries],
        }


@dataclass
class GlyphDataset:
    """An ordered image collection together with its manifest"""

    images: List[GlyphImage]
    manifest: DatasetManifest

    def __len__(self) -> int:
        return len(self.images)

    def __iter__(self) -> Iterator[GlyphImage]:
        return iter(self.images)

    def __getitem__(self, index: Union[int, slice]) -> Any:
        return self.images[index]

    @property
    def labels(self) -> np.ndarray:
        return np.array([image.label for image in self.images], dtype=np.int64)

    @property
    def dims(self) -> Tuple[int, int]:
        return self.manifest.dims


def stack_pixels(images: Sequence[GlyphImage]) -> np.ndarray:
    """Stack images into an (N, H, W, 3) uint8 batch"""
    if not images:
        raise DatasetValidationError("images", "cannot stack an empty image list")
    return np.stack([image.pixels for image in images])

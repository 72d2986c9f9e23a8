# LPCR Shield - Geometric Patch Masks
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..core.exceptions import PatchBoundsError

Color = Tuple[int, int, int]


class PatchShape(str, Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"
    CIRCULAR = "circular"


ALL_SHAPES: Tuple[PatchShape, ...] = (PatchShape.HORIZONTAL, PatchShape.VERTICAL, PatchShape.CIRCULAR)


@dataclass(frozen=True)
class PatchSpec:
    """A solid-color band or disk.

    position is (row,) for horizontal bands, (column,) for vertical bands
    and (row, column) of the center for circles; size is the band
    thickness or the disk radius.
    """

    shape: PatchShape
    position: Tuple[int, ...]
    size: int
    color: Color

    def to_dict(self) -> Dict[str, Any]:
        return {
            "shape": self.shape.value,
            "position": list(self.position),
            "size": self.size,
            "color": list(self.color),
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "PatchSpec":
        return cls(
            shape=PatchShape(payload["shape"]),
            position=tuple(int(p) for p in payload["position"]),
            size=int(payload["size"]),
            color=tuple(int(c) for c in payload["color"]),  # type: ignore[arg-type]
        )

    def __str__(self) -> str:
        return f"{self.shape.value}@{list(self.position)} size={self.size}"


def max_size(shape: PatchShape, dims: Sequence[int]) -> int:
    """Largest allowed thickness (H/2 or W/2) or radius (min(H, W)/4)"""
    height, width = dims[0], dims[1]
    if shape == PatchShape.HORIZONTAL:
        return height // 2
    if shape == PatchShape.VERTICAL:
        return width // 2
    return min(height, width) // 4


def positions(shape: PatchShape, size: int, dims: Sequence[int]) -> List[Tuple[int, ...]]:
    """Every placement that keeps the patch fully inside the image, row-major"""
    height, width = dims[0], dims[1]
    if shape == PatchShape.HORIZONTAL:
        return [(i,) for i in range(height - size + 1)]
    if shape == PatchShape.VERTICAL:
        return [(j,) for j in range(width - size + 1)]
    return [(r, c) for r in range(size, height - size) for c in range(size, width - size)]


def validate_patch(patch: PatchSpec, dims: Sequence[int]) -> None:
    height, width = dims[0], dims[1]
    limit = max_size(patch.shape, dims)
    if not 1 <= patch.size <= limit:
        raise PatchBoundsError(str(patch), (height, width), f"size must lie in [1, {limit}]")
    if any(not 0 <= c <= 255 for c in patch.color) or len(patch.color) != 3:
        raise PatchBoundsError(str(patch), (height, width), f"color {patch.color} is not an RGB triple")

    if patch.shape == PatchShape.CIRCULAR:
        if len(patch.position) != 2:
            raise PatchBoundsError(str(patch), (height, width), "circular patches need a (row, column) center")
        r, c = patch.position
        s = patch.size
        if not (s <= r <= height - 1 - s and s <= c <= width - 1 - s):
            raise PatchBoundsError(str(patch), (height, width), "disk leaves the image")
        return

    if len(patch.position) != 1:
        raise PatchBoundsError(str(patch), (height, width), "band patches need a single offset")
    extent = height if patch.shape == PatchShape.HORIZONTAL else width
    if not 0 <= patch.position[0] <= extent - patch.size:
        raise PatchBoundsError(str(patch), (height, width), "band leaves the image")


def disk_offsets(radius: int) -> Tuple[np.ndarray, np.ndarray]:
    """Row/column offsets with dr^2 + dc^2 <= radius^2"""
    span = np.arange(-radius, radius + 1)
    dr, dc = np.meshgrid(span, span, indexing="ij")
    inside = dr ** 2 + dc ** 2 <= radius ** 2
    return dr[inside], dc[inside]


def patch_mask(patch: PatchSpec, dims: Sequence[int]) -> np.ndarray:
    validate_patch(patch, dims)
    mask = np.zeros((dims[0], dims[1]), dtype=bool)
    if patch.shape == PatchShape.HORIZONTAL:
        mask[patch.position[0]:patch.position[0] + patch.size, :] = True
    elif patch.shape == PatchShape.VERTICAL:
        mask[:, patch.position[0]:patch.position[0] + patch.size] = True
    else:
        dr, dc = disk_offsets(patch.size)
        mask[patch.position[0] + dr, patch.position[1] + dc] = True
    return mask


def perturb_image(image: np.ndarray, patch: PatchSpec) -> np.ndarray:
    """Copy of `image` with the patch's pixels set to its color"""
    pixels = np.asarray(image)
    out = pixels.copy()
    out[patch_mask(patch, pixels.shape[:2])] = np.asarray(patch.color, dtype=pixels.dtype)
    return out


def darkest_pixel(image: np.ndarray) -> Color:
    """The pixel with the smallest r+g+b; ties go to the first in row-major order"""
    flat = np.asarray(image).reshape(-1, 3).astype(np.int64)
    if flat.shape[0] == 0:
        raise ValueError("cannot take the darkest pixel of an empty image")
    r, g, b = flat[int(np.argmin(flat.sum(axis=1)))]
    return int(r), int(g), int(b)


def enumerate_patches(
    shape: PatchShape, dims: Sequence[int], color: Color, limit: Optional[int] = None
) -> Iterator[PatchSpec]:
    """All in-bounds patches ordered by size, then position"""
    shape = PatchShape(shape)
    top = max_size(shape, dims) if limit is None else min(limit, max_size(shape, dims))
    for size in range(1, top + 1):
        for position in positions(shape, size, dims):
            yield PatchSpec(shape, position, size, color)

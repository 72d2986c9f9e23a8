# LPCR Shield - Stroke-Table Glyph Renderer
"""
Renders the 13 plate characters from an embedded 14-segment stroke table.

Each segment is a straight stroke between two points of a unit glyph box
(u to the right, v downward). A stroke is drawn as a filled quadrilateral
with square caps, so adjoining segments always close their joints. No
font files are involved, which keeps rendering fully deterministic.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from PIL import Image, ImageDraw

from ..utils.rng import RngStream
from .types import GlyphImage, GlyphStyle, label_for, validate_dims

Point = Tuple[float, float]

SEGMENTS: Dict[str, Tuple[Point, Point]] = {
    "a": ((0.0, 0.0), (1.0, 0.0)),    # top bar
    "b": ((1.0, 0.0), (1.0, 0.5)),    # upper right
    "c": ((1.0, 0.5), (1.0, 1.0)),    # lower right
    "d": ((0.0, 1.0), (1.0, 1.0)),    # bottom bar
    "e": ((0.0, 0.5), (0.0, 1.0)),    # lower left
    "f": ((0.0, 0.0), (0.0, 0.5)),    # upper left
    "g1": ((0.0, 0.5), (0.5, 0.5)),   # middle, left half
    "g2": ((0.5, 0.5), (1.0, 0.5)),   # middle, right half
    "h": ((0.0, 0.0), (0.5, 0.5)),    # upper left diagonal
    "i": ((0.5, 0.0), (0.5, 0.5)),    # upper center
    "j": ((1.0, 0.0), (0.5, 0.5)),    # upper right diagonal
    "k": ((0.0, 1.0), (0.5, 0.5)),    # lower left diagonal
    "l": ((0.5, 0.5), (0.5, 1.0)),    # lower center
    "m": ((1.0, 1.0), (0.5, 0.5)),    # lower right diagonal
}

GLYPH_SEGMENTS: Dict[str, Tuple[str, ...]] = {
    "0": ("a", "b", "c", "d", "e", "f", "j", "k"),
    "1": ("b", "c", "j"),
    "2": ("a", "b", "g1", "g2", "e", "d"),
    "3": ("a", "b", "g2", "c", "d"),
    "4": ("f", "g1", "g2", "b", "c"),
    "5": ("a", "f", "g1", "g2", "c", "d"),
    "6": ("a", "f", "e", "d", "c", "g1", "g2"),
    "7": ("a", "b", "c"),
    "8": ("a", "b", "c", "d", "e", "f", "g1", "g2"),
    "9": ("a", "b", "c", "d", "f", "g1", "g2"),
    "A": ("a", "b", "c", "e", "f", "g1", "g2"),
    "B": ("a", "b", "c", "d", "g2", "i", "l"),
    "F": ("a", "f", "e", "g1"),
}

# Glyph box as fractions of the image (left, top, right, bottom)
GLYPH_BOX = (0.2, 0.12, 0.8, 0.88)


@dataclass(frozen=True)
class ConcreteStyle:
    """One sampled draw from a GlyphStyle"""

    stroke_width: int
    foreground: Tuple[int, int, int]
    background: Tuple[int, int, int]
    offset: Tuple[int, int]


def sample_style(style: GlyphStyle, stream: RngStream) -> ConcreteStyle:
    rng = stream.child("style").generator()
    stroke = int(rng.integers(style.stroke_width[0], style.stroke_width[1] + 1))
    foreground = tuple(int(v) for v in rng.integers(style.foreground[0], style.foreground[1] + 1, size=3))
    background = tuple(int(v) for v in rng.integers(style.background[0], style.background[1] + 1, size=3))
    offset = tuple(int(v) for v in rng.integers(-style.jitter, style.jitter + 1, size=2))
    return ConcreteStyle(stroke, foreground, background, offset)  # type: ignore[arg-type]


def stroke_polygon(p0: Point, p1: Point, width: float) -> List[Point]:
    """Quadrilateral covering a stroke of the given width with square caps"""
    x0, y0 = p0
    x1, y1 = p1
    length = float(np.hypot(x1 - x0, y1 - y0))
    dx, dy = (x1 - x0) / length, (y1 - y0) / length
    half = width / 2.0
    # extend along the stroke direction for the caps, offset along the normal for the width
    ex, ey = dx * half, dy * half
    nx, ny = -dy * half, dx * half
    return [
        (x0 - ex + nx, y0 - ey + ny),
        (x1 + ex + nx, y1 + ey + ny),
        (x1 + ex - nx, y1 + ey - ny),
        (x0 - ex - nx, y0 - ey - ny),
    ]


def glyph_polygons(symbol: str, dims: Tuple[int, int], stroke_width: int,
                   offset: Tuple[int, int] = (0, 0)) -> List[List[Point]]:
    height, width = dims
    left, top, right, bottom = GLYPH_BOX
    half = stroke_width / 2.0
    x0 = left * width + half + offset[1]
    x1 = right * width - half + offset[1]
    y0 = top * height + half + offset[0]
    y1 = bottom * height - half + offset[0]

    polygons = []
    for name in GLYPH_SEGMENTS[symbol]:
        (u0, v0), (u1, v1) = SEGMENTS[name]
        p0 = (x0 + u0 * (x1 - x0), y0 + v0 * (y1 - y0))
        p1 = (x0 + u1 * (x1 - x0), y0 + v1 * (y1 - y0))
        polygons.append(stroke_polygon(p0, p1, stroke_width))
    return polygons


def render_glyph(class_symbol: str, style: GlyphStyle, dims: Sequence[int], stream: RngStream,
                 image_id: Optional[str] = None) -> GlyphImage:
    """Render one character; a pure function of its arguments"""
    label = label_for(class_symbol)
    height, width = validate_dims(dims)
    concrete = sample_style(style, stream)

    canvas = Image.new("RGB", (width, height), color=concrete.background)
    draw = ImageDraw.Draw(canvas)
    for polygon in glyph_polygons(class_symbol, (height, width), concrete.stroke_width, concrete.offset):
        draw.polygon(polygon, fill=concrete.foreground)

    pixels = np.asarray(canvas, dtype=np.uint8).copy()
    return GlyphImage(pixels=pixels, label=label, id=image_id or f"{class_symbol}-{stream.label}")

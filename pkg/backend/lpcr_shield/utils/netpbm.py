# LPCR Shield - Binary PPM / PGM Reader and Writer
import re
from pathlib import Path
from typing import Union

import numpy as np

from ..core.exceptions import MalformedImageError

PathLike = Union[str, Path]

# magic, width, height, maxval separated by whitespace; comments are not emitted by this writer
_HEADER_RE = re.compile(rb"^(P[56])\s+(\d+)\s+(\d+)\s+(\d+)\s")


def encode_ppm(pixels: np.ndarray) -> bytes:
    """Encode an HxWx3 uint8 array as binary PPM (P6, maxval 255)"""
    if pixels.ndim != 3 or pixels.shape[2] != 3:
        raise ValueError(f"PPM needs an HxWx3 array, got shape {pixels.shape}")
    if pixels.dtype != np.uint8:
        raise ValueError(f"PPM needs uint8 pixels, got {pixels.dtype}")
    height, width = pixels.shape[:2]
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(pixels).tobytes()


def encode_pgm(pixels: np.ndarray) -> bytes:
    """Encode an HxW uint8 array as binary PGM (P5, maxval 255)"""
    if pixels.ndim != 2:
        raise ValueError(f"PGM needs an HxW array, got shape {pixels.shape}")
    if pixels.dtype != np.uint8:
        raise ValueError(f"PGM needs uint8 pixels, got {pixels.dtype}")
    height, width = pixels.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(pixels).tobytes()


def decode_netpbm(data: bytes, source: str = "<bytes>") -> np.ndarray:
    """Decode P5/P6 bytes; P6 gives HxWx3, P5 gives HxW"""
    match = _HEADER_RE.match(data)
    if match is None:
        raise MalformedImageError(source, "missing or malformed P5/P6 header")

    magic = match.group(1)
    width, height, maxval = (int(match.group(i)) for i in (2, 3, 4))
    if width <= 0 or height <= 0:
        raise MalformedImageError(source, f"invalid dimensions {width}x{height}")
    if maxval != 255:
        raise MalformedImageError(source, f"unsupported maxval {maxval}")

    channels = 3 if magic == b"P6" else 1
    expected = width * height * channels
    payload = data[match.end():]
    if len(payload) < expected:
        raise MalformedImageError(source, f"truncated pixel data ({len(payload)} of {expected} bytes)")
    if len(payload) > expected:
        raise MalformedImageError(source, f"{len(payload) - expected} trailing bytes after pixel data")

    pixels = np.frombuffer(payload, dtype=np.uint8)
    if channels == 3:
        return pixels.reshape(height, width, 3).copy()
    return pixels.reshape(height, width).copy()


def write_ppm(path: PathLike, pixels: np.ndarray) -> None:
    Path(path).write_bytes(encode_ppm(pixels))


def write_pgm(path: PathLike, pixels: np.ndarray) -> None:
    Path(path).write_bytes(encode_pgm(pixels))


def read_ppm(path: PathLike) -> np.ndarray:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise MalformedImageError(str(path), f"unreadable: {e}") from e
    pixels = decode_netpbm(data, source=str(path))
    if pixels.ndim != 3:
        raise MalformedImageError(str(path), "expected a P6 color image")
    return pixels

# LPCR Shield - Rotation and Blur Augmentation
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..core.exceptions import DatasetValidationError
from ..utils.rng import RngStream
from .types import GlyphImage

# Gaussian support is cut at this many standard deviations
TRUNCATE_SIGMAS = 3.0


@dataclass(frozen=True)
class AugmentLimits:
    max_rotation: float = 10.0
    max_sigma: float = 1.5


@dataclass(frozen=True)
class AugmentParams:
    rotation_degrees: float = 0.0
    blur_sigma: float = 0.0

    def validate(self, limits: AugmentLimits) -> None:
        if abs(self.rotation_degrees) > limits.max_rotation:
            raise DatasetValidationError(
                "rotation_degrees", f"|{self.rotation_degrees}| exceeds {limits.max_rotation}"
            )
        if not 0.0 <= self.blur_sigma <= limits.max_sigma:
            raise DatasetValidationError("blur_sigma", f"{self.blur_sigma} outside [0, {limits.max_sigma}]")


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    """Normalized Gaussian taps on [-r, r] with r = round(3 sigma)"""
    if sigma <= 0:
        return np.ones(1, dtype=np.float64)
    radius = int(TRUNCATE_SIGMAS * sigma + 0.5)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (x / sigma) ** 2)
    return kernel / kernel.sum()


def gaussian_blur(pixels: np.ndarray, sigma: float) -> np.ndarray:
    """Separable blur over the two spatial axes of an HxWxC float image"""
    kernel = gaussian_kernel1d(sigma)
    out = ndimage.correlate1d(pixels.astype(np.float64), kernel, axis=0, mode="nearest")
    return ndimage.correlate1d(out, kernel, axis=1, mode="nearest")


def lightest_pixel(pixels: np.ndarray) -> np.ndarray:
    flat = pixels.reshape(-1, pixels.shape[-1]).astype(np.int64)
    return flat[int(np.argmax(flat.sum(axis=1)))]


def rotate_pixels(pixels: np.ndarray, degrees: float, fill: np.ndarray) -> np.ndarray:
    """Bilinear rotation about the image center; exposed corners take `fill`"""
    channels = [
        ndimage.rotate(
            pixels[..., c].astype(np.float64),
            degrees,
            reshape=False,
            order=1,
            mode="constant",
            cval=float(fill[c]),
        )
        for c in range(pixels.shape[-1])
    ]
    return np.stack(channels, axis=-1)


def augment(image: GlyphImage, params: AugmentParams, limits: AugmentLimits = AugmentLimits()) -> GlyphImage:
    params.validate(limits)
    if params.rotation_degrees == 0.0 and params.blur_sigma == 0.0:
        return image

    work = image.pixels.astype(np.float64)
    if params.rotation_degrees != 0.0:
        work = rotate_pixels(work, params.rotation_degrees, lightest_pixel(image.pixels))
    if params.blur_sigma > 0.0:
        work = gaussian_blur(work, params.blur_sigma)

    pixels = np.clip(np.rint(work), 0, 255).astype(np.uint8)
    return image.with_pixels(pixels)


def sample_augment_params(stream: RngStream, limits: AugmentLimits = AugmentLimits()) -> AugmentParams:
    rng = stream.child("augment").generator()
    rotation = float(rng.uniform(-limits.max_rotation, limits.max_rotation))
    sigma = float(rng.uniform(0.0, limits.max_sigma))
    return AugmentParams(rotation_degrees=rotation, blur_sigma=sigma)

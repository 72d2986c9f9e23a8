# LPCR Shield - Perturbation Metrics
import numpy as np

from ..core.exceptions import ImageShapeMismatchError


def mse(original: np.ndarray, perturbed: np.ndarray) -> float:
    """Mean squared difference over every H*W*3 value on the 0-255 scale"""
    a = np.asarray(original, dtype=np.float64)
    b = np.asarray(perturbed, dtype=np.float64)
    if a.shape != b.shape:
        raise ImageShapeMismatchError(a.shape, b.shape)
    return float(np.mean((a - b) ** 2)) if a.size else 0.0

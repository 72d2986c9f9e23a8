# Small exact classifiers for attack and analysis tests
from typing import Optional, Sequence

import numpy as np

from lpcr_shield.nn.network import log_softmax


class IntegerLinearClassifier:
    """logits = (pixels . W + b) / 2**shift with integer W and b.

    Integer accumulation plus a power-of-two scale makes every logit exact,
    so scores do not depend on how images are batched.
    """

    def __init__(self, weights: np.ndarray, bias: Optional[np.ndarray] = None, shift: int = 8):
        self.weights = np.asarray(weights, dtype=np.int64)
        self.num_classes = self.weights.shape[1]
        self.bias = np.zeros(self.num_classes, dtype=np.int64) if bias is None else np.asarray(bias, dtype=np.int64)
        self.scale = float(2 ** shift)

    def logits(self, images: np.ndarray) -> np.ndarray:
        flat = np.asarray(images).reshape(len(images), -1).astype(np.int64)
        return (flat @ self.weights + self.bias).astype(np.float64) / self.scale

    def predict_log_proba(self, images: np.ndarray) -> np.ndarray:
        return log_softmax(self.logits(images))

    def loss_input_gradient(self, images: np.ndarray, labels: Sequence[int]) -> np.ndarray:
        proba = np.exp(self.predict_log_proba(images))
        proba[np.arange(len(labels)), np.asarray(labels)] -= 1.0
        # d logits / d (pixels / 255) = 255 * W / scale
        grad = proba @ self.weights.T.astype(np.float64) * (255.0 / self.scale)
        return grad.reshape(np.asarray(images).shape)


class ConstantClassifier:
    """Predicts the same class for every input"""

    def __init__(self, num_classes: int = 13, label: int = 0):
        self.num_classes = num_classes
        self.label = label

    def predict_log_proba(self, images: np.ndarray) -> np.ndarray:
        logits = np.zeros((len(images), self.num_classes))
        logits[:, self.label] = 4.0
        return log_softmax(logits)

    def loss_input_gradient(self, images: np.ndarray, labels: Sequence[int]) -> np.ndarray:
        return np.zeros(np.asarray(images).shape, dtype=np.float64)


DARK_ROW = 7
BRIGHT = 200
DARK = 20


def row_detector(height: int = 16, width: int = 16, row: int = DARK_ROW) -> IntegerLinearClassifier:
    """Class 1 iff the summed darkness of `row` passes a threshold halfway between BRIGHT and DARK.

    A full-width horizontal band over the row flips the decision; narrow
    vertical bands never do; a disk needs to cover more than half the row.
    """
    weights = np.zeros((height, width, 3, 2), dtype=np.int64)
    weights[row, :, :, 1] = -1
    threshold = (BRIGHT + DARK) // 2 * width * 3
    return IntegerLinearClassifier(weights.reshape(-1, 2), bias=np.array([0, threshold]))


def bright_image(height: int = 16, width: int = 16) -> np.ndarray:
    """Uniform BRIGHT image with a small DARK blob away from DARK_ROW"""
    pixels = np.full((height, width, 3), BRIGHT, dtype=np.uint8)
    pixels[12:14, 2:4] = DARK
    return pixels

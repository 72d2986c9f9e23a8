# LPCR Shield - Attack Configuration, Records and Model Protocol
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Protocol, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..core.exceptions import ConfigurationError
from .patches import ALL_SHAPES, PatchShape, PatchSpec, max_size

FGSM = "fgsm"
EXHAUSTIVE = "exhaustive"


class Classifier(Protocol):
    """What an attack needs from a model"""

    num_classes: int

    def predict_log_proba(self, images: np.ndarray) -> np.ndarray:
        """(N, H, W, 3) uint8 images -> (N, num_classes) log-probabilities"""
        ...

    def loss_input_gradient(self, images: np.ndarray, labels: Sequence[int]) -> np.ndarray:
        """Per-sample cross-entropy gradient with respect to [0, 1]-scaled pixels"""
        ...


class AttackConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    shapes: List[PatchShape] = Field(default_factory=lambda: list(ALL_SHAPES))
    # per-shape threshold; absent shapes use the full bound
    size_limits: Dict[PatchShape, int] = Field(default_factory=dict)
    require_misclassification: bool = True
    loss: Literal["cross_entropy"] = "cross_entropy"
    batch_size: int = Field(default=256, ge=1)
    target_split: Literal["validation", "all"] = "validation"
    max_images: Optional[int] = Field(default=None, ge=1)
    run_fgsm: bool = True
    fgsm_epsilon: float = Field(default=0.03, gt=0.0, le=1.0)

    def size_limit(self, shape: PatchShape, dims: Sequence[int]) -> int:
        bound = max_size(shape, dims)
        limit = self.size_limits.get(shape)
        if limit is None:
            return bound
        if not 1 <= limit <= bound:
            raise ConfigurationError(
                f"attack.size_limits.{shape.value}", f"{limit} outside [1, {bound}] for {dims[0]}x{dims[1]} images"
            )
        return limit


@dataclass
class AttackRecord:
    """Outcome of one attack on one image.

    For a failed attack `adversarial` is the untouched input and the
    prediction fields describe the clean image.
    """

    image_id: str
    true_label: int
    shape: str
    success: bool
    patch: Optional[PatchSpec]
    predicted_label: int
    confidence: float
    loss: float
    mse: float
    method: str = EXHAUSTIVE
    image_dims: Tuple[int, int] = (0, 0)
    queries: int = 0
    adversarial: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "image_id": self.image_id,
            "true_label": self.true_label,
            "shape": self.shape,
            "method": self.method,
            "success": self.success,
            "patch": self.patch.to_dict() if self.patch else None,
            "predicted_label": self.predicted_label,
            "confidence": self.confidence,
            "loss": self.loss,
            "mse": self.mse,
            "image_dims": list(self.image_dims),
            "queries": self.queries,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "AttackRecord":
        patch = payload.get("patch")
        dims = payload.get("image_dims", [0, 0])
        return cls(
            image_id=str(payload["image_id"]),
            true_label=int(payload["true_label"]),
            shape=str(payload["shape"]),
            success=bool(payload["success"]),
            patch=PatchSpec.from_dict(patch) if patch else None,
            predicted_label=int(payload["predicted_label"]),
            confidence=float(payload["confidence"]),
            loss=float(payload["loss"]),
            mse=float(payload["mse"]),
            method=str(payload.get("method", EXHAUSTIVE)),
            image_dims=(int(dims[0]), int(dims[1])),
            queries=int(payload.get("queries", 0)),
        )

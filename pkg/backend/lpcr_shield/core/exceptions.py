# LPCR Shield - Custom Exception Classes
from typing import Any, Dict, Optional
import logging

logger = logging.getLogger(__name__)


class LpcrException(Exception):
    """Base exception class for LPCR Shield"""
    def __init__(self, message: str, code: str = "LPCR_ERROR", details: Optional[Dict[str, Any]] = None):
        self.message = message
        self.code = code
        self.details = details or {}
        super().__init__(self.message)

    def __str__(self) -> str:
        return f"[{self.code}] {self.message}"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": True,
            "code": self.code,
            "message": self.message,
            "details": self.details,
        }


# Configuration exceptions
class ConfigurationError(LpcrException):
    def __init__(self, field: str, message: str):
        super().__init__(
            message=f"Invalid configuration for '{field}': {message}",
            code="CONFIG_ERROR",
            details={"field": field, "validation_error": message},
        )


# Data exceptions
class DataException(LpcrException):
    """Base exception for dataset and file-format errors"""
    pass


class DatasetValidationError(DataException):
    def __init__(self, field: str, message: str):
        super().__init__(
            message=f"Dataset validation failed for '{field}': {message}",
            code="DATASET_VALIDATION_ERROR",
            details={"field": field, "validation_error": message},
        )


class DatasetIntegrityError(DataException):
    def __init__(self, path: str, expected: str, actual: str):
        super().__init__(
            message=f"Checksum mismatch for '{path}'",
            code="DATASET_INTEGRITY_ERROR",
            details={"path": path, "expected": expected, "actual": actual},
        )


class MalformedImageError(DataException):
    def __init__(self, path: str, reason: str):
        super().__init__(
            message=f"Malformed image file '{path}': {reason}",
            code="MALFORMED_IMAGE",
            details={"path": path, "reason": reason},
        )


class ModelFileError(DataException):
    def __init__(self, path: str, reason: str):
        super().__init__(
            message=f"Cannot load model file '{path}': {reason}",
            code="MODEL_FILE_ERROR",
            details={"path": path, "reason": reason},
        )


# Model exceptions
class ModelException(LpcrException):
    """Base exception for network construction and shape errors"""
    pass


class LayerShapeError(ModelException):
    def __init__(self, layer_index: int, kind: str, reason: str):
        super().__init__(
            message=f"Layer {layer_index} ({kind}) rejected its input: {reason}",
            code="LAYER_SHAPE_ERROR",
            details={"layer_index": layer_index, "kind": kind, "reason": reason},
        )


class ArchitectureError(ModelException):
    def __init__(self, reason: str):
        super().__init__(
            message=f"Invalid architecture: {reason}",
            code="ARCHITECTURE_ERROR",
            details={"reason": reason},
        )


# Numeric exceptions
class NumericException(LpcrException):
    """Base exception for numerical failures"""
    pass


class TrainingDivergenceError(NumericException):
    def __init__(self, epoch: int, loss: float):
        super().__init__(
            message=f"Training diverged at epoch {epoch} (loss={loss})",
            code="TRAINING_DIVERGED",
            details={"epoch": epoch, "loss": loss},
        )


class GradientCheckFailedError(NumericException):
    def __init__(self, worst_tensor: str, error: float, tolerance: float):
        super().__init__(
            message=f"Gradient check failed on '{worst_tensor}': relative error {error:.3e} > {tolerance:.1e}",
            code="GRADIENT_CHECK_FAILED",
            details={"tensor": worst_tensor, "error": error, "tolerance": tolerance},
        )


# Attack exceptions
class AttackException(LpcrException):
    """Base exception for attack-related errors"""
    pass


class PatchBoundsError(AttackException):
    def __init__(self, patch: str, image_dims: tuple, reason: str):
        super().__init__(
            message=f"Patch {patch} does not fit a {image_dims[0]}x{image_dims[1]} image: {reason}",
            code="PATCH_OUT_OF_BOUNDS",
            details={"patch": patch, "image_dims": list(image_dims), "reason": reason},
        )


class ImageShapeMismatchError(AttackException):
    def __init__(self, left: tuple, right: tuple):
        super().__init__(
            message=f"Image shapes differ: {left} vs {right}",
            code="IMAGE_SHAPE_MISMATCH",
            details={"left": list(left), "right": list(right)},
        )


# Analysis exceptions
class AnalysisException(LpcrException):
    """Base exception for report generation errors"""
    pass


class EmptyHardSetError(AnalysisException):
    def __init__(self) -> None:
        super().__init__(
            message="Hard set is empty; nothing to evaluate",
            code="EMPTY_HARD_SET",
        )


class RecordMismatchError(AnalysisException):
    def __init__(self, reason: str, left: Any = None, right: Any = None):
        super().__init__(
            message=f"Attack record sets are not comparable: {reason}",
            code="RECORD_MISMATCH",
            details={"left": left, "right": right},
        )


# Exit codes used by the command line
EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the CLI exit code"""
    exit_code_map = [
        (ConfigurationError, EXIT_USAGE),
        (DataException, EXIT_DATA),
        (NumericException, EXIT_NUMERIC),
    ]
    for exc_class, code in exit_code_map:
        if isinstance(exc, exc_class):
            return code
    return EXIT_UNEXPECTED


def log_and_raise(exception_class, *args, **kwargs):
    """Helper function to log and raise exceptions"""
    exc = exception_class(*args, **kwargs)
    logger.error(f"Raising exception: {exc}")
    raise exc

#!/usr/bin/env python3
"""
adsorbkit Custom Exceptions

Provides a hierarchy of custom exceptions for better error handling
and more descriptive error messages across the toolkit.
"""

from typing import Optional, Sequence


class AdsorbKitError(Exception):
    """
    Base exception for all adsorbkit errors.

    All custom exceptions in adsorbkit should inherit from this class.
    """

    def __init__(self, message: str, details: dict = None):
        """
        Initialize adsorbkit error.

        Args:
            message: Human-readable error message
            details: Optional dictionary with additional error context
        """
        self.message = message
        self.details = details or {}
        super().__init__(self.message)

    def __str__(self) -> str:
        if self.details:
            details_str = ", ".join(f"{k}={v}" for k, v in self.details.items())
            return f"{self.message} ({details_str})"
        return self.message


# Configuration Errors
class ConfigurationError(AdsorbKitError):
    """Raised when there's a configuration error."""

    pass


class ConfigFileNotFoundError(ConfigurationError):
    """Raised when configuration file is not found."""

    pass


class ConfigValidationError(ConfigurationError):
    """Raised when configuration validation fails."""

    def __init__(
        self,
        message: str,
        valid_keys: Optional[Sequence[str]] = None,
        details: dict = None,
    ):
        details = details or {}
        if valid_keys is not None:
            details["valid_keys"] = ", ".join(sorted(valid_keys))
        super().__init__(message, details)


# Tensor / Autodiff Errors
class TensorError(AdsorbKitError):
    """Base exception for tensor and differentiation errors."""

    pass


class ShapeMismatchError(TensorError):
    """Raised when operand shapes do not conform to an op's rule."""

    def __init__(self, op: str, *shapes: tuple, details: dict = None):
        details = details or {}
        details["op"] = op
        details["shapes"] = " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(f"Shape mismatch in '{op}'", details)


class AxisError(TensorError):
    """Raised when an op names an axis the operand does not have."""

    pass


class TapeError(TensorError):
    """Raised on tape misuse (mixed tapes, non-scalar outputs, untracked inputs)."""

    pass


# Dataset Errors
class DatasetError(AdsorbKitError):
    """Base exception for dataset errors."""

    pass


class DatasetFormatError(DatasetError):
    """Raised when a dataset line cannot be parsed."""

    def __init__(self, message: str, line: int = None, details: dict = None):
        details = details or {}
        if line is not None:
            details["line"] = line
        super().__init__(message, details)


class StructureValidationError(DatasetError):
    """Raised when a structure violates its invariants."""

    def __init__(
        self,
        message: str,
        record_id: str = None,
        field: str = None,
        details: dict = None,
    ):
        details = details or {}
        if record_id is not None:
            details["record_id"] = record_id
        if field is not None:
            details["field"] = field
        super().__init__(message, details)


class SplitError(DatasetError):
    """Raised when a split or devset request is invalid."""

    pass


# Graph Errors
class GraphError(AdsorbKitError):
    """Base exception for graph errors."""

    pass


class FeatureDimensionError(GraphError):
    """Raised when a feature's leading dimension does not match the graph."""

    def __init__(
        self, message: str, expected: int = None, given: int = None, details: dict = None
    ):
        details = details or {}
        if expected is not None:
            details["expected"] = expected
        if given is not None:
            details["given"] = given
        super().__init__(message, details)


class MissingFeatureError(GraphError):
    """Raised when a requested feature is not stored on the graph."""

    pass


class PointCloudError(AdsorbKitError):
    """Raised when a point cloud cannot be built."""

    pass


# Model Errors
class ModelError(AdsorbKitError):
    """Raised when a model receives unusable input or parameters."""

    pass


class CheckpointError(AdsorbKitError):
    """Raised when a checkpoint cannot be written or restored."""

    def __init__(self, message: str, tensor: str = None, details: dict = None):
        details = details or {}
        if tensor is not None:
            details["tensor"] = tensor
        super().__init__(message, details)


# Training Errors
class TrainingError(AdsorbKitError):
    """Base exception for training-loop failures."""

    pass


class NonFiniteLossError(TrainingError):
    """Raised when a step produces a NaN or infinite loss."""

    def __init__(self, message: str, step: int = None, details: dict = None):
        details = details or {}
        if step is not None:
            details["step"] = step
        super().__init__(message, details)


class WorkerError(TrainingError):
    """Raised when a data-parallel worker fails."""

    def __init__(self, message: str, rank: int = None, details: dict = None):
        details = details or {}
        if rank is not None:
            details["rank"] = rank
        super().__init__(message, details)


# Communication Errors
class CommunicationError(AdsorbKitError):
    """Base exception for ring communication errors."""

    pass


class PeerTimeoutError(CommunicationError):
    """Raised when a ring peer does not answer in time."""

    pass


class FrameChecksumError(CommunicationError):
    """Raised when a received frame fails its checksum."""

    def __init__(self, message: str, sequence: int = None, details: dict = None):
        details = details or {}
        if sequence is not None:
            details["sequence"] = sequence
        super().__init__(message, details)


class RetryExhaustedError(CommunicationError):
    """Raised when retry attempts are exhausted."""

    def __init__(self, message: str, attempts: int = None, details: dict = None):
        details = details or {}
        if attempts is not None:
            details["attempts"] = attempts
        super().__init__(message, details)


# Validation Errors
class ValidationError(AdsorbKitError):
    """Raised when validation fails."""

    pass


class InvalidInputError(ValidationError):
    """Raised when input validation fails."""

    pass


# Errors the CLI reports as bad input (exit code 2)
INPUT_ERRORS = (
    ConfigurationError,
    DatasetError,
    CheckpointError,
    PointCloudError,
    ValidationError,
)


# Export all exceptions
__all__ = [
    # Base
    "AdsorbKitError",
    # Configuration
    "ConfigurationError",
    "ConfigFileNotFoundError",
    "ConfigValidationError",
    # Tensor
    "TensorError",
    "ShapeMismatchError",
    "AxisError",
    "TapeError",
    # Dataset
    "DatasetError",
    "DatasetFormatError",
    "StructureValidationError",
    "SplitError",
    # Graph
    "GraphError",
    "FeatureDimensionError",
    "MissingFeatureError",
    "PointCloudError",
    # Model
    "ModelError",
    "CheckpointError",
    # Training
    "TrainingError",
    "NonFiniteLossError",
    "WorkerError",
    # Communication
    "CommunicationError",
    "PeerTimeoutError",
    "FrameChecksumError",
    "RetryExhaustedError",
    # Validation
    "ValidationError",
    "InvalidInputError",
    "INPUT_ERRORS",
]

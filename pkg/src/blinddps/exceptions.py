"""
Exception hierarchy for the BlindDPS toolkit.

Every error raised on purpose by the library derives from BlindDPSException.
Each class carries the process exit code the command line maps it to.
"""

from typing import Any, Dict, Optional


class BlindDPSException(Exception):
    """Base exception for all BlindDPS errors."""

    exit_code = 1

    def to_record(self) -> Dict[str, Any]:
        """Machine-readable error record written to stderr by the CLI."""
        return {
            "error": type(self).__name__,
            "message": str(self),
            "exit_code": self.exit_code,
        }


class ParameterError(BlindDPSException):
    """Raised when an argument lies outside its valid range."""

    exit_code = 2


class DegenerateStepError(ParameterError):
    """Raised when a step index makes a required division degenerate (ᾱ_i = 1 or ᾱ_i = 0)."""


class ConfigError(BlindDPSException):
    """Raised for malformed or schema-invalid experiment configuration."""

    exit_code = 2


class ArtifactIOError(BlindDPSException):
    """Raised when an artifact is missing, unreadable or has a corrupt header."""

    exit_code = 3


class DivergenceError(BlindDPSException):
    """
    Raised when a chain, a training run or a gradient becomes non-finite.

    Args:
        message: Human readable description
        step: Reverse-diffusion step index at which the failure was detected
        epoch: Training epoch at which the failure was detected
        last_snapshot: Last finite state (dict of arrays) before the failure
    """

    exit_code = 4

    def __init__(self, message: str, step: Optional[int] = None,
                 epoch: Optional[int] = None, last_snapshot: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.step = step
        self.epoch = epoch
        self.last_snapshot = last_snapshot

    def to_record(self) -> Dict[str, Any]:
        record = super().to_record()
        if self.step is not None:
            record["step"] = self.step
        if self.epoch is not None:
            record["epoch"] = self.epoch
        return record


class CapabilityError(BlindDPSException):
    """Raised when a requested computation is not supported for the given variant."""

    exit_code = 5


class ShapeError(BlindDPSException):
    """Raised when array shapes are inconsistent."""

    exit_code = 6

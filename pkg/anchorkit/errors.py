"""
Exception hierarchy for anchorkit.

Every error raised on purpose by the package derives from ``AnchorkitError`` and
from the builtin exception a caller would naturally catch for that condition.
"""
from typing import Any, Dict, Optional


class AnchorkitError(Exception):
    """Base class for all anchorkit errors."""


class ShapeError(AnchorkitError, ValueError):
    """Operand shapes are incompatible."""


class TapeError(AnchorkitError, RuntimeError):
    """Backward pass requested on something the tape cannot differentiate."""


class NumericError(AnchorkitError, ArithmeticError):
    """A forward op would produce a non-finite value from finite inputs."""


class ChannelError(AnchorkitError, ValueError):
    """Invalid input to the wireless channel."""


class DeepFadeError(ChannelError):
    """A fading draw is too close to zero to equalize."""

    def __init__(self, message: str, blocks: Optional[list] = None):
        super().__init__(message)
        self.blocks = blocks or []


class RateError(AnchorkitError, ValueError):
    """Requested compression rate cannot be realised by the stride plan."""


class GeometryError(AnchorkitError, ValueError):
    """A network cannot map its input geometry onto the requested output."""


class FrozenModelError(AnchorkitError, RuntimeError):
    """An optimizer step was attempted on frozen parameters."""


class AnchorNotFrozenError(AnchorkitError, RuntimeError):
    """Stage-2 training was given an encoder that is not frozen."""


class NumericDivergenceError(AnchorkitError, RuntimeError):
    """Training produced a non-finite loss and was aborted."""

    def __init__(self, message: str, last_good: Optional[Dict[str, Any]] = None,
                 diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.last_good = last_good or {}
        self.diagnostics = diagnostics or {}


class SnapshotError(AnchorkitError, LookupError):
    """A snapshot needed by the forgetting protocol is missing."""


class ImageFormatError(AnchorkitError, OSError):
    """Image file is unsupported, truncated or corrupt."""


class CheckpointError(AnchorkitError, OSError):
    """Checkpoint container is malformed or incompatible."""


class ReportError(AnchorkitError, ValueError):
    """Report inputs are inconsistent."""

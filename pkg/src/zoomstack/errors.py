"""Exception hierarchy shared across the engine.

The CLI maps these onto its exit-code contract: validation problems exit 1,
backend (denoiser) problems exit 2, violated internal invariants exit 3.
"""


class ZoomStackError(Exception):
    """Base class for all engine errors."""


class ValidationError(ZoomStackError):
    """Bad user input: shapes, ranges, file contents, CLI arguments."""


class DimensionError(ValidationError):
    """Array dimensions incompatible with the requested operation."""


class BackendError(ZoomStackError):
    """A denoiser backend failed or returned something unusable."""


class ProtocolError(BackendError):
    """Malformed or truncated frame on the denoiser wire protocol."""


class InvariantViolation(ZoomStackError):
    """An internal consistency property did not hold; message names it."""

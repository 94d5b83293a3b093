"""Exception types shared across the package.

File-not-found and plain I/O failures are left to the builtin
FileNotFoundError / OSError; everything domain-specific derives from
ZerolineError so callers can catch one base.
"""

from __future__ import annotations


class ZerolineError(Exception):
    """Base class for all zeroline errors."""


class PgmError(ZerolineError):
    """Base for PGM codec failures."""


class MalformedHeaderError(PgmError):
    pass


class UnsupportedMaxvalError(PgmError):
    pass


class TruncatedRasterError(PgmError):
    pass


class OutOfBoundsError(ZerolineError):
    """Sample position outside the valid interpolation domain."""


class ImageTooSmallError(ZerolineError):
    pass


class SingularHomographyError(ZerolineError):
    pass


class PointAtInfinityError(ZerolineError):
    """Homogeneous w collapsed to ~0 while mapping a point."""


class DegenerateConfigurationError(ZerolineError):
    """Point configuration cannot constrain a homography (collinear/coincident)."""


class NumericalFailureError(ZerolineError):
    pass


class TooFewMatchesError(ZerolineError):
    pass


class NoConsensusError(ZerolineError):
    """RANSAC finished without an inlier set of the required size."""


class KeypointBorderError(ZerolineError):
    """Keypoint too close to the image border to describe."""


class NoCandidateRegionError(ZerolineError):
    """Coarse target localization found no plausible bright region."""


class SegmentationFailureError(ZerolineError):
    """Both registration passes failed; carries per-pass diagnostics."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SchemaViolationError(ZerolineError):
    """A JSON document does not match its schema; names the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class FrameMismatchError(ZerolineError):
    """Detections are in the raw frame but no homography was supplied."""


class EmptyGroupError(ZerolineError):
    pass


class NonPositiveDistanceError(ZerolineError):
    pass


class NoGroundTruthError(ZerolineError):
    pass


class EmptyDatasetError(ZerolineError):
    pass


class InvalidConfigError(ZerolineError):
    pass

"""Error taxonomy for the curation engine.

Every failure mode raised by the public API is a named class here, so
callers can catch precisely and the CLI can map errors to exit codes.
"""

from __future__ import annotations


class VtcurateError(Exception):
    """Base class for all engine errors."""


# --- manifest ---------------------------------------------------------------

class MalformedLine(VtcurateError):
    """A manifest line is not parseable at all (bad JSON, missing type)."""


class InvalidRecord(VtcurateError):
    """A record violates one or more invariants.

    ``violations`` lists every violated invariant, not just the first.
    """

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


# --- scene segmentation -----------------------------------------------------

class LengthMismatch(VtcurateError):
    """Frame signatures of unequal vector length were compared."""


class EmptyClip(VtcurateError):
    """Dynamics classification was asked for an empty delta list."""


class EmptyStream(VtcurateError):
    """A signature stream contained no frames."""


# --- external services ------------------------------------------------------

class ServiceError(VtcurateError):
    """A service call failed (non-timeout error response)."""


class ServiceTimeout(ServiceError):
    """A service call exceeded its configured timeout."""


class PartialResult(VtcurateError):
    """Captioning produced only some scales.

    ``failed`` maps scale name ("fine", "summary", "coarse") to the error
    that exhausted its retries; the successfully produced pieces are kept
    so a re-run only needs the missing scales.
    """

    def __init__(self, failed: dict[str, Exception], fine_frame_captions=None,
                 fine_summary: str = "", coarse_caption: str = ""):
        self.failed = dict(failed)
        self.fine_frame_captions = list(fine_frame_captions or [])
        self.fine_summary = fine_summary
        self.coarse_caption = coarse_caption
        super().__init__(f"caption scales failed: {sorted(self.failed)}")


# --- scoring ----------------------------------------------------------------

class EmptyInput(VtcurateError):
    """An aggregate was asked for on an empty collection."""


class KTooLarge(VtcurateError):
    """Requested more uniform samples than there are frames."""


class ZeroVector(VtcurateError):
    """Cosine similarity is undefined for a zero vector."""


class DimMismatch(VtcurateError):
    """Vectors of different dimensionality were combined."""


# --- subset sampling ----------------------------------------------------------

class MissingVideo(VtcurateError):
    """A clip references a video absent from the duration map."""


class NonpositiveDuration(VtcurateError):
    """A source video has duration <= 0."""


class MissingScore(VtcurateError):
    """A clip lacks the similarity score required by the FLT filter."""


# --- interleaved sequences ----------------------------------------------------

class EmptyClipList(VtcurateError):
    """An interleaved sequence was requested for zero clips."""


class MixedVideos(VtcurateError):
    """Clips from more than one video were passed to a single-video builder."""


class SameVideo(VtcurateError):
    """Format-C concatenation requires items from different videos."""


class WrongInputFormat(VtcurateError):
    """Format-C concatenation accepts format-A items only."""


# --- alignment numerics -------------------------------------------------------

class ShapeMismatch(VtcurateError):
    """Matrix operands have inconsistent shapes."""


class ZeroRow(VtcurateError):
    """An embedding batch contains an all-zero row."""


class RatioOutOfRange(VtcurateError):
    """Mask ratio outside [0, 1)."""


class LayoutMismatch(VtcurateError):
    """Token matrix does not match the declared token layout."""


class DegenerateBatch(VtcurateError):
    """Alignment training needs at least two pairs."""


class BadK(VtcurateError):
    """k outside the valid range for a ranking metric."""


# --- statistics ---------------------------------------------------------------

class BadEdges(VtcurateError):
    """Histogram edges are not strictly ascending (or fewer than two)."""


# --- pipeline -----------------------------------------------------------------

class ValidationFailed(VtcurateError):
    """A stage input failed validation; carries the first offending records."""

    def __init__(self, message: str, offenders: list[str] | None = None):
        self.offenders = list(offenders or [])
        super().__init__(message)


class MissingInput(VtcurateError):
    """A required input file for a stage does not exist."""


class ConfigConflict(VtcurateError):
    """Stage configuration is inconsistent or unusable."""

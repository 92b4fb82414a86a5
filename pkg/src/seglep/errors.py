"""Exception hierarchy shared by the whole package.

Every error raised on a documented failure path derives from SeglepError so
callers (and the CLI) can separate bad input from genuine bugs.
"""


class SeglepError(Exception):
    """Base class for all package-level errors."""


# --- file and format errors -------------------------------------------------

class FileMissing(SeglepError):
    """A required input path does not exist."""


class IoFailure(SeglepError):
    """The operating system refused a read or write."""


class MalformedImage(SeglepError):
    """A PPM/PGM payload violates its header or the header is unreadable."""


class MalformedMap(SeglepError):
    """A semantic or contour map is structurally broken."""


class CategoryMismatch(SeglepError):
    """Sidecar category list disagrees with the payload's category count."""


class NoBackgroundCategory(SeglepError):
    """The category list does not flag exactly one background entry."""


class ValueOutOfRange(SeglepError):
    """A stored value lies outside its documented range."""


class DimensionMismatch(SeglepError):
    """Two rasters that must share a pixel grid do not."""


class TooManyRegions(SeglepError):
    """A label map holds more region ids than the output format can carry."""


# --- merge engine errors ----------------------------------------------------

class NotAdjacent(SeglepError):
    """The two regions share no boundary segment."""


class DeadRegion(SeglepError):
    """A region id refers to a region that was already merged away."""


class EmptyTable(SeglepError):
    """The priority table holds no candidate pairs."""


class Exhausted(SeglepError):
    """No further merge is possible (fewer than two live regions)."""


# --- hierarchy and evaluation errors ----------------------------------------

class IncompleteHierarchy(SeglepError):
    """The event log stops before all regions are merged into one."""


class EmptyGtSet(SeglepError):
    """An evaluation was requested against zero ground-truth partitions."""


class RaggedSweep(SeglepError):
    """Per-image score sweeps do not share one threshold grid."""


class EmptyTrainSet(SeglepError):
    """Calibration was requested on an empty training set."""

"""Exceptions raised on purpose by the exporter."""


class ExporterError(Exception):
    """Base class for every failure this package reports itself."""


class FileMissing(ExporterError):
    """An input path does not exist."""


class MalformedInput(ExporterError):
    """A file exists but cannot be decoded as what it claims to be."""


class RankError(ExporterError):
    """The score tensor does not have exactly three axes."""


class CategoryCountMismatch(ExporterError):
    """Tensor depth and category list length disagree."""


class NoBackgroundCategory(ExporterError):
    """The category list needs exactly one background entry."""


class DimensionMismatch(ExporterError):
    """Two inputs that must share a shape do not."""

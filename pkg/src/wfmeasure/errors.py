"""Exception hierarchy shared by every module of the package."""


class WfmError(Exception):
    """Base class for all errors raised by wfmeasure."""


class ParameterError(WfmError, ValueError):
    """A scalar parameter lies outside its valid range."""


class ShapeError(WfmError, ValueError):
    """Input grids have incompatible or invalid shapes/values."""


class UndefinedMetricError(WfmError, ValueError):
    """The metric is undefined for this input (e.g. no foreground pixels)."""


class OracleSizeError(WfmError):
    """The image is too large for the dense O(n^2) oracle."""


class StaleCacheError(WfmError):
    """A forward cache was reused with inputs it was not computed from."""


class ImageFormatError(WfmError, OSError):
    """An image file could not be read as 8-bit grayscale."""

"""Exception hierarchy shared by every module of the package."""


class SharpMetricsError(Exception):
    """Base class for all errors raised by sharpmetrics."""


class ImageIOError(SharpMetricsError, OSError):
    """A file could not be read or written."""

    def __init__(self, path, reason):
        self.path = str(path)
        self.reason = reason
        super().__init__(f"{self.path}: {reason}")


class ImageFormatError(SharpMetricsError, ValueError):
    """The container or pixel layout is not supported."""


class ImageSizeError(SharpMetricsError, ValueError):
    """An image is too small for the requested operation."""


class DimensionError(SharpMetricsError, ValueError):
    """Two operands that must share a shape do not."""


class ParameterError(SharpMetricsError, ValueError):
    """A numeric parameter lies outside its valid domain."""


class SampleSizeError(SharpMetricsError, ValueError):
    """Too few observations for a statistical test."""

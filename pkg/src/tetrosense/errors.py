"""Exception types raised across the package."""


class TetrosenseError(Exception):
    """Base class for all package errors."""


class DimensionError(TetrosenseError, ValueError):
    """Image or operator dimensions are incompatible."""


class ParameterError(TetrosenseError, ValueError):
    """A parameter lies outside its allowed range."""


class ImageFormatError(TetrosenseError, ValueError):
    """Raster file is not in a supported format."""


class LayoutParseError(TetrosenseError, ValueError):
    """Layout file could not be parsed."""


class LayoutValidationError(TetrosenseError, ValueError):
    """Layout violates an exact-cover or shape invariant."""

    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position


class IceGraphError(TetrosenseError, ValueError):
    """Ice graph is malformed or does not satisfy the node rule."""


class SearchFailure(TetrosenseError, RuntimeError):
    """Random search exhausted its try budget."""

    def __init__(self, message, tries):
        super().__init__(message)
        self.tries = tries


class UnsupportedCombination(TetrosenseError, ValueError):
    """Reconstruction method cannot handle the given layout."""

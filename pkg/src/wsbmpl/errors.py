"""Exception and warning types shared across the package."""


class WSBMError(Exception):
    """Base class for package errors."""


class InvalidParameterError(WSBMError, ValueError):
    """A numeric parameter is outside its admissible range."""


class InvalidInputError(WSBMError, ValueError):
    """Input data has the wrong shape, length or content."""


class ConvergenceError(WSBMError, RuntimeError):
    """An iterative numeric routine failed to converge."""


class DegeneracyWarning(UserWarning):
    """A degenerate case was hit and handled (empty block, clamped value, ...)."""

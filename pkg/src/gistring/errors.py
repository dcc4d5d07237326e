"""Exception hierarchy shared by all gistring modules."""


class GisError(Exception):
    """Base class for errors raised by this package."""


class InvalidSpecError(GisError):
    """A string spec, family, or config violates a validity requirement."""


class StructureError(GisError):
    """Objects that must share a grid, a spectral parameter, or a dimension do not."""


class PropagationOverflowError(GisError):
    """A propagation produced a non-finite state.

    The first offending cell index is stored in ``cell``.
    """

    def __init__(self, cell: int, message: str | None = None):
        self.cell = cell
        super().__init__(message or f"non-finite state while crossing cell {cell}")


class NearEigenvalueError(GisError):
    """The spectral parameter sits at (or numerically near) an eigenvalue."""


class NumericError(GisError):
    """An iterative numerical routine failed to converge or to self-validate."""


class InsufficientDataError(GisError):
    """Not enough valid data points for the requested fit."""


class ExpressionError(ValueError):
    """Parse or evaluation failure of a coefficient expression.

    ``offset`` is the byte offset into the source text, when known.
    """

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (offset {offset})"
        super().__init__(message)

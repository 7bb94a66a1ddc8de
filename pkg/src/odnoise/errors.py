"""Exception types raised by odnoise."""


class ODNoiseError(ValueError):
    """Base class for all input and consistency errors."""


class ShapeMismatchError(ODNoiseError):
    pass


class InvalidMatrixError(ODNoiseError):
    pass


class ConsistencyError(ODNoiseError):
    """An internal invariant did not hold (should never happen on valid input)."""


class EmptyMaskError(ODNoiseError):
    pass


class ClampError(ODNoiseError):
    pass


class ExtrapolationError(ODNoiseError):
    pass


class FormatError(ODNoiseError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message: str, path=None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)
        self.path = path
        self.line = line

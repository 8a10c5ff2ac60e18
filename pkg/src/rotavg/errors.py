"""Exception types raised by rotavg."""


class RotavgError(Exception):
    """Base class for all rotavg errors."""


class DegenerateInputError(RotavgError, ValueError):
    """Input is too corrupted or structurally incomplete to process."""


class NumericalError(RotavgError, ArithmeticError):
    """A decomposition failed or produced non-finite values."""


class ParseError(RotavgError, ValueError):
    """A data file is malformed."""

    def __init__(self, message: str, lineno: int | None = None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if lineno is not None:
            where += f":{lineno}" if where else f"line {lineno}"
        super().__init__(f"{where}: {message}" if where else message)

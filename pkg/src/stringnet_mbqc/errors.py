"""Exception types shared across the package."""


class StringNetError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(StringNetError, ValueError):
    pass


class ResourceLimitError(StringNetError):
    """A size cap (qubits, cycle rank, measured sites) would be exceeded."""


class CellRangeError(StringNetError, IndexError):
    pass


class ImpossibleOutcomeError(StringNetError):
    """A forced measurement outcome has (numerically) zero probability."""


class DegenerateSeedError(StringNetError):
    pass


class IncompletePatternError(StringNetError):
    pass


class DecodingError(StringNetError):
    """Readout bits inconsistent with the tracked encoding type.

    This signals a bookkeeping bug, never a physical outcome.
    """


class CapacityError(StringNetError):
    pass


class ParseError(StringNetError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class SemanticError(ParseError):
    pass

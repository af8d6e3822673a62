"""Exception types raised across the simulator."""


class IsmError(Exception):
    """Base class for all simulator errors."""


class NotPowerOfTwo(IsmError, ValueError):
    pass


class UnsupportedOrder(IsmError, ValueError):
    pass


class SchemeMismatch(IsmError, ValueError):
    pass


class WrongBitCount(IsmError, ValueError):
    pass


class ConstellationMismatch(IsmError, ValueError):
    pass


class IndexOutOfRange(IsmError, ValueError):
    pass


class NotAConstellationPoint(IsmError, ValueError):
    pass


class DimensionMismatch(IsmError, ValueError):
    pass


class TargetNotBracketed(IsmError, ValueError):
    pass


class ParseError(IsmError, ValueError):
    def __init__(self, line, message):
        self.line = line
        self.message = message
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class ValidationError(IsmError, ValueError):
    def __init__(self, field, constraint, line=None):
        self.field = field
        self.constraint = constraint
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{field}: {constraint}")

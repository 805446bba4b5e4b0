"""Exception hierarchy shared by all modules."""


class DDLPBError(Exception):
    """Base class for every error raised by this package."""


class UnsupportedGridSize(DDLPBError, ValueError):
    pass


class NonUnitDirection(DDLPBError, ValueError):
    pass


class LengthMismatch(DDLPBError, ValueError):
    pass


class NonPositiveArgument(DDLPBError, ValueError):
    pass


class ParseError(DDLPBError, ValueError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class EmptyStructure(DDLPBError, ValueError):
    pass


class SingularEvaluation(DDLPBError, ValueError):
    pass


class ShapeMismatch(DDLPBError, ValueError):
    pass


class NonPositiveKappa(DDLPBError, ValueError):
    pass


class ProblemTooLarge(DDLPBError, MemoryError):
    pass


class NoConvergence(DDLPBError, RuntimeError):
    """Raised when an iteration cap is hit; ``history`` keeps partial results."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class NoExposedSurface(DDLPBError, ValueError):
    pass


class ChargeOutsideCavity(DDLPBError, ValueError):
    pass


class SeriesNotConverged(DDLPBError, ArithmeticError):
    pass


class NegativeIonicStrength(DDLPBError, ValueError):
    pass

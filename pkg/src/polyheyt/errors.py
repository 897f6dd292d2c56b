"""Exception hierarchy shared by all polyheyt modules."""


class PolyheytError(Exception):
    """Base class for every error raised by this package."""


class SignatureError(PolyheytError):
    """Unknown atom, bad support, or an index outside the declared budget."""


class DimensionOverflow(PolyheytError):
    """No spare index is left for a fresh variable."""


class ScopeError(PolyheytError):
    """A formula uses generators or dimensions outside the permitted scope."""


class StructuralError(PolyheytError):
    """Operands live over different Kripke systems or incompatible frames."""


class ValidationError(PolyheytError):
    """A frame, valuation or family violates its invariants."""


class ParseError(PolyheytError):
    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)


class DilationRequired(PolyheytError):
    """Raised by a saturation step when the current level has no fresh index."""


class PreconditionError(PolyheytError):
    def __init__(self, message, status=None):
        self.status = status
        super().__init__(message)

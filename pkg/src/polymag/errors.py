"""Exception hierarchy shared by all polymag modules."""


class PolymagError(Exception):
    """Base class for all library errors."""


class SpecError(PolymagError, ValueError):
    """A process specification is malformed or violates a structural bound.

    ``line`` and ``column`` are 1-based positions into the source document
    when the error comes from the parser, otherwise ``None``.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column or 1}: {message}"
        super().__init__(message)


class DegreeOverflow(PolymagError, ArithmeticError):
    """A polynomial product (or generator image) exceeds its allowed degree."""


class NumericalError(PolymagError, ArithmeticError):
    """A numerical routine failed to reach its tolerance or produced non-finite output."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not converge within the refinement budget."""


class DiffusionNotPSD(NumericalError):
    """A diffusion matrix could not be factorized as sigma sigma^T."""


class MissingSampler(PolymagError, ValueError):
    """Monte Carlo was requested for a process with jumps but no kernel sampler."""

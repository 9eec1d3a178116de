"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class SamplingError(ValueError):
    """A test function could not be evaluated at some quadrature node."""


class DivergenceError(ArithmeticError):
    """An integral or supremum does not converge on the sampled data."""


class PreconditionError(ValueError):
    """A hypothesis required by a verifier is not satisfied."""


class ConvergenceError(ArithmeticError):
    """A mollification sequence fails to converge as required."""


class AlignmentError(ValueError):
    """Atoms do not line up with the dyadic cells of a filtration."""


class AdaptednessError(ValueError):
    """A stopping time is not adapted to the dyadic filtration."""


class NonFiniteError(DivergenceError, ValueError):
    """A sampled or derived quantity overflowed to infinity or became NaN."""

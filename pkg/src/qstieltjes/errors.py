"""Exception hierarchy shared by every module of the package."""


class QCalculusError(Exception):
    """Base class for all errors raised by qstieltjes."""


class InvalidParameter(QCalculusError, ValueError):
    pass


class PoleError(QCalculusError, ZeroDivisionError):
    """An argument hits a pole of ``e_q``."""


class ZeroArgument(QCalculusError, ValueError):
    pass


class InsufficientSupport(QCalculusError):
    """A lattice function lacks the values needed for an operation."""


class DivergentTail(QCalculusError):
    """A two-sided lattice sum has a tail that cannot be bounded."""


class DivergentMoment(DivergentTail):
    def __init__(self, message, k=None):
        super().__init__(message)
        self.k = k


class NegativeValue(QCalculusError, ValueError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NotNormalized(QCalculusError):
    def __init__(self, message, mass=None):
        super().__init__(message)
        self.mass = mass


class ZeroDensityValue(QCalculusError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class UnboundedPerturbation(QCalculusError):
    """The perturbation built from a density is not bounded on the lattice."""


class DegeneratePerturbation(QCalculusError):
    """The candidate perturbation vanishes identically (sup-norm 0)."""


class PrecisionInsufficient(QCalculusError):
    def __init__(self, message, certificate=None, precision_bits=None):
        super().__init__(message)
        self.certificate = certificate
        self.precision_bits = precision_bits


class EpsilonOutOfRange(QCalculusError, ValueError):
    pass


class OrderMismatch(QCalculusError, ValueError):
    pass

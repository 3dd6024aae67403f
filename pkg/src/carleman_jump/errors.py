"""Exception hierarchy shared by all modules."""


class CarlemanError(Exception):
    """Base class for toolkit errors."""


class InvalidInputError(CarlemanError, ValueError):
    pass


class DimensionError(InvalidInputError):
    pass


class InvalidParameterError(InvalidInputError):
    pass


class InvalidFrequencyError(InvalidInputError):
    pass


class UnsupportedOrderError(InvalidInputError):
    pass


class ConstraintError(InvalidInputError):
    """A geometric precondition (support radius, cutoff scale) is violated."""


class SupportError(ConstraintError):
    def __init__(self, message, radius=None, limit=None):
        super().__init__(message)
        self.radius = radius
        self.limit = limit


class InternalInconsistencyError(CarlemanError, ArithmeticError):
    """Two routes to the same quantity disagree, or a proven bound fails."""


class SingularSystemError(CarlemanError, ArithmeticError):
    pass


class TransmissionCertificationError(CarlemanError):
    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class PseudoconvexityError(CarlemanError):
    def __init__(self, message, xi=None, tau=None):
        super().__init__(message)
        self.xi = xi
        self.tau = tau


class OverflowBudgetError(CarlemanError):
    def __init__(self, message, tau_max):
        super().__init__(message)
        self.tau_max = tau_max

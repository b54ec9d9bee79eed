"""Exception hierarchy."""


class GdremError(Exception):
    """Base class for all package errors."""


class ShapeError(GdremError, ValueError):
    pass


class SymmetryError(GdremError, ValueError):
    pass


class NumericalFailure(GdremError, ArithmeticError):
    pass


class StabilityError(GdremError, ValueError):
    pass


class RankDeficiencyError(GdremError, ValueError):
    pass


class ModelMismatchError(GdremError, ValueError):
    """Uncertainty or reference model is not matched through B."""


class ConfigError(GdremError, ValueError):
    pass


class IntegrationError(NumericalFailure):
    def __init__(self, message, t=None, component=None):
        super().__init__(message)
        self.t = t
        self.component = component

"""Exception hierarchy shared by every module."""


class RWoGGError(Exception):
    """Base class for all errors raised by this project."""


class RangeError(RWoGGError, ValueError):
    """Round index, order or vertex label out of range."""


class CapacityError(RangeError):
    """Dense engine asked to go beyond its configured cap."""


class ConfigurationError(RWoGGError, ValueError):
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field

    def __str__(self):
        message = super().__str__()
        if self.field:
            return f"{self.field}: {message}"
        return message


class StructuralError(RWoGGError):
    """Reducible kernel, broken growth, zero stationary mass."""


class NumericalError(RWoGGError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class HypothesisError(RWoGGError):
    def __init__(self, message, inequality=None):
        super().__init__(message)
        self.inequality = inequality or message

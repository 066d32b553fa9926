"""Exception types shared by all modules."""


class CritHeatError(Exception):
    """Base class; carries optional diagnostics as keyword details."""

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def __str__(self):
        base = super().__str__()
        if not self.details:
            return base
        extra = ", ".join(f"{k}={v!r}" for k, v in self.details.items())
        return f"{base} ({extra})"


class DomainError(CritHeatError, ValueError):
    pass


class ConfigurationError(CritHeatError, ValueError):
    pass


class NumericError(CritHeatError, ArithmeticError):
    pass


class RangeError(CritHeatError, ValueError):
    pass


class BlowUpSuspected(NumericError):
    """sup|u| grew past the guard factor; finite-time blow-up suspected."""

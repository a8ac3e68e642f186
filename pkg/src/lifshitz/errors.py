"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of a function."""


class PreconditionError(ValueError):
    """A documented precondition of a bound or estimate does not hold."""


class ConfigurationError(ValueError):
    """Structural constants are mutually inconsistent."""


class NumericError(RuntimeError):
    """A numerical procedure failed to reach its target accuracy.

    The ``diagnostics`` mapping carries whatever the failing routine knew
    (residuals, iteration counts, quadrature error estimates).
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics

    def __str__(self):
        base = super().__str__()
        if not self.diagnostics:
            return base
        extra = ", ".join(f"{k}={v!r}" for k, v in self.diagnostics.items())
        return f"{base} ({extra})"

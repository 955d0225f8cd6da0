"""Exception hierarchy shared by all frisim modules."""


class FrisimError(Exception):
    """Base class for every error raised by the package."""


class DomainError(FrisimError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ConfigError(FrisimError, ValueError):
    """Invalid geometry or scenario configuration."""


class NumericError(FrisimError, ArithmeticError):
    """A series, quadrature or iteration failed to converge."""


class FeasibilityError(FrisimError):
    """No placement satisfies the minimum-spacing constraint."""


class DegenerateChannelError(NumericError):
    """Effective channel is identically zero."""

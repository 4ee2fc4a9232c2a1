"""Exception types raised by yamabe_lab."""


class YamabeLabError(Exception):
    """Base class for all library errors."""


class DomainError(YamabeLabError, ValueError):
    """An input lies outside the mathematical domain of an operation
    (nonpositive conformal factor, |a| >= 1, ...)."""


class PreconditionError(YamabeLabError, ValueError):
    """A documented precondition of an operation does not hold."""


class DivergenceError(YamabeLabError, RuntimeError):
    """The minimizer ran away to -inf; the Yamabe constant is probably -inf."""

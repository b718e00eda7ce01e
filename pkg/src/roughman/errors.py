"""Exception types raised across the package."""


class RoughmanError(Exception):
    """Base class for all package errors."""


class DimMismatch(RoughmanError, ValueError):
    pass


class RankDeficient(RoughmanError, ValueError):
    pass


class IndexOrder(RoughmanError, IndexError):
    pass


class NotSymmetric(RoughmanError, ValueError):
    pass


class LambdaMismatch(RoughmanError, ValueError):
    pass


class BadHurst(RoughmanError, ValueError):
    pass


class BaseMismatch(RoughmanError, ValueError):
    pass


class ShapeMismatch(RoughmanError, ValueError):
    pass


class OutOfDomain(RoughmanError, ValueError):
    pass


class ChartDomain(RoughmanError, ValueError):
    pass


class ChartError(RoughmanError, ValueError):
    """A chart violates one of its defining identities at a probe point."""


class JunctionMismatch(RoughmanError, ValueError):
    pass


class NonFinite(RoughmanError, ArithmeticError):
    """The RDE state left the admissible region.

    ``time`` is the first grid time at which the state was rejected.
    """

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class ConfigError(RoughmanError, ValueError):
    pass

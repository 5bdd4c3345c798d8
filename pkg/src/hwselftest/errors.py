"""Exception and warning types shared across the package."""


class HWSelfTestError(Exception):
    """Base class for every error raised by this package."""


class NotPrime(HWSelfTestError, ValueError):
    pass


class ZeroInverse(HWSelfTestError, ZeroDivisionError):
    pass


class UnsupportedDim(HWSelfTestError, ValueError):
    pass


class DimensionMismatch(HWSelfTestError, ValueError):
    pass


class SpecMismatch(HWSelfTestError, ValueError):
    """The phase data does not belong to the requested dimension."""


class InvalidNu(HWSelfTestError, ValueError):
    """Phase data that violates the non-degeneracy or qutrit constraints."""


class ZeroN(HWSelfTestError, ValueError):
    pass


class ConventionUnresolvable(HWSelfTestError, RuntimeError):
    pass


class WrongDim(HWSelfTestError, ValueError):
    pass


class InfeasibleMethod(HWSelfTestError, ValueError):
    pass


class NonUnitaryOps(HWSelfTestError, ValueError):
    pass


class InvalidStrategy(HWSelfTestError, ValueError):
    pass


class OutOfRegime(UserWarning):
    """epsilon lies outside the range where the qutrit robustness bound is proven."""

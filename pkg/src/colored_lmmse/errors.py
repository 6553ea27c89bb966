"""Exception hierarchy shared by every module of the package."""


class LmmseError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArg(LmmseError, ValueError):
    pass


class LengthMismatch(LmmseError, ValueError):
    pass


class UnstableAr(LmmseError, ValueError):
    """AR polynomial has a root on or outside the unit circle."""


class SingularMatrix(LmmseError, ArithmeticError):
    pass


class NonFiniteValue(LmmseError, ArithmeticError):
    pass


class NoInformation(LmmseError, ArithmeticError):
    """An extrinsic message would carry zero weight (infinite variance)."""


class IndexOutOfRange(LmmseError, IndexError):
    pass


class SingularSystem(LmmseError, ArithmeticError):
    pass


class UnstableFit(LmmseError, ValueError):
    """Yule-Walker solution is not a stable AR model."""


class ConfigError(LmmseError, ValueError):
    pass

"""Exception hierarchy shared across the toolkit."""


class SubcurvError(Exception):
    pass


class ShapeMismatch(SubcurvError, ValueError):
    pass


class UnknownModel(SubcurvError, KeyError):
    pass


class InvalidParameter(SubcurvError, ValueError):
    pass


class OrderOverflow(SubcurvError, ValueError):
    pass


class IndexOutOfRange(SubcurvError, IndexError):
    pass


class NonPositiveNu(SubcurvError, ValueError):
    pass


class NotYangMills(SubcurvError, ValueError):
    pass


class NotCarnot(SubcurvError, ValueError):
    pass


class NotSymmetric(SubcurvError, ValueError):
    pass


class NoConvergence(SubcurvError, RuntimeError):
    pass


class QuadratureFailure(SubcurvError, RuntimeError):
    pass


class NegativeInput(SubcurvError, ValueError):
    pass


class NonPositiveTime(SubcurvError, ValueError):
    pass


class CFLViolation(SubcurvError, ValueError):
    pass


class NonFiniteValue(SubcurvError, FloatingPointError):
    pass


class Unreachable(SubcurvError, RuntimeError):
    pass


class BallClipped(SubcurvError, ValueError):
    pass

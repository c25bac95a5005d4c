"""Exception hierarchy.

Every error raised by the library derives from :class:`RollageError`, which is
itself a ``ValueError`` so callers that only care about bad input can catch the
builtin.
"""


class RollageError(ValueError):
    pass


class NonFiniteCoefficient(RollageError):
    pass


class ZeroLeadingCoefficient(RollageError):
    pass


class InvalidModel(RollageError):
    pass


class SingularSystem(RollageError):
    pass


class InsufficientLags(RollageError):
    pass


class OrderMismatch(RollageError):
    pass


class RejectionBudgetExhausted(RollageError):
    pass


class RankDeficientDesign(RollageError):
    pass


class SeriesTooShort(RollageError):
    pass


class LagTooLarge(RollageError):
    pass


class NonPositiveDefiniteAcf(RollageError):
    pass


class PbarTooLarge(RollageError):
    pass


class PbarTooSmall(RollageError):
    pass


class CriterionFailed(RollageError):
    pass


class ZeroTruthNorm(RollageError):
    pass


class ConfigError(RollageError):
    pass

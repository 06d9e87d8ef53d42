"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line interface:
2 for input validation, 3 for a degenerate statistic and 4 when a resource
cap (exact enumeration) is exceeded.
"""


class ReyesError(Exception):
    exit_code = 1


class InputError(ReyesError, ValueError):
    exit_code = 2


class NonPositivePart(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class AllZeroRow(InputError):
    pass


class NegativeValue(InputError):
    pass


class DuplicateId(InputError):
    pass


class RaggedRow(InputError):
    pass


class UnknownLabel(InputError):
    pass


class SelfEdge(InputError):
    pass


class IslandUnit(InputError):
    pass


class NotStandardized(InputError):
    pass


class TooFewUnits(InputError):
    pass


class EmptyDistribution(InputError):
    pass


class NotPositiveDefinite(InputError):
    pass


class SingularSystem(InputError):
    pass


class DegenerateSample(ReyesError, ArithmeticError):
    """All centered compositions are neutral, so the statistic is 0/0."""

    exit_code = 3


class ConstantVector(DegenerateSample):
    """A real-valued variable has zero variance."""

    def __init__(self, message, component=None):
        super().__init__(message)
        self.component = component


class TooManyUnits(ReyesError):
    exit_code = 4

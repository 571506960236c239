"""Exception hierarchy.

Every domain failure raised by the library derives from :class:`FuzzyCausalError`,
which the CLI maps to exit code 3.
"""


class FuzzyCausalError(ValueError):
    pass


class OutOfUniverse(FuzzyCausalError):
    pass


class UniverseMismatch(FuzzyCausalError):
    pass


class BadCount(FuzzyCausalError):
    pass


class DegenerateAttribute(FuzzyCausalError):
    pass


class InvalidAttribute(FuzzyCausalError):
    pass


class SupportViolation(FuzzyCausalError):
    pass


class NoOverlap(FuzzyCausalError):
    pass


class EmptySide(FuzzyCausalError):
    pass


class InvalidDistribution(FuzzyCausalError):
    pass


class ExpressionError(FuzzyCausalError):
    pass


class RankDeficient(FuzzyCausalError):
    pass


class DegreeUnsupported(FuzzyCausalError):
    pass


class ColumnMismatch(FuzzyCausalError):
    pass


class ColumnMissing(FuzzyCausalError):
    pass


class GridMissingPoints(FuzzyCausalError):
    pass


class ZeroDenominator(FuzzyCausalError):
    pass


class BoundViolated(FuzzyCausalError):
    pass


class UnknownVariable(FuzzyCausalError):
    pass


class InvalidRuleBase(FuzzyCausalError):
    pass


class NoRuleFired(FuzzyCausalError):
    pass


class TooManyConfigurations(FuzzyCausalError):
    pass


class NoRulesFound(FuzzyCausalError):
    pass

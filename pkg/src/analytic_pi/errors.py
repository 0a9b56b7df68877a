"""Exception hierarchy shared by every module of the package."""


class AnalyticPiError(Exception):
    """Base class for all errors raised by analytic_pi."""


# interval
class DivisorContainsZero(AnalyticPiError, ZeroDivisionError):
    pass


class DomainError(AnalyticPiError, ValueError):
    pass


class PoleProximity(DomainError):
    pass


class NoInteger(AnalyticPiError):
    pass


class Ambiguous(AnalyticPiError):
    pass


# mellin
class RadiusTooLarge(AnalyticPiError, ValueError):
    pass


class BudgetExceeded(AnalyticPiError):
    pass


# sieve
class InsufficientSievingPrimes(AnalyticPiError, ValueError):
    pass


class SegmentTooWide(AnalyticPiError):
    pass


class TilingGap(AnalyticPiError, ValueError):
    pass


# zeros
class FormatError(AnalyticPiError, ValueError):
    pass


class MonotonicityViolation(FormatError):
    pass


class AccuracyViolation(FormatError):
    pass


class InconsistentCount(AnalyticPiError):
    pass


class CoverageGap(AnalyticPiError):
    pass


# zetafft
class ParamViolation(AnalyticPiError, ValueError):
    pass


class SizeMismatch(AnalyticPiError, ValueError):
    pass


class RealityCheckFailed(AnalyticPiError):
    pass


# pipeline
class Infeasible(AnalyticPiError):
    pass

"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: usage-type errors exit 1, numeric
failures exit 2, domain errors (poles, non-escaping input, singular
levels) exit 3.
"""


class SchwzError(Exception):
    exit_code = 1


class ParseError(SchwzError, ValueError):
    def __init__(self, message, token=None):
        super().__init__(message)
        self.token = token


class CapacityError(SchwzError):
    pass


class NumericFailure(SchwzError, ArithmeticError):
    exit_code = 2

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class DomainError(SchwzError, ValueError):
    exit_code = 3


class PoleError(DomainError):
    """Raised when an evaluation lands on a critical point (a pole of S_f)."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class RegionTooSmallError(DomainError):
    pass


class SingularityError(DomainError):
    def __init__(self, message, vertex=None):
        super().__init__(message)
        self.vertex = vertex

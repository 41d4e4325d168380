"""Exception hierarchy shared by all emtrace modules."""

from __future__ import annotations


class EmtraceError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(EmtraceError, ValueError):
    """A coordinate vector has the wrong length for its group."""


class InfiniteGroupError(EmtraceError, ValueError):
    """An operation that needs a finite group was handed an infinite one."""


class DomainError(EmtraceError, ValueError):
    """An argument lies outside the domain of a function."""


class MismatchError(EmtraceError, ValueError):
    """Two objects that must share a group (or coefficient group) do not."""


class InvalidCoefficientError(EmtraceError, ValueError):
    """Coefficients violate their torsion constraints.

    ``violations`` holds one human-readable entry per violated constraint.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations) or "invalid coefficients")


class NotQuadraticError(EmtraceError, ValueError):
    """A value table is not a quadratic form."""


class NotRepresentableError(EmtraceError):
    """A quadratic form is not the trace of any bilinear form.

    ``obstruction`` is the nonzero two-torsion character that certifies it.
    """

    def __init__(self, obstruction):
        self.obstruction = obstruction
        super().__init__(f"not the trace of a bilinear form: theta = {list(obstruction.values)}")


class NotSymmetricError(EmtraceError):
    """A quadratic form is not a homomorphism into M[2]."""

    def __init__(self, offenders):
        self.offenders = list(offenders)
        super().__init__("not symmetric: " + "; ".join(self.offenders))


class BudgetExceeded(EmtraceError):
    """A search would exceed (or did exceed) its configured budget."""

    def __init__(self, needed, budget, what="candidates"):
        self.needed = needed
        self.budget = budget
        self.what = what
        super().__init__(f"{what} {needed} exceeds budget {budget}")


class ParseError(EmtraceError, ValueError):
    """A document or command-line value could not be parsed."""

"""Exception hierarchy.

Input/validation problems derive from ValueError so they behave like ordinary
bad-argument errors; numerical failures get their own branch so callers (and
the CLI) can distinguish "your data is wrong" from "the solver broke".
"""


class VbportError(Exception):
    """Base class for all package-specific errors."""


class InvalidReturn(VbportError, ValueError):
    """Return vector with a negative entry, or no positive entry at all."""


class BoundaryPoint(VbportError, ValueError):
    """A portfolio with a nonpositive entry was passed where an interior
    point is required."""


class NonpositiveWealth(VbportError, ValueError):
    """x'w <= 0: the log loss is undefined at this pair."""


class UnsupportedDimension(VbportError, ValueError):
    """Strategy cannot run at the requested number of assets."""


class UnknownPreset(VbportError, ValueError):
    """Unrecognized hyperparameter preset name."""


class ParseError(VbportError, ValueError):
    """Malformed CSV input; carries row/column location in the message."""


class InconsistentWidth(ParseError):
    """Ragged CSV: a row has a different number of columns than the first."""


class NumericalError(VbportError):
    """Base class for failures of the numerical machinery."""


class SingularHessian(NumericalError):
    """Cholesky factorization failed; cannot happen for lambda >= 1 at an
    interior point, so it is treated as fatal."""


class DegenerateLeverage(NumericalError):
    """A leverage score reached 1 or became non-finite."""


class LeftDomain(NumericalError):
    """An iterate left the open solid simplex and step halving could not
    recover it."""


class MaxIterations(NumericalError):
    """Solver failed to reach the requested decrement tolerance."""


class CertificateUnavailable(NumericalError):
    """Suboptimality certificate requested outside its validity region
    (sc_constant * decrement >= 1)."""

"""Simplex geometry and the affine change of coordinates.

The probability simplex in R^d has empty interior, which rules out standard
interior-point machinery.  We therefore work in the full-dimensional "solid"
simplex {v in R^{d-1}: v > 0, sum(v) < 1} via the affine bijection

    w = A v + e_d,    A = [[I_{d-1}], [-1 ... -1]],

whose left pseudoinverse A+ = (A'A)^{-1} A' inverts it on the hyperplane
{sum(w) = 1}.  A is never materialized: every product with A, A' or A+ is
O(d) index arithmetic.
"""

from functools import lru_cache

import numpy as np

from .exceptions import BoundaryPoint

# absolute tolerance on the coordinate sum for simplex membership
SIMPLEX_SUM_TOL = 1e-12


def uniform_portfolio(d):
    """The uniform allocation (1/d, ..., 1/d)."""
    return np.full(d, 1.0 / d)


def is_portfolio(w, tol=SIMPLEX_SUM_TOL):
    w = np.asarray(w, dtype=float)
    return bool(np.all(w >= 0.0) and abs(w.sum() - 1.0) <= tol)


def is_interior_portfolio(w, tol=SIMPLEX_SUM_TOL):
    w = np.asarray(w, dtype=float)
    return bool(np.all(w > 0.0) and abs(w.sum() - 1.0) <= tol)


def check_interior_portfolio(w, tol=SIMPLEX_SUM_TOL):
    """Raise BoundaryPoint unless w is strictly inside the simplex."""
    if not is_interior_portfolio(w, tol):
        raise BoundaryPoint(f"not a strictly interior portfolio: {np.asarray(w)}")


def is_interior_solid(v):
    """Membership in the open solid simplex {v > 0, sum(v) < 1}."""
    v = np.asarray(v, dtype=float)
    # .min() keeps this off the slow reduction-dispatch path; NaN fails both
    return bool(v.min() > 0.0) and bool(v.sum() < 1.0)


def renormalize(w):
    """Clamp tiny negatives and rescale to unit sum.

    Used only at module boundaries (market ingestion); solver iterates are
    never renormalized.
    """
    w = np.asarray(w, dtype=float).copy()
    w[w < 0.0] = 0.0
    s = w.sum()
    if s <= 0.0:
        raise BoundaryPoint("cannot renormalize a nonpositive vector")
    return w / s


def to_simplex(v):
    """Map a solid-simplex point v to the portfolio w = A v + e_d."""
    v = np.asarray(v, dtype=float)
    w = np.empty(v.size + 1)
    w[:-1] = v
    w[-1] = 1.0 - v.sum()
    return w


def to_solid(w):
    """Map a portfolio to solid-simplex coordinates, v = A+ (w - e_d).

    For w with unit coordinate sum this is just the first d-1 coordinates;
    the correction term makes the formula agree with the pseudoinverse for
    arbitrary inputs.
    """
    w = np.asarray(w, dtype=float)
    d = w.size
    return w[:-1] + (1.0 - w.sum()) / d


def reparam_gradient(g):
    """A' g, i.e. the gradient of f(Av + e_d) given the gradient of f."""
    g = np.asarray(g, dtype=float)
    return g[:-1] - g[-1]


def reparam_rows(X):
    """Apply A' to every row of X: returns X A with rows (A' x_t)'."""
    X = np.asarray(X, dtype=float)
    return X[:, :-1] - X[:, -1:]


def reparam_hessian(H):
    """A' H A for a d x d matrix H, computed by index arithmetic."""
    H = np.asarray(H, dtype=float)
    return H[:-1, :-1] - H[:-1, -1:] - H[-1:, :-1] + H[-1, -1]


@lru_cache(maxsize=None)
def _barrier_rows_cached(d):
    B = np.vstack([np.eye(d - 1), -np.ones(d - 1)])
    B.setflags(write=False)
    return B


def barrier_rows(d):
    """Rows (A' e_i)' for i = 1..d, used by the log-barrier terms.

    Equals A itself: rows e_1 .. e_{d-1} followed by the all -1 row.
    Cached and read-only.
    """
    return _barrier_rows_cached(d)

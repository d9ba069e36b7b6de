"""Self-concordant minimization of the hybrid potential.

Two entry points:

* :func:`minimize_exact` -- damped Newton to a target Newton decrement,
  using the exact Hessian of the potential when the instance is small
  enough and the computable model H + 3*mu*Q otherwise.

* :func:`quasi_newton_round` -- the literal per-round update of the fast
  algorithm: exactly `steps` undamped iterations v <- v - M^{-1} g with
  model M = H + 3*mu*Q, which sandwiches the true Hessian as
  (1/3) M <= hess(P) <= M.

All convergence accounting is in terms of the Newton decrement, the
affine-invariant quantity the self-concordance certificates speak about.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from . import geometry
from .barrier import (
    build_round_state,
    cumulative_potential_L,
    exact_volumetric_hessian_fast,
    hessian_model_Q,
    potential_gradient_from_state,
    volumetric_value,
)
from .exceptions import (
    BoundaryPoint,
    CertificateUnavailable,
    LeftDomain,
    MaxIterations,
    SingularHessian,
)

# self-concordance parameter of the hybrid potential (log-barrier alone is 1)
HYBRID_SC_CONSTANT = 21.0

# exact-Hessian budget for minimize_exact: (t+d) * (d-1)^3 arithmetic
EXACT_HESSIAN_BUDGET = 5e6

MAX_STEP_HALVINGS = 60


def omega(r):
    """omega(r) = r - log(1+r), r >= 0; lower conjugate of the pair."""
    if r < 0:
        raise ValueError("omega domain is r >= 0")
    return r - math.log1p(r)


def psi(r):
    """psi(r) = -r - log(1-r), 0 <= r < 1; diverges as r -> 1."""
    if not 0 <= r < 1:
        raise ValueError("psi domain is 0 <= r < 1")
    return -r - math.log1p(-r)


def sc_constant(lam, mu):
    """Self-concordance parameter of the reparametrized potential.

    1 for the log-barrier objective (mu = 0), 21 for the hybrid one; the
    lam^{-1/2} factor extends the constants below lam = 1, where the
    certified values no longer apply, so the solver stays conservative.
    """
    base = 1.0 if mu == 0.0 else HYBRID_SC_CONSTANT
    return base * max(1.0, lam ** -0.5)


def newton_decrement(grad, hess_factor):
    """|grad| in the inverse-Hessian metric via one triangular solve."""
    try:
        z = scipy.linalg.solve_triangular(
            hess_factor, np.asarray(grad, dtype=float), lower=True, check_finite=False
        )
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise SingularHessian(str(exc)) from exc
    return float(np.sqrt(z @ z))


def suboptimality_certificate(decrement, sc):
    """Upper bound psi(sc * decrement) / sc^2 on f - min f, valid while
    sc * decrement < 1."""
    r = sc * decrement
    if r >= 1.0:
        raise CertificateUnavailable(f"sc * decrement = {r} >= 1")
    return psi(r) / sc**2


@dataclass
class DecrementCertificate:
    """Newton decrement with its self-concordance constant and the implied
    suboptimality bound (inf outside the validity region)."""

    decrement: float
    sc_constant: float
    suboptimality_upper: float

    @staticmethod
    def at(decrement, sc):
        try:
            upper = suboptimality_certificate(decrement, sc)
        except CertificateUnavailable:
            upper = math.inf
        return DecrementCertificate(decrement, sc, upper)


@dataclass
class SolveOutcome:
    v_star: np.ndarray
    iterations: int
    final_decrement: float
    certificate: DecrementCertificate


def _potential_value(h, mu, state):
    value = cumulative_potential_L(h, state.w)
    if mu != 0.0:
        value += mu * volumetric_value(state)
    return value


def _cholesky(mat):
    try:
        return scipy.linalg.cholesky(mat, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise SingularHessian(str(exc)) from exc


def minimize_exact(h, params, warm_start, hessian="auto", max_iter=500):
    """Minimize P = L + mu*V over the solid simplex to a Newton decrement
    below params.decrement_tol.

    hessian selects the curvature oracle: "exact" uses H + mu*hess(V) with
    the exact volumetric Hessian, "model" the surrogate H + 3*mu*Q with a
    conservative sqrt(3) decrement correction, "auto" picks by instance
    size.  Steps are damped by 1/(1 + sc*decrement) until sc*decrement
    drops below 1/4, then full.  The minimizer exists and is unique by
    strict convexity.
    """
    if params.lam <= 0:
        raise ValueError("minimize_exact requires a positive barrier weight")
    v = np.asarray(warm_start, dtype=float).copy()
    if not geometry.is_interior_solid(v):
        raise BoundaryPoint(f"warm start {v} is not interior")
    mu = params.mu
    sc = sc_constant(params.lam, mu)
    if hessian == "auto":
        exact = (h.t + h.d) * max(1, h.d - 1) ** 3 <= EXACT_HESSIAN_BUDGET
    elif hessian in ("exact", "model"):
        exact = hessian == "exact"
    else:
        raise ValueError(f"unknown hessian mode {hessian!r}")
    # with mu = 0 the model and the exact Hessian coincide (Q drops out)
    slack = 1.0 if (exact or mu == 0.0) else math.sqrt(3.0)

    value = None
    for iteration in range(max_iter):
        state = build_round_state(h, geometry.to_simplex(v))
        g = potential_gradient_from_state(state, mu)
        if mu == 0.0:
            curv = state.hess
        elif exact:
            curv = state.hess + mu * exact_volumetric_hessian_fast(state)
        else:
            curv = state.hess + 3.0 * mu * hessian_model_Q(state)
        factor = _cholesky(curv)
        decrement = slack * newton_decrement(g, factor)
        if decrement <= params.decrement_tol:
            return SolveOutcome(
                v_star=v,
                iterations=iteration,
                final_decrement=decrement,
                certificate=DecrementCertificate.at(decrement, sc),
            )
        direction = -scipy.linalg.cho_solve(
            (factor, True), g, check_finite=False
        )
        step = 1.0 if sc * decrement <= 0.25 else 1.0 / (1.0 + sc * decrement)
        if not exact and value is None:
            value = _potential_value(h, mu, state)
        for halving in range(MAX_STEP_HALVINGS + 1):
            candidate = v + step * direction
            if geometry.is_interior_solid(candidate):
                if exact:
                    break
                # model steps lack a decrease guarantee: backtrack on value
                cand_state = build_round_state(h, geometry.to_simplex(candidate))
                cand_value = _potential_value(h, mu, cand_state)
                if cand_value <= value + 1e-12 * (1.0 + abs(value)):
                    value = cand_value
                    break
            step *= 0.5
        else:
            raise LeftDomain(f"step halving exhausted at iteration {iteration}")
        v = candidate
    raise MaxIterations(f"no convergence to {params.decrement_tol} in {max_iter} iterations")


def quasi_newton_round(h, params, w_prev, early_exit=False, flags=None, trace=None):
    """One round of the fast algorithm: exactly params.steps undamped steps
    v <- v - M^{-1} g with M = H + 3*mu*Q, started from the previous
    portfolio; returns the resulting portfolio.

    The theory guarantees iterates stay interior in the certified parameter
    regime; if a step exits numerically we fall back to a damped step for
    that iteration and append a note to `flags`.  `trace`, when given,
    collects a copy of v after every step.  `early_exit` (off by default)
    stops once the conservative decrement falls below decrement_tol.
    """
    w = np.asarray(w_prev, dtype=float)
    geometry.check_interior_portfolio(w)
    v = geometry.to_solid(w)
    mu = params.mu
    sc = sc_constant(params.lam, mu)
    for s in range(params.steps):
        state = build_round_state(h, geometry.to_simplex(v))
        G, lamv, pi = state.grads, state.lam_weights, state.leverage
        g = G.T @ (lamv + mu * pi)
        # model M = H + 3*mu*Q assembled in one weighted Gram product
        model = (G * (lamv + 3.0 * mu * pi)[:, None]).T @ G
        if early_exit:
            conservative = math.sqrt(3.0) * newton_decrement(g, _cholesky(model))
            if conservative <= params.decrement_tol:
                break
        _, x, info = lapack.dposv(model, g)
        if info != 0:
            raise SingularHessian(f"model solve failed (info={info})")
        direction = -x
        candidate = v + direction
        if not geometry.is_interior_solid(candidate):
            conservative = math.sqrt(3.0) * newton_decrement(g, _cholesky(model))
            step = 1.0 / (1.0 + sc * conservative)
            for _ in range(MAX_STEP_HALVINGS):
                candidate = v + step * direction
                if geometry.is_interior_solid(candidate):
                    break
                step *= 0.5
            else:
                raise LeftDomain(f"quasi-Newton fallback failed at t={h.t + 1}, s={s}")
            if flags is not None:
                flags.append(f"qn_domain_fallback:t={h.t + 1},s={s}")
        v = candidate
        if trace is not None:
            trace.append(v.copy())
    return geometry.to_simplex(v)

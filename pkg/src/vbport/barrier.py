"""Potentials and leverage-score calculus.

Everything here is expressed in the solid-simplex coordinates of
:mod:`.geometry`.  For a history of return vectors x_1..x_t and barrier
weight lambda, the regularized cumulative loss is

    L_t(w) = sum_tau -log(x_tau' w) + lambda * sum_i -log(w_i),

which we treat as a single sum over the extended index set: market indices
tau = 1..t with weight 1 and barrier indices tau = -1..-d (x_{-i} = e_i)
with weight lambda.  Internally rows 0..t-1 of every per-index array hold
the market terms and rows t..t+d-1 the barrier terms.

With G the matrix of reparametrized loss gradients and lamv the weights,
the Hessian of L_t in v-coordinates is H = G' diag(lamv) G, the volumetric
barrier is V = 0.5 logdet H, and the leverage scores pi_tau (diagonal of
the Gram projection matrix) drive the gradient of V and its computable
Hessian model Q.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from . import geometry
from .exceptions import (
    BoundaryPoint,
    DegenerateLeverage,
    InvalidReturn,
    NonpositiveWealth,
    SingularHessian,
)

# instance-size cap for the test-only exact volumetric Hessian (pairwise form)
EXACT_HESSIAN_CAP = 200


@dataclass
class HyperParams:
    """Hybrid-barrier weights and solver controls.

    lam is the log-barrier weight, mu the volumetric weight, steps the number
    of quasi-Newton iterations per round, decrement_tol the stopping
    tolerance for exact minimization.
    """

    lam: float = 16.0
    mu: float = 7.0
    steps: int = 1
    decrement_tol: float = 1e-10

    @staticmethod
    def exact_preset():
        """Preset for the exact algorithm: lam=16, mu=7."""
        return HyperParams(lam=16.0, mu=7.0)

    @staticmethod
    def quasi_newton_preset(T, d):
        """Preset for the quasi-Newton algorithm: lam=560, mu=2 and
        steps = 18*ceil(log(T+d+164)) + 7."""
        steps = 18 * math.ceil(math.log(T + d + 164)) + 7
        return HyperParams(lam=560.0, mu=2.0, steps=steps)

    def satisfies_exact_regret_condition(self):
        """Parameter condition under which the per-round invariant
        Miss + Gain <= 0 is guaranteed for the exact algorithm:
        (1/lam)(1 + 2 mu/lam)^2 <= min{1/4, 5 mu / (8 (1+lam))} and
        lam >= 2e."""
        lhs = (1.0 + 2.0 * self.mu / self.lam) ** 2 / self.lam
        rhs = min(0.25, 5.0 * self.mu / (8.0 * (1.0 + self.lam)))
        return lhs <= rhs and self.lam >= 2.0 * math.e


def validate_return(x, d=None):
    """Check a single return vector: nonnegative, finite, not all zero."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or (d is not None and x.size != d):
        raise InvalidReturn(f"return vector has wrong shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidReturn("return vector has non-finite entries")
    if np.any(x < 0.0):
        raise InvalidReturn("return vector has negative entries")
    if not np.any(x > 0.0):
        raise InvalidReturn("return vector is all zero")
    return x


class LossHistory:
    """Append-only store of observed returns plus the barrier weight.

    Keeps preallocated buffers for the raw returns and their reparametrized
    directions A'x so that per-round state builds are pure array arithmetic.
    Appends must be externally synchronized with concurrent builds; prefix
    views share buffers and must not be appended to.
    """

    def __init__(self, d, lam, returns=None):
        if d < 2:
            raise InvalidReturn("need at least two assets")
        if lam < 0:
            raise ValueError("barrier weight must be nonnegative")
        self.d = int(d)
        self.lam = float(lam)
        self._t = 0
        cap = 64
        self._X = np.empty((cap, d))
        self._AX = np.empty((cap, d - 1))
        self._lamv = np.empty(cap + d)
        self._lamv[:d] = self.lam
        if returns is not None:
            for x in returns:
                self.append(x)

    @property
    def t(self):
        return self._t

    def __len__(self):
        return self._t

    def append(self, x):
        x = validate_return(x, self.d)
        if self._t == self._X.shape[0]:
            self._X = np.concatenate([self._X, np.empty_like(self._X)])
            self._AX = np.concatenate([self._AX, np.empty_like(self._AX)])
            grown = np.empty(self._X.shape[0] + self.d)
            grown[: self._t] = self._lamv[: self._t]
            self._lamv = grown
        self._X[self._t] = x
        self._AX[self._t] = x[:-1] - x[-1]
        self._t += 1
        self._lamv[self._t - 1] = 1.0
        self._lamv[self._t : self._t + self.d] = self.lam

    @property
    def returns(self):
        """Read-only view of the observed return matrix, one row per round."""
        return self._X[: self._t]

    def prefix(self, t):
        """A read-only view of the first t rounds (shares the return buffers)."""
        if not 0 <= t <= self._t:
            raise IndexError(f"prefix length {t} out of range [0, {self._t}]")
        h = LossHistory.__new__(LossHistory)
        h.d, h.lam, h._t, h._X, h._AX = self.d, self.lam, t, self._X, self._AX
        h._lamv = np.empty(t + self.d)
        h._lamv[:t] = 1.0
        h._lamv[t:] = self.lam
        return h

    def row_index(self, tau):
        """Map a signed extended index (1..t market, -1..-d barrier) to the
        internal row position."""
        if 1 <= tau <= self._t:
            return tau - 1
        if -self.d <= tau <= -1:
            return self._t - tau - 1
        raise IndexError(f"index {tau} outside [1..{self._t}] u [-1..-{self.d}]")

    def lam_weights(self):
        """Weights lambda_tau over the extended index set (read-only view)."""
        return self._lamv[: self._t + self.d]


def loss(x, w):
    """Instantaneous log loss -log(x'w)."""
    wealth = float(np.dot(np.asarray(x, dtype=float), np.asarray(w, dtype=float)))
    if wealth <= 0.0:
        raise NonpositiveWealth(f"x'w = {wealth} <= 0")
    return -math.log(wealth)


def cumulative_potential_L(h, w):
    """L_t(w): observed losses plus the weighted log barrier."""
    w = np.asarray(w, dtype=float)
    if np.any(w <= 0.0):
        raise BoundaryPoint("cumulative potential requires w > 0")
    total = -float(np.log(w).sum()) * h.lam
    if h.t:
        wealth = h.returns @ w
        if np.any(wealth <= 0.0):
            raise NonpositiveWealth("some round has x'w <= 0")
        total -= float(np.log(wealth).sum())
    return total


@dataclass
class RoundState:
    """Per-round quantities at a fixed evaluation point.

    grads holds the reparametrized gradients A' grad(l_tau)(w), one row per
    extended index; hess is their lambda-weighted Gram matrix (the Hessian
    of L in v-coordinates); hess_factor its lower Cholesky factor; whitened
    the rows premultiplied by the inverse factor, so inner products under
    the inverse Hessian metric are plain dot products; leverage the scores
    lambda_tau * |grad_tau|^2_{H^-1}.  Immutable after build.
    """

    h: LossHistory
    w: np.ndarray
    grads: np.ndarray
    lam_weights: np.ndarray
    hess: np.ndarray
    hess_factor: np.ndarray
    whitened: np.ndarray
    leverage: np.ndarray

    @property
    def t(self):
        return self.h.t

    @property
    def d(self):
        return self.h.d


def build_round_state(h, w):
    """Assemble gradients, Hessian, Cholesky factor and leverage scores
    at an interior portfolio w.

    Cost O(d^2 (t+d)).  Leverage scores come from one vectorized triangular
    solve against the Cholesky factor; the inverse Hessian is never formed.
    """
    w = np.asarray(w, dtype=float)
    d = h.d
    if w.size != d:
        raise BoundaryPoint(f"portfolio has {w.size} entries, expected {d}")
    if not w.min() > 0.0:
        raise BoundaryPoint("round state requires a strictly interior portfolio")
    t = h.t
    G = np.empty((t + d, d - 1))
    if t:
        wealth = h._X[:t] @ w
        if not wealth.min() > 0.0:
            raise NonpositiveWealth("some round has x'w <= 0")
        np.divide(h._AX[:t], -wealth[:, None], out=G[:t])
    np.divide(geometry.barrier_rows(d), -w[:, None], out=G[t:])
    lamv = h.lam_weights()
    # split the weighted Gram product: market weights are all one
    Gm, Gb = G[:t], G[t:]
    H = Gm.T @ Gm + h.lam * (Gb.T @ Gb) if t else h.lam * (Gb.T @ Gb)
    try:
        L = scipy.linalg.cholesky(H, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise SingularHessian(f"Cholesky failed at t={t}: {exc}") from exc
    # whiten all gradients with one triangular solve against the factor
    CT, info = lapack.dtrtrs(L, G.T, lower=1)
    if info != 0:
        raise SingularHessian(f"triangular solve failed at t={t} (info={info})")
    C = CT.T
    leverage = lamv * np.einsum("ij,ij->i", C, C)
    return RoundState(
        h=h,
        w=w,
        grads=G,
        lam_weights=lamv,
        hess=H,
        hess_factor=L,
        whitened=C,
        leverage=leverage,
    )


def gram_row(s, tau):
    """Row tau of the Gram matrix: pi_{tau,nu} over all extended indices nu."""
    r = s.h.row_index(tau)
    lamv = s.lam_weights
    return np.sqrt(lamv[r] * lamv) * (s.whitened @ s.whitened[r])


def volumetric_value(s):
    """V_t(w) = 0.5 logdet H, read off the Cholesky diagonal."""
    return float(np.log(np.diag(s.hess_factor)).sum())


def volumetric_gradient(s):
    """Reparametrized gradient of the volumetric barrier,
    A' grad V = sum_tau pi_tau * grad_tau."""
    return s.grads.T @ s.leverage


def hessian_model_Q(s):
    """The computable Hessian model A' Q A = sum_tau pi_tau grad_tau grad_tau'.

    Always positive semidefinite and sandwiches the exact Hessian of V:
    Q <= hess(V) <= 3 Q.  Cost O(d^2 (t+d)).
    """
    return (s.grads * s.leverage[:, None]).T @ s.grads


def _gram_squared(s):
    """Elementwise square of the full Gram matrix (test-support, O((t+d)^2 d))."""
    lamv = s.lam_weights
    P = np.sqrt(lamv)[:, None] * (s.whitened @ s.whitened.T) * np.sqrt(lamv)[None, :]
    return P * P


def exact_volumetric_hessian(s):
    """Exact Hessian of V in v-coordinates: 3 A'QA - 2 sum pi_{tau,nu}^2
    grad_tau grad_nu'.

    Test-support only; quadratic in the instance size, so capped at
    t + d <= EXACT_HESSIAN_CAP.
    """
    n = s.t + s.d
    if n > EXACT_HESSIAN_CAP:
        raise ValueError(f"instance too large for the exact Hessian: {n} > {EXACT_HESSIAN_CAP}")
    P2 = _gram_squared(s)
    return 3.0 * hessian_model_Q(s) - 2.0 * (s.grads.T @ P2 @ s.grads)


def exact_volumetric_hessian_fast(s):
    """Exact Hessian of V via the row-wise Khatri-Rao factorization of the
    pairwise term, O((t+d) d^3); agrees with exact_volumetric_hessian."""
    C, G, lamv = s.whitened, s.grads, s.lam_weights
    B = np.einsum("t,ti,tj,tk->ijk", lamv, C, C, G, optimize=True)
    S = np.tensordot(B, B, axes=([0, 1], [0, 1]))
    return 3.0 * hessian_model_Q(s) - 2.0 * S


def leverage_gradient(s, tau):
    """Reparametrized gradient of the leverage score pi_tau:
    A' grad pi_tau = 2 pi_tau grad_tau - 2 sum_nu pi_{tau,nu}^2 grad_nu."""
    r = s.h.row_index(tau)
    row = gram_row(s, tau)
    return 2.0 * (s.leverage[r] * s.grads[r] - s.grads.T @ (row * row))


def potential_gradient_from_state(s, mu):
    """Reparametrized gradient of P = L + mu V:
    sum_tau (lambda_tau + mu pi_tau) grad_tau."""
    return s.grads.T @ (s.lam_weights + mu * s.leverage)


def potential_P(h, params, w):
    """P_t(w) = L_t(w) + mu V_t(w)."""
    value = cumulative_potential_L(h, w)
    if params.mu != 0.0:
        value += params.mu * volumetric_value(build_round_state(h, w))
    return value


def potential_P_gradient(h, params, w):
    """Reparametrized gradient of P_t at w."""
    return potential_gradient_from_state(build_round_state(h, w), params.mu)


def new_round_leverage(s, x):
    """Leverage of a new return x under the rank-one updated Hessian.

    With u = |grad_new|^2_{H^-1} at the current state, the updated score is
    u / (1 + u) < 1 (Sherman-Morrison).
    """
    x = validate_return(x, s.d)
    wealth = float(x @ s.w)
    if wealth <= 0.0:
        raise NonpositiveWealth("new return has x'w <= 0")
    g = (x[:-1] - x[-1]) / -wealth
    z = scipy.linalg.solve_triangular(
        s.hess_factor, g, lower=True, check_finite=False
    )
    u = float(z @ z)
    if not math.isfinite(u):
        raise DegenerateLeverage("leverage of the new return is not finite")
    return u / (1.0 + u)


def gain_term(s, x, mu):
    """Potential drop from the volumetric term when x is appended:
    mu (V_{t-1}(w) - V_t(w)) = (mu/2) log(1 - pi_hat) <= -(mu/2) pi_hat."""
    pi_hat = new_round_leverage(s, x)
    if pi_hat >= 1.0:
        raise DegenerateLeverage(f"new-round leverage {pi_hat} >= 1")
    return 0.5 * mu * math.log1p(-pi_hat)

"""Online portfolio selection strategies behind one small interface.

    state = init(config, d)
    w_t   = next_portfolio(state)   # play
    observe(state, x_t)             # learn

Strategies: the exact volumetric-barrier FTRL ("vbftrl"), its quasi-Newton
implementation ("vbftrl-qn"), log-barrier-only FTRL ("lbftrl", mu = 0), a
quadrature reference for the generalized mixture strategy of Cover's
Universal Portfolios ("cover", d <= 3), and the classic baselines
Exponentiated Gradient ("eg", Helmbold et al. 1998) and Online Newton Step
("ons", Agarwal et al. 2006).  All start at the uniform portfolio and are
deterministic given the market.
"""

import dataclasses
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from . import geometry
from .barrier import HyperParams, LossHistory, validate_return
from .exceptions import UnsupportedDimension
from .solver import minimize_exact, quasi_newton_round

VBFTRL = "vbftrl"
VBFTRL_QN = "vbftrl-qn"
LBFTRL = "lbftrl"
COVER_QUAD = "cover"
EG = "eg"
ONS = "ons"

KINDS = (VBFTRL, VBFTRL_QN, LBFTRL, COVER_QUAD, EG, ONS)

# default quadrature resolutions (grid cells per simplex edge)
COVER_RESOLUTION = {2: 400, 3: 80}


@dataclass
class StrategyConfig:
    kind: str = VBFTRL
    params: HyperParams = field(default_factory=HyperParams)
    quad_resolution: int | None = None
    eg_eta: float = 0.05
    ons_delta: float = 0.125
    ons_beta: float = 1.0
    ons_eta: float = 0.0


@dataclass
class StrategyState:
    """Single-owner, mutated sequentially round by round."""

    config: StrategyConfig
    d: int
    history: LossHistory
    current: np.ndarray
    scratch: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    @property
    def t(self):
        """Number of rounds observed so far."""
        return self.history.t


def simplex_grid(d, resolution, drop_boundary):
    """Centroids of an equal-area barycentric subdivision of the simplex.

    d = 2: midpoints of `resolution` segments.  d = 3: centroids of the
    2 * resolution^2 triangles of the standard edgewise subdivision (upward
    and downward families).  With drop_boundary, cells whose closure touches
    the simplex boundary are removed.
    """
    n = int(resolution)
    if n < 4:
        raise ValueError("quadrature resolution must be at least 4")
    if d == 2:
        k = np.arange(n)
        if drop_boundary:
            k = k[1:-1]
        p = (k + 0.5) / n
        return np.column_stack([p, 1.0 - p])
    if d == 3:
        pts = []
        for i in range(n):
            for j in range(n - i):
                if drop_boundary and (i == 0 or j == 0 or i + j == n - 1):
                    continue
                pts.append(((i + 1.0 / 3.0) / n, (j + 1.0 / 3.0) / n))
        for i in range(n - 1):
            for j in range(n - 1 - i):
                if drop_boundary and (i == 0 or j == 0 or i + j == n - 2):
                    continue
                pts.append(((i + 2.0 / 3.0) / n, (j + 2.0 / 3.0) / n))
        uv = np.asarray(pts)
        return np.column_stack([uv, 1.0 - uv.sum(axis=1)])
    raise UnsupportedDimension(f"quadrature grid supports d <= 3, got d = {d}")


def init(config, d):
    """Fresh state at the uniform portfolio."""
    if d < 2:
        raise UnsupportedDimension("need at least two assets")
    if config.kind not in KINDS:
        raise ValueError(f"unknown strategy kind {config.kind!r}")
    params = config.params
    if config.kind == LBFTRL:
        params = dataclasses.replace(params, mu=0.0)
    state = StrategyState(
        config=dataclasses.replace(config, params=params),
        d=d,
        history=LossHistory(d, params.lam),
        current=geometry.uniform_portfolio(d),
    )
    if config.kind == COVER_QUAD:
        if d > 3:
            raise UnsupportedDimension(f"cover quadrature supports d <= 3, got d = {d}")
        resolution = config.quad_resolution or COVER_RESOLUTION[d]
        grid = simplex_grid(d, resolution, drop_boundary=params.lam > 0.0)
        state.scratch["grid"] = grid
        state.scratch["grid_barrier"] = -np.log(grid).sum(axis=1)
        state.scratch["grid_cum_loss"] = np.zeros(grid.shape[0])
        state.scratch["resolution"] = resolution
    elif config.kind == EG:
        state.scratch["eg_weights"] = geometry.uniform_portfolio(d)
    elif config.kind == ONS:
        state.scratch["ons_A"] = np.eye(d)
        state.scratch["ons_b"] = np.zeros(d)
    return state


def _ons_projection(target, metric):
    """argmin_{w in simplex} (w - target)' metric (w - target)."""
    d = target.size
    result = scipy.optimize.minimize(
        lambda w: float((w - target) @ metric @ (w - target)),
        geometry.uniform_portfolio(d),
        jac=lambda w: 2.0 * metric @ (w - target),
        bounds=[(0.0, 1.0)] * d,
        constraints=[{"type": "eq", "fun": lambda w: w.sum() - 1.0}],
        method="SLSQP",
        options={"maxiter": 200, "ftol": 1e-14},
    )
    w = np.clip(result.x, 0.0, None)
    # keep the iterate strictly interior; boundary hits are a baseline
    # artifact, not meaningful for the log-loss game
    w = np.maximum(w, 1e-12)
    return w / w.sum()


def next_portfolio(state):
    """Portfolio for the coming round; repeated calls are idempotent."""
    cfg, params = state.config, state.config.params
    if cfg.kind in (VBFTRL, LBFTRL):
        outcome = minimize_exact(state.history, params, geometry.to_solid(state.current))
        state.current = geometry.to_simplex(outcome.v_star)
    elif cfg.kind == VBFTRL_QN:
        state.current = quasi_newton_round(
            state.history, params, state.current, flags=state.flags
        )
    elif cfg.kind == COVER_QUAD:
        grid = state.scratch["grid"]
        neg_energy = state.scratch["grid_cum_loss"] + params.lam * state.scratch["grid_barrier"]
        a = -neg_energy / params.mu
        weights = np.exp(a - a.max())
        state.current = grid.T @ weights / weights.sum()
    elif cfg.kind == EG:
        state.current = state.scratch["eg_weights"].copy()
    elif cfg.kind == ONS:
        A = state.scratch["ons_A"]
        target = cfg.ons_delta * np.linalg.solve(A, state.scratch["ons_b"])
        projected = _ons_projection(target, A)
        state.current = (1.0 - cfg.ons_eta) * projected + cfg.ons_eta * geometry.uniform_portfolio(state.d)
    return state.current


def observe(state, x):
    """Record the revealed returns and update baseline scratch."""
    x = validate_return(x, state.d)
    cfg = state.config
    if cfg.kind == COVER_QUAD:
        state.scratch["grid_cum_loss"] -= np.log(state.scratch["grid"] @ x)
    elif cfg.kind == EG:
        b = state.scratch["eg_weights"]
        b = b * np.exp(cfg.eg_eta * x / float(x @ b))
        state.scratch["eg_weights"] = b / b.sum()
    elif cfg.kind == ONS:
        grad = x / float(x @ state.current)
        state.scratch["ons_A"] += np.outer(grad, grad)
        state.scratch["ons_b"] += (1.0 + 1.0 / cfg.ons_beta) * grad
    state.history.append(x)
    return state

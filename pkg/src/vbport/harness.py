"""Game loop, best-CRP oracle, regret accounting, and the invariant auditor.

The regret of a played sequence is its cumulative log loss minus the loss
of the best constantly rebalanced portfolio in hindsight.  The oracle for
the latter is barrier-regularized with an explicit bias certificate
(gap_bound): the true optimum lies within [loss - gap_bound, loss].

The auditor re-derives, per round, the quantities the regret analysis is
built on -- the suboptimality term Miss_t, the volumetric drop Gain_t, the
new-round leverage score, and the decrement bound -- and turns violations
into flags rather than exceptions.
"""

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import geometry, strategies
from .barrier import (
    HyperParams,
    LossHistory,
    build_round_state,
    cumulative_potential_L,
    loss,
    potential_gradient_from_state,
    volumetric_value,
)
from .exceptions import UnknownPreset
from .markets import AdaptiveMarket, MarketSequence
from .solver import minimize_exact, newton_decrement

AUDIT_TOL = 1e-8
ENTRY_FLOOR_TOL = 1e-10


@dataclass
class RoundRecord:
    t: int
    loss: float
    cum_loss: float
    wealth: float
    regret_running: float
    theory_bound: float | None


@dataclass
class AuditRecord:
    t: int
    miss: float
    gain: float
    bias_running: float
    decrement_bound_lhs: float
    decrement_bound_rhs: float
    pi_hat: float
    leverage_max: float
    flags: list


@dataclass
class RegretReport:
    algo: str
    d: int
    T: int
    per_round: list
    best_crp: list
    best_crp_loss: float
    best_crp_gap_bound: float
    regret: float
    theory_bound: float | None
    audit: list = field(default_factory=list)

    @property
    def cum_loss(self):
        return self.per_round[-1].cum_loss if self.per_round else 0.0

    @property
    def wealth(self):
        return self.per_round[-1].wealth if self.per_round else 1.0


def theory_bound(d, T, preset=None, lam=None, mu=None, qn=False):
    """Closed-form regret upper bound.

    preset "thm2" is the exact algorithm at lam=16, mu=7:
    30 (d-1) log(T + 16 d).  preset "thm3" is the quasi-Newton algorithm at
    lam=560, mu=2: 564 d log(T + 560 d).  Without a preset, the general
    forms (lam + 2 mu)(d-1) log(T + lam d) and, for the quasi-Newton
    variant, (lam + 2 mu)[(d-1) log(T + lam d) + 1].
    """
    if preset == "thm2":
        return 30.0 * (d - 1) * math.log(T + 16.0 * d)
    if preset == "thm3":
        return 564.0 * d * math.log(T + 560.0 * d)
    if preset is not None:
        raise UnknownPreset(f"unknown preset {preset!r}")
    if lam is None or mu is None:
        raise UnknownPreset("general bound needs lam and mu")
    base = (lam + 2.0 * mu) * (d - 1) * math.log(T + lam * d)
    if qn:
        return (lam + 2.0 * mu) * ((d - 1) * math.log(T + lam * d) + 1.0)
    return base


def cover_mixture_bound(d, T, lam, mu):
    """Regret bound for the (lam, mu)-generalized mixture strategy:
    mu (d-1) log(T+1) + lam (d-1) log(4e (T + lam d)/(lam d)) + mu
    - lam log d, with the lam terms vanishing at lam = 0."""
    bound = mu * (d - 1) * math.log(T + 1.0) + mu
    if lam > 0.0:
        bound += lam * (d - 1) * math.log(4.0 * math.e * (T + lam * d) / (lam * d))
        bound -= lam * math.log(d)
    return bound


def best_crp(market):
    """Best constantly rebalanced portfolio, barrier-regularized.

    Minimizes the cumulative loss plus lam' * R with lam' = min(1, d/T) by
    damped Newton to decrement 1e-10, and returns (portfolio, pure loss,
    gap_bound) where the unregularized optimum is certified to lie in
    [loss - gap_bound, loss].  The certificate combines the smoothed-
    portfolio loss bound (at alpha = lam'(d-1)/(T + lam'(d-1)) the loss of
    the smoothing is at most lam'(d-1)) with the barrier value difference.
    """
    d, T = market.d, market.T
    if T < 1:
        raise ValueError("best_crp needs a nonempty market")
    lam = min(1.0, d / T)
    h = LossHistory(d, lam, returns=market.rounds)
    params = HyperParams(lam=lam, mu=0.0, decrement_tol=1e-10)
    outcome = minimize_exact(h, params, geometry.to_solid(geometry.uniform_portfolio(d)))
    w = geometry.to_simplex(outcome.v_star)
    pure = float(-np.log(np.asarray(market.rounds) @ w).sum())
    alpha = lam * (d - 1) / (T + lam * (d - 1))
    barrier_max = -math.log(1.0 - alpha * (d - 1) / d) + (d - 1) * math.log(d / alpha)
    barrier_at_w = float(-np.log(w).sum())
    gap = lam * ((d - 1) + barrier_max - barrier_at_w)
    return w, pure, gap


def audit_round(h, params, t, w_t, w_next, crp_cum_t):
    """Re-derive the round-t proof quantities at the played portfolio.

    h must hold rounds 1..t.  Checks recorded as flags: (a) Miss + Gain <= 0,
    (a') Gain <= -(mu/2) pi_hat, (b) the squared decrement of the potential
    at w_t under the H_t(w_t) metric is at most
    (1+lam)(lam+2mu)^2 / lam^3 * pi_hat, (c) pi_hat <= 1/(1+lam),
    (d) the entries of w_t respect the floor lam/(t-1+lam d).
    """
    lam, mu = params.lam, params.mu
    d = h.d

    def value_at(s):
        return cumulative_potential_L(h, s.w) + mu * volumetric_value(s)

    state = build_round_state(h, w_t)
    next_state = build_round_state(h, w_next)
    pi_hat = float(state.leverage[t - 1])
    miss = value_at(state) - value_at(next_state)
    gain = 0.5 * mu * math.log1p(-pi_hat)
    grad = potential_gradient_from_state(state, mu)
    decr_sq = newton_decrement(grad, state.hess_factor) ** 2
    rhs = (1.0 + lam) * (lam + 2.0 * mu) ** 2 / lam**3 * pi_hat
    flags = []
    if lam < 1.0:
        flags.append("lambda_below_one")
    if miss + gain > AUDIT_TOL:
        flags.append("miss_plus_gain_positive")
    if gain > -0.5 * mu * pi_hat + AUDIT_TOL:
        flags.append("gain_above_leverage_bound")
    if decr_sq > rhs + AUDIT_TOL:
        flags.append("decrement_bound_violated")
    if pi_hat > 1.0 / (1.0 + lam) + 1e-12:
        flags.append("leverage_above_cap")
    if float(w_t.min()) < lam / (t - 1 + lam * d) - ENTRY_FLOOR_TOL:
        flags.append("entry_floor_violated")
    bias_running = value_at(next_state) - crp_cum_t
    return AuditRecord(
        t=t,
        miss=miss,
        gain=gain,
        bias_running=bias_running,
        decrement_bound_lhs=decr_sq,
        decrement_bound_rhs=rhs,
        pi_hat=pi_hat,
        leverage_max=float(state.leverage[:t].max()),
        flags=flags,
    )


def run_game(config, market, audit=False, preset=None):
    """Play the full protocol and account for regret.

    market is either a MarketSequence (oblivious) or an AdaptiveMarket
    whose callback sees w_t before choosing x_t.  With audit=True and the
    exact strategy, per-round proof quantities are recorded (this adds one
    extra minimization at the final horizon for Miss_T).
    """
    adaptive = isinstance(market, AdaptiveMarket)
    d, T = market.d, market.T
    if d < 2 or T < 1:
        raise ValueError("need d >= 2 and T >= 1")
    state = strategies.init(config, d)
    played, realized, losses = [], [], []
    cum = 0.0
    for t in range(1, T + 1):
        w = strategies.next_portfolio(state)
        x = market(t, w) if adaptive else market.rounds[t - 1]
        l = loss(x, w)
        cum += l
        played.append(w.copy())
        realized.append(np.asarray(x, dtype=float))
        losses.append(l)
        strategies.observe(state, x)

    crp, crp_loss, gap = best_crp(MarketSequence(d=d, rounds=realized))
    crp_cum = np.cumsum([loss(x, crp) for x in realized])
    cum_losses = np.cumsum(losses)

    params = state.config.params
    qn = config.kind == strategies.VBFTRL_QN
    if preset is not None:
        bound_at = lambda horizon: theory_bound(d, horizon, preset=preset)
    elif config.kind in (strategies.VBFTRL, strategies.VBFTRL_QN):
        bound_at = lambda horizon: theory_bound(d, horizon, lam=params.lam, mu=params.mu, qn=qn)
    elif config.kind == strategies.COVER_QUAD:
        bound_at = lambda horizon: cover_mixture_bound(d, horizon, params.lam, params.mu)
    else:
        bound_at = lambda horizon: None

    per_round = [
        RoundRecord(
            t=t,
            loss=losses[t - 1],
            cum_loss=float(cum_losses[t - 1]),
            wealth=math.exp(-cum_losses[t - 1]) if cum_losses[t - 1] < 700 else 0.0,
            regret_running=float(cum_losses[t - 1] - crp_cum[t - 1]),
            theory_bound=bound_at(t),
        )
        for t in range(1, T + 1)
    ]

    audit_records = []
    if audit and config.kind == strategies.VBFTRL:
        final = minimize_exact(
            state.history, params, geometry.to_solid(state.current)
        )
        played.append(geometry.to_simplex(final.v_star))
        for t in range(1, T + 1):
            audit_records.append(
                audit_round(
                    state.history.prefix(t),
                    params,
                    t,
                    played[t - 1],
                    played[t],
                    float(crp_cum[t - 1]),
                )
            )
        played.pop()

    return RegretReport(
        algo=config.kind,
        d=d,
        T=T,
        per_round=per_round,
        best_crp=[float(c) for c in crp],
        best_crp_loss=crp_loss,
        best_crp_gap_bound=gap,
        regret=float(cum_losses[-1] - crp_loss),
        theory_bound=bound_at(T),
        audit=audit_records,
    )


CSV_COLUMNS = (
    "t",
    "loss",
    "cum_loss",
    "wealth",
    "regret_running",
    "theory_bound",
    "miss",
    "gain",
    "flags",
)


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def emit_report(report, out_path, format="CSV"):
    """Write the report: CSV of per-round columns, or JSON of the full
    structure (round-trips through report_from_json)."""
    format = format.upper()
    if format == "CSV":
        audit_by_t = {a.t: a for a in report.audit}
        with open(out_path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(CSV_COLUMNS)
            for r in report.per_round:
                a = audit_by_t.get(r.t)
                writer.writerow(
                    [
                        r.t,
                        _fmt(r.loss),
                        _fmt(r.cum_loss),
                        _fmt(r.wealth),
                        _fmt(r.regret_running),
                        _fmt(r.theory_bound),
                        _fmt(a.miss) if a else "",
                        _fmt(a.gain) if a else "",
                        ";".join(a.flags) if a else "",
                    ]
                )
    elif format == "JSON":
        with open(out_path, "w") as handle:
            json.dump(asdict(report), handle, indent=1)
    else:
        raise ValueError(f"unknown report format {format!r}")


def report_from_json(path_or_text):
    """Inverse of emit_report(..., format='JSON')."""
    if isinstance(path_or_text, str) and path_or_text.lstrip().startswith("{"):
        data = json.loads(path_or_text)
    else:
        with open(path_or_text) as handle:
            data = json.load(handle)
    data["per_round"] = [RoundRecord(**r) for r in data["per_round"]]
    data["audit"] = [AuditRecord(**a) for a in data["audit"]]
    return RegretReport(**data)

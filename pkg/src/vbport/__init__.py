"""Online portfolio selection with a hybrid logarithmic-volumetric barrier.

The engine selects portfolios by follow-the-regularized-leader over the
observed log losses, regularized with a log barrier plus the log-determinant
of the resulting Hessian (a volumetric barrier), and ships with an exact
damped-Newton solver, a fixed-step quasi-Newton implementation, classic
baselines, market generators, and a regret harness with a per-round
invariant auditor.
"""

from .barrier import (
    HyperParams,
    LossHistory,
    RoundState,
    build_round_state,
    cumulative_potential_L,
    exact_volumetric_hessian,
    gain_term,
    gram_row,
    hessian_model_Q,
    leverage_gradient,
    loss,
    new_round_leverage,
    potential_P,
    potential_P_gradient,
    volumetric_gradient,
    volumetric_value,
)
from .geometry import (
    reparam_gradient,
    reparam_hessian,
    to_simplex,
    to_solid,
    uniform_portfolio,
)
from .harness import (
    AuditRecord,
    RegretReport,
    RoundRecord,
    audit_round,
    best_crp,
    cover_mixture_bound,
    emit_report,
    report_from_json,
    run_game,
    theory_bound,
)
from .markets import (
    AdaptiveMarket,
    MarketSequence,
    gen_iid_lognormal,
    gen_two_asset_switch,
    load_csv,
    worst_coordinate_adversary,
    worst_coordinate_return,
)
from .solver import (
    DecrementCertificate,
    SolveOutcome,
    minimize_exact,
    newton_decrement,
    omega,
    psi,
    quasi_newton_round,
    suboptimality_certificate,
)
from .strategies import StrategyConfig, StrategyState, init, next_portfolio, observe

__version__ = "0.1.0"

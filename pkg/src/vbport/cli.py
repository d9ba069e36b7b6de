"""Command-line entry point.

Runs one strategy against one market, prints a summary, and optionally
writes the per-round report (CSV or JSON) plus companion figures.

Exit codes: 0 on success, 2 on input errors, 3 on numerical failure.
"""

import argparse
import math
import os
import sys

from .barrier import HyperParams
from .exceptions import NumericalError, VbportError
from .harness import emit_report, run_game
from .markets import gen_iid_lognormal, gen_two_asset_switch, load_csv, worst_coordinate_adversary
from .strategies import COVER_QUAD, EG, KINDS, LBFTRL, ONS, VBFTRL, VBFTRL_QN, StrategyConfig

PRESETS = ("thm2", "thm3")


def build_parser():
    p = argparse.ArgumentParser(
        prog="vbport",
        description="Online portfolio selection: volumetric-barrier FTRL, baselines, regret harness.",
    )
    p.add_argument("--algo", choices=KINDS, default=VBFTRL)
    p.add_argument("--d", type=int, default=None, help="number of assets (synthetic markets)")
    p.add_argument("--T", type=int, default=None, help="number of rounds (synthetic markets)")
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="log-barrier weight")
    p.add_argument("--mu", type=float, default=None, help="volumetric weight")
    p.add_argument("--steps", type=int, default=None, help="quasi-Newton steps per round")
    p.add_argument("--preset", choices=PRESETS, default=None)
    p.add_argument(
        "--market",
        default="iid",
        help="iid | switch | adversary | csv:PATH",
    )
    p.add_argument("--prices", action="store_true", help="CSV holds prices, not returns")
    p.add_argument("--csv-header", action="store_true", help="skip the first CSV row")
    p.add_argument("--vol", type=float, default=0.1, help="lognormal volatility for --market iid")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--audit", action="store_true", help="record per-round proof invariants (exact algo)")
    p.add_argument("--quad-resolution", type=int, default=None, help="cover grid cells per edge")
    p.add_argument("--eta", type=float, default=0.05, help="EG learning rate")
    p.add_argument("--out", default=None, help="report path")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--no-plot", action="store_true", help="skip figure rendering next to --out")
    return p


def resolve_params(args):
    """Preset first, explicit flags override, algorithm defaults otherwise."""
    d = args.d or 2
    T = args.T or 200
    if args.preset == "thm2":
        params = HyperParams.exact_preset()
    elif args.preset == "thm3":
        params = HyperParams.quasi_newton_preset(T, d)
    elif args.algo == VBFTRL_QN:
        params = HyperParams.quasi_newton_preset(T, d)
    elif args.algo == COVER_QUAD:
        params = HyperParams(lam=0.0, mu=1.0)
    else:
        params = HyperParams.exact_preset()
    if args.lam is not None:
        params.lam = args.lam
    if args.mu is not None:
        params.mu = args.mu
    if args.steps is not None:
        params.steps = args.steps
    return params


def resolve_market(args):
    spec = args.market
    if spec.startswith("csv:"):
        path = spec[4:]
        market = load_csv(path, mode="PRICES" if args.prices else "RETURNS", header=args.csv_header)
        if args.d is not None and args.d != market.d:
            raise ValueError(f"--d {args.d} does not match the {market.d} columns of {path}")
        return market
    if spec == "switch":
        if args.d not in (None, 2):
            raise ValueError("the switch market has exactly two assets")
        return gen_two_asset_switch(args.T or 200)
    d, T = args.d or 2, args.T or 200
    if spec == "iid":
        return gen_iid_lognormal(d, T, vol=args.vol, seed=args.seed)
    if spec == "adversary":
        return worst_coordinate_adversary(d, T)
    raise ValueError(f"unknown market {spec!r}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        market = resolve_market(args)
        params = resolve_params(args)
        config = StrategyConfig(
            kind=args.algo,
            params=params,
            quad_resolution=args.quad_resolution,
            eg_eta=args.eta,
        )
        report = run_game(config, market, audit=args.audit, preset=args.preset)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (VbportError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    print(f"algo            {report.algo}")
    print(f"market          {args.market}  d={report.d}  T={report.T}")
    print(f"params          lambda={params.lam:g} mu={params.mu:g} steps={params.steps}")
    if args.algo == COVER_QUAD:
        from .strategies import COVER_RESOLUTION

        resolution = args.quad_resolution or COVER_RESOLUTION[report.d]
        print(f"quadrature      {resolution} cells per edge")
    print(f"cumulative loss {report.cum_loss:.6f}")
    print(f"final wealth    {report.wealth:.6g}")
    print(f"best CRP loss   {report.best_crp_loss:.6f} (gap bound {report.best_crp_gap_bound:.3g})")
    print(f"regret          {report.regret:.6f}")
    if report.theory_bound is not None:
        print(f"theory bound    {report.theory_bound:.6f}")
    if report.audit:
        flagged = sum(1 for a in report.audit if a.flags)
        print(f"audit           {len(report.audit)} rounds, {flagged} flagged")

    if args.out:
        try:
            emit_report(report, args.out, format=args.format)
            print(f"report          {args.out}")
            if not args.no_plot:
                from .figures import render_report

                stem, _ = os.path.splitext(args.out)
                for path in render_report(report, stem):
                    print(f"figure          {path}")
        except OSError as exc:
            print(f"error writing report: {exc}", file=sys.stderr)
            return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

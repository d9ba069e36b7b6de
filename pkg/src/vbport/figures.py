"""Render a regret report to figure files next to the delimited output."""

import numpy as np
import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_report(report, stem):
    """Write <stem>.png with the regret and wealth trajectories.

    Returns the list of paths written.
    """
    t = np.array([r.t for r in report.per_round])
    regret = np.array([r.regret_running for r in report.per_round])
    wealth = np.array([r.wealth for r in report.per_round])
    bound = [r.theory_bound for r in report.per_round]

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.6, 3.6))
    ax1.plot(t, regret, label="regret vs best CRP", color="tab:blue")
    if bound[0] is not None:
        ax1.plot(t, bound, label="theory bound", color="tab:red", ls="--")
    ax1.axhline(0.0, color="gray", lw=0.6)
    ax1.set_xlabel("round")
    ax1.set_ylabel("cumulative regret")
    ax1.set_title(f"{report.algo}  d={report.d}  T={report.T}")
    ax1.legend(frameon=False, fontsize=8)

    positive = wealth > 0
    if positive.any():
        ax2.semilogy(t[positive], wealth[positive], color="tab:green")
    ax2.set_xlabel("round")
    ax2.set_ylabel("wealth")
    ax2.set_title("wealth trajectory")

    fig.tight_layout()
    path = f"{stem}.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return [path]

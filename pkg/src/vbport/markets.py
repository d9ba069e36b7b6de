"""Market sequences: adversarial constructions, stochastic generators, CSV.

Oblivious markets are plain :class:`MarketSequence` objects; adaptive
adversaries are :class:`AdaptiveMarket` callbacks that see the portfolio
before choosing the round's returns, matching the game protocol.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .barrier import validate_return
from .exceptions import InconsistentWidth, InvalidReturn, ParseError


@dataclass
class MarketSequence:
    """A fixed (oblivious) sequence of per-round return vectors."""

    d: int
    rounds: list = field(default_factory=list)
    provenance: str = "SYNTHETIC"  # or "CSV"
    seed: int | None = None

    @property
    def T(self):
        return len(self.rounds)

    def validate(self):
        for x in self.rounds:
            validate_return(x, self.d)
        return self


@dataclass
class AdaptiveMarket:
    """An adversary that observes w_t before emitting x_t."""

    d: int
    T: int
    next_return: object  # callable (t, w) -> x

    def __call__(self, t, w):
        return self.next_return(t, w)


def worst_coordinate_return(w):
    """Basis vector of the smallest portfolio entry (ties: lowest index).

    Forces x'w = min_i w_i <= 1/d, so the per-round loss is at least log d
    against any portfolio.
    """
    w = np.asarray(w, dtype=float)
    x = np.zeros(w.size)
    x[int(np.argmin(w))] = 1.0
    return x


def worst_coordinate_adversary(d, T):
    """Adaptive adversary playing the worst-coordinate basis vector."""
    return AdaptiveMarket(d=d, T=T, next_return=lambda t, w: worst_coordinate_return(w))


def gen_iid_lognormal(d, T, vol, seed=None):
    """I.i.d. lognormal returns: entries exp(N(0, vol^2)); deterministic
    given the seed.  vol = 0 degenerates to the all-ones market."""
    if vol < 0:
        raise ValueError("volatility must be nonnegative")
    rng = np.random.default_rng(seed)
    rounds = [np.exp(vol * rng.standard_normal(d)) for _ in range(T)]
    return MarketSequence(d=d, rounds=rounds, provenance="SYNTHETIC", seed=seed)


def gen_two_asset_switch(T):
    """Alternating (2, 0.5) / (0.5, 2) returns.

    Any single asset has wealth factor 1 per two rounds while the 50/50
    rebalanced portfolio gains 1.25 per round, so the best CRP is (0.5, 0.5).
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    a, b = np.array([2.0, 0.5]), np.array([0.5, 2.0])
    return MarketSequence(d=2, rounds=[a.copy() if t % 2 == 0 else b.copy() for t in range(T)])


def _parse_cell(raw, row, col):
    try:
        return float(raw)
    except ValueError as exc:
        raise ParseError(f"row {row}, column {col}: cannot parse {raw!r}") from exc


def load_csv(path, mode="RETURNS", header=False):
    """Load a market from a comma-separated file, one row per round, one
    column per asset.

    RETURNS mode takes values as price ratios directly.  PRICES mode
    consumes the first data row as the base and converts each subsequent
    row to ratios price_t / price_{t-1}; all prices must be positive.
    """
    if mode not in ("RETURNS", "PRICES"):
        raise ValueError(f"unknown mode {mode!r}")
    rows = []
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        for i, record in enumerate(reader):
            if not record or (len(record) == 1 and not record[0].strip()):
                continue  # skip blank lines
            if header and not rows and i == 0:
                continue
            rows.append((i + 1, [cell.strip() for cell in record]))
    if not rows:
        raise ParseError(f"{path}: no data rows")
    width = len(rows[0][1])
    if width < 2:
        raise ParseError(f"{path}: need at least two columns, found {width}")
    data = []
    for rownum, record in rows:
        if len(record) != width:
            raise InconsistentWidth(
                f"row {rownum}: expected {width} columns, found {len(record)}"
            )
        data.append([_parse_cell(cell, rownum, c + 1) for c, cell in enumerate(record)])
    values = np.asarray(data)
    if mode == "PRICES":
        if np.any(values <= 0.0):
            bad = np.argwhere(values <= 0.0)[0]
            raise InvalidReturn(
                f"nonpositive price at data row {bad[0] + 1}, column {bad[1] + 1}"
            )
        if values.shape[0] < 2:
            raise ParseError(f"{path}: PRICES mode needs at least two rows")
        values = values[1:] / values[:-1]
    rounds = []
    for i in range(values.shape[0]):
        try:
            rounds.append(validate_return(values[i], width))
        except InvalidReturn as exc:
            raise InvalidReturn(f"data row {i + 1}: {exc}") from exc
    return MarketSequence(d=width, rounds=rounds, provenance="CSV")

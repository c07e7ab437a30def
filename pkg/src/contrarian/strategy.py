"""Ranking on lagged returns and loser/winner cohort formation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .panel import PanelError, ReturnPanel, estimation_rows, stock_columns


@dataclass(frozen=True, order=True)
class StrategySpec:
    """One (J, K, skip, G) cell.

    Parameters
    ----------
    J : int
        Estimation horizon in months.
    K : int
        Holding horizon in months.
    skip : int
        Months between the end of estimation and the formation month.
    G : int
        Number of rank groups (10 = deciles).
    """

    J: int
    K: int
    skip: int = 0
    G: int = 10

    def __post_init__(self):
        if self.J < 1 or self.K < 1:
            raise ValueError(f"J and K must be >= 1, got J={self.J}, K={self.K}")
        if self.skip < 0:
            raise ValueError(f"skip must be >= 0, got {self.skip}")
        if self.G < 2:
            raise ValueError(f"G must be >= 2, got {self.G}")


@dataclass(frozen=True)
class Cohort:
    formation: int
    losers: tuple[str, ...]
    winners: tuple[str, ...]
    universe_size: int


class TooFewStocks(ValueError):
    """Fewer eligible stocks than groups; the formation month is skipped."""


def group_bounds(n: int, G: int) -> list[int]:
    """Rank boundaries ``floor(n*g/G)`` for g = 0..G."""
    return [(n * g) // G for g in range(G + 1)]


def rank_and_group(scores: Sequence[tuple[str, float]], G: int) -> dict[str, int]:
    """Assign each stock a group in ``0..G-1`` (0 = lowest scores).

    Sorted ascending by score with ties broken by ascending stock id; the stock
    at rank k belongs to group g iff ``floor(N*g/G) <= k < floor(N*(g+1)/G)``.
    """
    n = len(scores)
    if n == 0:
        raise ValueError("no scores to rank")
    if n < G:
        raise TooFewStocks(f"{n} stocks cannot fill {G} groups")
    ordered = sorted(scores, key=lambda p: (p[1], p[0]))
    bounds = group_bounds(n, G)
    out = {}
    g = 0
    for k, (sid, _) in enumerate(ordered):
        while k >= bounds[g + 1]:
            g += 1
        out[sid] = g
    return out


def estimation_return(panel: ReturnPanel, stock: str, t: int, J: int, skip: int = 0) -> float:
    """Compounded return of ``stock`` over months ``t-J-skip+1 .. t-skip``."""
    rows = estimation_rows(panel, t, J, skip)
    j = stock_columns(panel, [stock])[0]
    if not panel.mask[rows, j].all():
        raise PanelError(f"{stock} has a missing return in the estimation window")
    growth = 1.0
    for r in panel.values[rows, j].tolist():
        growth *= 1.0 + r
    return growth - 1.0


def _check_holding(panel: ReturnPanel, t: int, K: int) -> None:
    if t + 1 < panel.start or t + K > panel.end:
        raise PanelError("holding window outside panel")


def window_scores(panel: ReturnPanel, t: int, J: int, skip: int) -> tuple[np.ndarray, np.ndarray]:
    """Column indices of eligible stocks and their compounded window returns.

    Columns come back in stock-id order; the product runs month by month so
    it matches a scalar loop bit for bit.
    """
    rows = estimation_rows(panel, t, J, skip)
    cols = np.flatnonzero(panel.mask[rows].all(axis=0))
    growth = np.ones(len(cols))
    for r in panel.values[rows][:, cols]:
        growth *= 1.0 + r
    return cols, growth - 1.0


def extreme_groups(cols: np.ndarray, scores: np.ndarray, G: int) -> tuple[np.ndarray, np.ndarray]:
    """Loser and winner column indices for already id-ordered ``cols``."""
    n = len(cols)
    if n < G:
        raise TooFewStocks(f"{n} stocks cannot fill {G} groups")
    # stable sort on id-ordered input == tie-break by ascending stock id
    order = cols[np.argsort(scores, kind="stable")]
    return np.sort(order[: n // G]), np.sort(order[(n * (G - 1)) // G:])


def form_cohort(panel: ReturnPanel, t: int, spec: StrategySpec) -> Cohort | None:
    """Loser/winner cohort at formation month ``t``; ``None`` if too few stocks."""
    _check_holding(panel, t, spec.K)
    cols, scores = window_scores(panel, t, spec.J, spec.skip)
    try:
        losers, winners = extreme_groups(cols, scores, spec.G)
    except TooFewStocks:
        return None
    names = panel.stocks
    return Cohort(
        formation=t,
        losers=tuple(names[j] for j in losers),
        winners=tuple(names[j] for j in winners),
        universe_size=len(cols),
    )


def holding_leg_returns(panel: ReturnPanel, members: Sequence[str], t: int, K: int) -> np.ndarray:
    """Equal-weighted monthly returns of ``members`` over ``t+1 .. t+K``.

    Members missing in a month are left out of that month's average; a month
    with no surviving member earns 0.0.
    """
    if not members:
        raise ValueError("empty portfolio")
    _check_holding(panel, t, K)
    cols = stock_columns(panel, members)
    rows = slice(t + 1 - panel.start, t + K + 1 - panel.start)
    vals = panel.values[rows][:, cols]
    counts = panel.mask[rows][:, cols].sum(axis=1)
    sums = vals.sum(axis=1)
    return np.divide(sums, counts, out=np.zeros(K), where=counts > 0)

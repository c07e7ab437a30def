"""Holding-period compounding, annualization and strategy runs.

Every calendar month with enough history and future is a formation month, so
cohorts overlap by ``K - 1`` holding months. Each cohort contributes one
annualized return per leg; the contrarian leg is loser minus winner.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import groupby
from typing import Iterable, Sequence

import numpy as np

from .panel import PanelError, ReturnPanel
from .stats import LEGS, StrategySummary, summarize_or_flag
from .strategy import (
    StrategySpec,
    TooFewStocks,
    extreme_groups,
    form_cohort,
    holding_leg_returns,
    window_scores,
)


def cumulative(returns: Sequence[float]) -> float:
    """Compounded return ``prod(1 + r) - 1``."""
    if len(returns) == 0:
        raise ValueError("cannot compound an empty return list")
    growth = 1.0
    for r in returns:
        if r <= -1.0:
            raise ValueError(f"return {r} <= -1")
        growth *= 1.0 + r
    return growth - 1.0


def annualize(R: float, K: int) -> float:
    """Geometric per-annum rate of a ``K``-month cumulative return."""
    if K < 1:
        raise ValueError("K must be >= 1")
    if R <= -1.0:
        raise ValueError(f"cumulative return {R} <= -1")
    return (1.0 + R) ** (12.0 / K) - 1.0


@dataclass(frozen=True)
class CohortResult:
    formation: int
    loser: float
    winner: float
    contrarian: float


@dataclass(frozen=True)
class StrategyRun:
    spec: StrategySpec
    cohorts: tuple[CohortResult, ...]
    skipped: int

    @property
    def formations(self) -> list[int]:
        return [c.formation for c in self.cohorts]

    def leg(self, name: str) -> np.ndarray:
        if name not in LEGS:
            raise ValueError(f"unknown leg {name!r}")
        return np.array([getattr(c, name) for c in self.cohorts], dtype=np.float64)


def formation_months(panel: ReturnPanel, J: int, skip: int, K: int) -> range:
    """Months with a full estimation window behind and K holding months ahead."""
    return range(panel.start + J + skip - 1, panel.end - K + 1)


def cohort_result(panel: ReturnPanel, t: int, spec: StrategySpec) -> CohortResult | None:
    """Annualized leg returns of the cohort formed at ``t`` (``None`` if skipped)."""
    cohort = form_cohort(panel, t, spec)
    if cohort is None:
        return None
    L = annualize(cumulative(holding_leg_returns(panel, cohort.losers, t, spec.K)), spec.K)
    W = annualize(cumulative(holding_leg_returns(panel, cohort.winners, t, spec.K)), spec.K)
    return CohortResult(t, L, W, L - W)


@dataclass
class _LegPaths:
    """Monthly leg returns for every formation month of one (J, skip, G).

    Row i of ``losers``/``winners`` holds the holding-month returns of the
    cohort formed at ``formations[i]``, NaN-padded past the panel end.
    """

    formations: np.ndarray
    losers: np.ndarray
    winners: np.ndarray
    skipped: np.ndarray


def _leg_month_returns(panel: ReturnPanel, cols: np.ndarray, first_row: int, horizon: int) -> np.ndarray:
    rows = slice(first_row, first_row + horizon)
    vals = np.take(panel.values[rows], cols, axis=1)
    counts = np.take(panel.mask[rows], cols, axis=1).sum(axis=1)
    return np.divide(vals.sum(axis=1), counts, out=np.zeros(len(counts)), where=counts > 0)


def _leg_paths(panel: ReturnPanel, J: int, skip: int, G: int, K_min: int, K_max: int) -> _LegPaths:
    months = formation_months(panel, J, skip, K_min)
    formed, skipped = [], []
    losers = np.full((len(months), K_max), np.nan)
    winners = np.full((len(months), K_max), np.nan)
    for t in months:
        cols, scores = window_scores(panel, t, J, skip)
        try:
            lo, hi = extreme_groups(cols, scores, G)
        except TooFewStocks:
            skipped.append(t)
            continue
        first = t + 1 - panel.start
        h = min(K_max, panel.n_months - first)
        i = len(formed)
        losers[i, :h] = _leg_month_returns(panel, lo, first, h)
        winners[i, :h] = _leg_month_returns(panel, hi, first, h)
        formed.append(t)
    n = len(formed)
    return _LegPaths(np.array(formed, dtype=np.int64), losers[:n], winners[:n],
                     np.array(skipped, dtype=np.int64))


def _annualized_paths(paths: np.ndarray, K: int) -> np.ndarray:
    growth = np.cumprod(1.0 + paths[:, :K], axis=1)[:, K - 1]
    return growth ** (12.0 / K) - 1.0


def _run_from_paths(panel: ReturnPanel, paths: _LegPaths, spec: StrategySpec) -> StrategyRun:
    last = panel.end - spec.K
    keep = paths.formations <= last
    L = _annualized_paths(paths.losers[keep], spec.K)
    W = _annualized_paths(paths.winners[keep], spec.K)
    C = L - W
    cohorts = tuple(
        CohortResult(int(t), float(a), float(b), float(c))
        for t, a, b, c in zip(paths.formations[keep], L, W, C)
    )
    skipped = int(np.count_nonzero(paths.skipped <= last))
    return StrategyRun(spec, cohorts, skipped)


def _check_length(panel: ReturnPanel, spec: StrategySpec) -> None:
    if len(formation_months(panel, spec.J, spec.skip, spec.K)) == 0:
        raise PanelError(
            f"panel of {panel.n_months} months too short for J={spec.J}, "
            f"skip={spec.skip}, K={spec.K}")


def run_strategy(panel: ReturnPanel, spec: StrategySpec) -> StrategyRun:
    """Overlapping-cohort run of ``spec`` over every feasible formation month."""
    _check_length(panel, spec)
    paths = _leg_paths(panel, spec.J, spec.skip, spec.G, spec.K, spec.K)
    return _run_from_paths(panel, paths, spec)


def _run_group(panel: ReturnPanel, specs: list[StrategySpec]) -> list[StrategyRun | None]:
    feasible = [s for s in specs if len(formation_months(panel, s.J, s.skip, s.K))]
    if not feasible:
        return [None] * len(specs)
    first = feasible[0]
    paths = _leg_paths(panel, first.J, first.skip, first.G,
                       min(s.K for s in feasible), max(s.K for s in feasible))
    return [_run_from_paths(panel, paths, s) if s in feasible else None for s in specs]


def _run_group_args(args):
    return _run_group(*args)


def run_many(panel: ReturnPanel, specs: Iterable[StrategySpec],
             workers: int = 1) -> dict[StrategySpec, StrategyRun | None]:
    """Run many specs, sharing ranking work across K.

    Specs the panel is too short for map to ``None``. Output order and values
    do not depend on ``workers``.
    """
    specs = sorted(set(specs))
    key = lambda s: (s.J, s.skip, s.G)  # noqa: E731
    groups = [list(g) for _, g in groupby(sorted(specs, key=key), key=key)]
    if workers > 1 and len(groups) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_group_args, [(panel, g) for g in groups]))
    else:
        results = [_run_group(panel, g) for g in groups]
    out = {}
    for group, runs in zip(groups, results):
        out.update(zip(group, runs))
    return {s: out[s] for s in specs}


SweepGrid = dict[tuple[int, int, str], "StrategySummary | None"]


def sweep(panel: ReturnPanel, J_set: Sequence[int], K_set: Sequence[int], skip: int = 0,
          G: int = 10, workers: int = 1) -> SweepGrid:
    """Summaries for every (J, K) cell and leg.

    Cells without two usable cohorts map to ``None``.
    """
    if not J_set or not K_set:
        raise ValueError("J_set and K_set must be nonempty")
    specs = [StrategySpec(J, K, skip, G) for J in sorted(set(J_set)) for K in sorted(set(K_set))]
    runs = run_many(panel, specs, workers)
    grid: SweepGrid = {}
    for spec in specs:
        run = runs[spec]
        for leg in LEGS:
            grid[(spec.J, spec.K, leg)] = None if run is None else summarize_or_flag(run, leg)
    return grid

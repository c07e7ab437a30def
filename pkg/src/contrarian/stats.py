"""Newey-West t-statistics, strategy summaries and paired difference tests."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING, Sequence

import numpy as np
from scipy import stats as _st

if TYPE_CHECKING:
    from .returns import StrategyRun

LEGS = ("loser", "winner", "contrarian")

SIG_NONE = ""
SIG_5 = "*"
SIG_1 = "**"
SIG_ERR = "ERR"


class DegenerateInference(ValueError):
    """Zero HAC variance with a nonzero mean: the t-statistic is undefined."""


def nw_variance(series: Sequence[float], q: int) -> float:
    """Bartlett-weighted long-run variance of ``series`` with ``q`` lags.

    ``gamma_0 + 2 * sum_{j=1..q} (1 - j/(q+1)) * gamma_j`` where
    ``gamma_j = (1/n) * sum_t (x_t - xbar)(x_{t+j} - xbar)``. Negative
    round-off is truncated to zero.
    """
    x = np.asarray(series, dtype=np.float64)
    n = len(x)
    if n < 2:
        raise ValueError(f"need at least 2 observations, got {n}")
    if not 0 <= q <= n - 1:
        raise ValueError(f"lag {q} outside 0..{n - 1}")
    d = x - x.mean()
    var = float(d @ d) / n
    for j in range(1, q + 1):
        var += 2.0 * (1.0 - j / (q + 1)) * float(d[j:] @ d[:-j]) / n
    return max(var, 0.0)


# relative size below which a standard deviation counts as rounding noise
_DUST = 64 * np.finfo(np.float64).eps


def nw_tstat(series: Sequence[float], q: int) -> float:
    """Mean over its Newey-West standard error.

    A series whose spread is rounding noise relative to its magnitude has
    zero variance: t is 0 if the mean is zero too, otherwise undefined.
    """
    x = np.asarray(series, dtype=np.float64)
    var = nw_variance(x, q)
    mean = float(x.mean())
    scale = float(np.abs(x).max())
    if math.sqrt(var) <= _DUST * scale or var == 0.0:
        if abs(mean) <= _DUST * scale:
            return 0.0
        raise DegenerateInference("zero variance with nonzero mean")
    return mean / math.sqrt(var / len(x))


@lru_cache(maxsize=None)
def critical_values(n: int) -> tuple[float, float]:
    """Two-sided 5% and 1% Student-t critical values with ``n - 1`` dof."""
    df = n - 1
    return float(_st.t.ppf(0.975, df)), float(_st.t.ppf(0.995, df))


def significance(tstat: float, n: int) -> str:
    c5, c1 = critical_values(n)
    a = abs(tstat)
    if a >= c1:
        return SIG_1
    if a >= c5:
        return SIG_5
    return SIG_NONE


@dataclass(frozen=True)
class StrategySummary:
    ret: float
    tstat: float
    n: int
    sig: str


@dataclass(frozen=True)
class DiffResult:
    delta: float
    tstat: float
    n: int
    sig: str


def hac_lag(K: int, skip: int) -> int:
    return K - 1 + skip


def _check_leg(leg: str) -> None:
    if leg not in LEGS:
        raise ValueError(f"unknown leg {leg!r}, expected one of {LEGS}")


def summarize(run: StrategyRun, leg: str) -> StrategySummary:
    """Mean annualized return of ``leg`` with its HAC t-statistic.

    The lag is ``K - 1 + skip``, capped at ``n - 1`` for short runs.
    """
    _check_leg(leg)
    x = run.leg(leg)
    n = len(x)
    if n < 2:
        raise ValueError(f"need at least 2 cohorts, got {n}")
    q = min(hac_lag(run.spec.K, run.spec.skip), n - 1)
    t = nw_tstat(x, q)
    return StrategySummary(float(x.mean()), t, n, significance(t, n))


def summarize_or_flag(run: StrategyRun, leg: str) -> StrategySummary | None:
    """:func:`summarize`, with ``None`` for n < 2 and ``SIG_ERR`` for degenerate t."""
    x = run.leg(leg)
    if len(x) < 2:
        return None
    try:
        return summarize(run, leg)
    except DegenerateInference:
        return StrategySummary(float(x.mean()), math.nan, len(x), SIG_ERR)


def diff_test(run_a: StrategyRun, run_b: StrategyRun, leg: str) -> DiffResult:
    """Paired A-minus-B test over the formation months both runs share."""
    _check_leg(leg)
    a = dict(zip(run_a.formations, run_a.leg(leg)))
    b = dict(zip(run_b.formations, run_b.leg(leg)))
    common = sorted(a.keys() & b.keys())
    n = len(common)
    if n < 2:
        raise ValueError(f"runs share {n} formation months, need at least 2")
    d = np.array([a[t] - b[t] for t in common])
    q = max(run_a.spec.K, run_b.spec.K) - 1 + max(run_a.spec.skip, run_b.spec.skip)
    t = nw_tstat(d, min(q, n - 1))
    return DiffResult(float(d.mean()), t, n, significance(t, n))

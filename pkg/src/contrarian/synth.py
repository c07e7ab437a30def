"""Seeded synthetic return panels with a tunable reversal/momentum signal.

Model::

    r[i, t] = mu + m[t] + s[i, t]
    m[t]    ~ N(0, sigma_mkt**2)                       (common factor)
    s[i, t] = phi * s[i, t-1] + e[i, t],  e ~ N(0, sigma_idio**2)
    s[i, 0] ~ N(0, sigma_idio**2 / (1 - phi**2))       (stationary start)

Returns below -0.99 are clamped to -0.99.

Random stream
-------------
Uniform doubles come from NumPy's PCG64 bit generator seeded with the
64-bit ``seed`` (``Generator.random``, 53-bit resolution). Standard normals
use the Box-Muller cosine branch on consecutive uniform pairs
``(u1, u2)``: ``z = sqrt(-2 log(1 - u1)) * cos(2 pi u2)``. Normals are
consumed market first (``m[0..T-1]``), then stock-major, month-minor
(``z[0, 0..T-1], z[1, 0..T-1], ...``). The idiosyncratic stream therefore
does not depend on ``sigma_mkt``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .panel import ReturnPanel, parse_month

log = logging.getLogger(__name__)

EPOCH = "2000-01"
CLAMP = -0.99


@dataclass(frozen=True)
class SynthConfig:
    n_stocks: int = 200
    n_months: int = 240
    phi: float = 0.0
    sigma_idio: float = 0.08
    sigma_mkt: float = 0.05
    mu: float = 0.005
    seed: int = 0

    def __post_init__(self):
        if self.n_stocks < 2 or self.n_months < 2:
            raise ValueError("need at least 2 stocks and 2 months")
        if not -1.0 < self.phi < 1.0:
            raise ValueError(f"phi must lie in (-1, 1), got {self.phi}")
        if self.sigma_idio < 0 or self.sigma_mkt < 0:
            raise ValueError("volatilities must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def standard_normals(rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` Box-Muller normals from ``2n`` uniforms (cosine branch only)."""
    u = rng.random(2 * n)
    return np.sqrt(-2.0 * np.log1p(-u[0::2])) * np.cos(2.0 * math.pi * u[1::2])


def simulate(config: SynthConfig) -> tuple[np.ndarray, int]:
    """Return matrix ``(n_months, n_stocks)`` and the number of clamped cells."""
    T, N = config.n_months, config.n_stocks
    rng = np.random.Generator(np.random.PCG64(config.seed))
    market = config.sigma_mkt * standard_normals(rng, T)
    z = standard_normals(rng, N * T).reshape(N, T)

    s = np.empty((N, T))
    s[:, 0] = z[:, 0] * config.sigma_idio / math.sqrt(1.0 - config.phi**2)
    for t in range(1, T):
        s[:, t] = config.phi * s[:, t - 1] + config.sigma_idio * z[:, t]
    r = config.mu + market[None, :] + s
    low = r < CLAMP
    n_clamped = int(low.sum())
    r[low] = CLAMP
    return np.ascontiguousarray(r.T), n_clamped


def generate(config: SynthConfig) -> ReturnPanel:
    """Dense panel starting 2000-01 with stocks ``S0001, S0002, ...``."""
    r, n_clamped = simulate(config)
    if n_clamped:
        log.info("clamped %d of %d cells to %s", n_clamped, r.size, CLAMP)
    width = max(4, len(str(config.n_stocks)))
    stocks = tuple(f"S{i + 1:0{width}d}" for i in range(config.n_stocks))
    return ReturnPanel(parse_month(EPOCH), stocks, r, np.ones_like(r, dtype=bool))


def inject_missing(panel: ReturnPanel, rate: float, seed: int) -> ReturnPanel:
    """Mask each cell independently with probability ``rate``.

    Uniforms are drawn stock by stock; a stock left with no present return
    draws a fresh row until one survives.
    """
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"rate must lie in [0, 1), got {rate}")
    if rate == 0.0:
        return panel
    rng = np.random.Generator(np.random.PCG64(seed))
    mask = panel.mask.copy()
    for j in range(panel.n_stocks):
        while True:
            col = panel.mask[:, j] & (rng.random(panel.n_months) >= rate)
            if col.any():
                break
        mask[:, j] = col
    return ReturnPanel(panel.start, panel.stocks, panel.values, mask)

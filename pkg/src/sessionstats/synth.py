"""Seeded synthetic data with known ground truth.

All generators draw from ``numpy.random.default_rng(seed)`` (PCG64), so a
(kind, parameters, seed) triple always reproduces the same output.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from datetime import date, timedelta

import numpy as np

from .market_data import PriceBar, PriceSeries

PRNG_NAME = "numpy.random.PCG64"
GENERATOR_KINDS = ("pareto", "exponential", "cutoff", "long_memory", "correlated_pair", "ohlc_stock")


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    seed: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")

    def to_json(self) -> str:
        return json.dumps({**asdict(self), "prng": PRNG_NAME}, sort_keys=True, indent=2)

    def generate(self):
        fn = {
            "pareto": gen_pareto,
            "exponential": gen_exponential,
            "cutoff": gen_cutoff,
            "long_memory": gen_long_memory,
            "correlated_pair": gen_correlated_pair,
            "ohlc_stock": gen_ohlc_stock,
        }[self.kind]
        return fn(seed=self.seed, **self.params)


def _check_n(n: int) -> None:
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")


def gen_pareto(n: int, zeta: float, x_min: float, seed: int) -> np.ndarray:
    """Inverse-transform Pareto sample with survival (x / x_min) ** -zeta."""
    _check_n(n)
    if not (zeta > 0 and x_min > 0):
        raise ValueError("zeta and x_min must be positive")
    u = 1.0 - np.random.default_rng(seed).random(n)  # (0, 1]
    return x_min * u ** (-1.0 / zeta)


def gen_exponential(n: int, x_star: float, x_min: float, seed: int) -> np.ndarray:
    """Shifted exponential: x_min plus an exponential excess of mean x_star."""
    _check_n(n)
    if not (x_star > 0 and x_min > 0):
        raise ValueError("x_star and x_min must be positive")
    return x_min + np.random.default_rng(seed).exponential(x_star, n)


def cutoff_survival(x, zeta: float, x_star: float, x_min: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return (x / x_min) ** -zeta * np.exp(-(x - x_min) / x_star)


def gen_cutoff(n: int, zeta: float, x_star: float, x_min: float, seed: int, xtol: float = 1e-12) -> np.ndarray:
    """Power law with exponential cutoff, drawn by bisection on S(x) = u."""
    _check_n(n)
    if not (zeta >= 0 and x_star > 0 and x_min > 0):
        raise ValueError("need zeta >= 0, x_star > 0, x_min > 0")
    u = 1.0 - np.random.default_rng(seed).random(n)
    lo = np.full(n, float(x_min))
    # S is below both the pure exponential and (for zeta > 0) the pure power-law
    # survival, so their inverses bracket the root
    hi = x_min - x_star * np.log(u)
    if zeta > 0:
        hi = np.minimum(hi, x_min * u ** (-1.0 / zeta))
    hi = np.maximum(hi, lo)
    while np.max(hi - lo) > xtol:
        mid = 0.5 * (lo + hi)
        above = cutoff_survival(mid, zeta, x_star, x_min) > u
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
        if np.all(mid == lo) and np.all(mid == hi):
            break
    return 0.5 * (lo + hi)


def gen_long_memory(n: int, alpha: float, seed: int) -> np.ndarray:
    """Zero-mean, unit-variance Gaussian series with DFA exponent near ``alpha``.

    Fourier filtering: a white-noise spectrum is multiplied by f ** (-beta / 2),
    beta = 2 * alpha - 1, and transformed back. The series is generated at the
    next power of two (at least 1024) and truncated to ``n``.
    """
    _check_n(n)
    if not 0.05 < alpha < 0.95:
        raise ValueError(f"alpha must lie in (0.05, 0.95), got {alpha}")
    size = max(1024, 1 << (n - 1).bit_length())
    beta = 2.0 * alpha - 1.0
    rng = np.random.default_rng(seed)
    spec = np.fft.rfft(rng.standard_normal(size))
    freqs = np.fft.rfftfreq(size)
    filt = np.zeros_like(freqs)
    filt[1:] = freqs[1:] ** (-beta / 2.0)
    x = np.fft.irfft(spec * filt, n=size)[:n]
    x = x - x.mean()
    sd = x.std()
    return x / sd if sd > 0 else x


def gen_correlated_pair(n: int, rho: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    _check_n(n)
    if not -1.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [-1, 1], got {rho}")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    z = rng.standard_normal(n)
    return x, rho * x + math.sqrt(1.0 - rho * rho) * z


def business_days(start: date, n: int) -> list[date]:
    out = []
    d = start
    while len(out) < n:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out


def gen_ohlc_stock(
    n_days: int,
    price_0: float = 50.0,
    vol_daytime: float = 0.015,
    vol_overnight: float = 0.008,
    rho_nd: float = -0.1,
    seed: int = 0,
    ticker: str = "SYN",
    start: date = date(1988, 1, 4),
    tail_zeta: float | None = None,
    memory_alpha: float | None = None,
    memory_strength: float = 0.3,
    memory_white: float = 0.0,
) -> PriceSeries:
    """Synthetic daily open/close series with controlled session returns.

    Each day (r_N, r_D) is bivariate Gaussian with the given standard
    deviations and correlation; open = previous close * exp(r_N) and
    close = open * exp(r_D). Dates are consecutive weekdays from ``start``.

    ``tail_zeta`` multiplies both draws of a day by a common Pareto amplitude
    (normalised to unit mean square when tail_zeta > 2), giving volatility
    tails with exponent tail_zeta while leaving the session correlation
    intact. ``memory_alpha`` multiplies both draws by a positive amplitude
    1 + memory_strength * g(t), with g a long-memory series of that DFA
    exponent, optionally blended with white noise of weight
    ``memory_white`` to produce a short-scale/long-scale crossover.
    Signs stay independent, so returns remain uncorrelated while
    volatilities carry the memory.
    """
    if n_days < 1:
        raise ValueError("n_days must be at least 1")
    if vol_daytime < 0 or vol_overnight < 0:
        raise ValueError("volatilities must be non-negative")
    if not -1.0 <= rho_nd <= 1.0:
        raise ValueError("rho_nd must lie in [-1, 1]")
    if not price_0 > 0:
        raise ValueError("price_0 must be positive")
    if tail_zeta is not None and not tail_zeta > 0:
        raise ValueError("tail_zeta must be positive")

    rng = np.random.default_rng(seed)
    n = n_days - 1
    z1 = rng.standard_normal(n)
    z2 = rng.standard_normal(n)
    amp = np.ones(n)
    if tail_zeta is not None:
        a = (1.0 - rng.random(n)) ** (-1.0 / tail_zeta)
        if tail_zeta > 2:
            a /= math.sqrt(tail_zeta / (tail_zeta - 2.0))
        amp *= a
    if memory_alpha is not None and n > 0:
        sub = int(rng.integers(0, 2**63 - 1))
        g = gen_long_memory(n, memory_alpha, sub)
        if memory_white > 0:
            w = rng.standard_normal(n)
            g = math.sqrt(1.0 - memory_white) * g + math.sqrt(memory_white) * w
        amp *= np.maximum(1.0 + memory_strength * g, 0.05)
    r_n = vol_overnight * z1 * amp
    r_d = vol_daytime * (rho_nd * z1 + math.sqrt(1.0 - rho_nd * rho_nd) * z2) * amp

    log_close = np.concatenate([[0.0], np.cumsum(r_n + r_d)])
    log_open = np.concatenate([[0.0], log_close[:-1] + r_n])
    opens = price_0 * np.exp(log_open)
    closes = price_0 * np.exp(log_close)
    days = business_days(start, n_days)
    bars = tuple(PriceBar(d, float(o), float(c)) for d, o, c in zip(days, opens, closes))
    return PriceSeries(ticker, bars)


def gen_cohort(
    n_stocks: int,
    n_days: int,
    seed: int,
    **params,
) -> list[PriceSeries]:
    """``n_stocks`` independent synthetic stocks, tickers S0000.. with child seeds."""
    children = np.random.SeedSequence(seed).spawn(n_stocks)
    return [
        gen_ohlc_stock(n_days, seed=int(c.generate_state(1, dtype=np.uint64)[0]), ticker=f"S{i:04d}", **params)
        for i, c in enumerate(children)
    ]

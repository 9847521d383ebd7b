"""Pearson and lagged cross-correlations, significance and cohort summaries.

All moments are population (1/n) moments. Lagged coefficients are computed
on the overlapping part of the two sequences with means and deviations
recomputed there, so every C_dt is itself a Pearson coefficient.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateError, InsufficientDataError
from .returns import SessionReturns

PAIRS: tuple[tuple[str, str], ...] = (("total", "overnight"), ("total", "daytime"), ("overnight", "daytime"))
YEAR_FLOOR = 50
SIGNIFICANCE_RATIO = 3.0


def pair_name(pair: tuple[str, str]) -> str:
    return f"{pair[0]}-{pair[1]}"


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 3:
        raise InsufficientDataError(f"pearson needs at least 3 pairs, got {x.size}")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = math.sqrt(np.mean(dx * dx))
    sy = math.sqrt(np.mean(dy * dy))
    if sx == 0.0 or sy == 0.0:
        raise DegenerateError("zero variance input")
    c = float(np.mean(dx * dy) / (sx * sy))
    return max(-1.0, min(1.0, c))


def _lag_slices(n: int, lag: int) -> tuple[slice, slice]:
    # pairs x(t) with y(t + lag)
    if lag >= 0:
        return slice(0, n - lag), slice(lag, n)
    return slice(-lag, n), slice(0, n + lag)


@dataclass(frozen=True)
class LagCorrelogram:
    lags: np.ndarray
    values: np.ndarray
    n_overlap: int

    @property
    def max_lag(self) -> int:
        return int(self.lags[-1])

    @property
    def c_zero(self) -> float:
        return float(self.values[self.max_lag])

    @property
    def noise_sigma(self) -> float:
        off = np.delete(self.values, self.max_lag)
        return float(off.std()) if off.size else 0.0

    @property
    def peak_lag(self) -> int:
        return int(self.lags[np.argmax(np.abs(self.values))])

    def to_record(self) -> dict:
        return {
            "lags": self.lags.tolist(),
            "values": self.values.tolist(),
            "c_zero": self.c_zero,
            "noise_sigma": self.noise_sigma,
            "n_overlap": self.n_overlap,
            "peak_lag": self.peak_lag,
        }


def lagged_xcorr(x, y, max_lag: int = 20) -> LagCorrelogram:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if max_lag < 0:
        raise ValueError("max_lag must be non-negative")
    if x.size <= 2 * max_lag + 10:
        raise InsufficientDataError(f"length {x.size} too short for lags up to {max_lag}")
    lags = np.arange(-max_lag, max_lag + 1)
    values = np.empty(lags.size)
    for i, lag in enumerate(lags):
        sx, sy = _lag_slices(x.size, int(lag))
        values[i] = pearson(x[sx], y[sy])
    return LagCorrelogram(lags, values, x.size)


def significance_ratio(correlogram: LagCorrelogram, threshold: float = SIGNIFICANCE_RATIO) -> tuple[float, bool]:
    """|C(0)| over the spread of the off-zero lags, and whether it exceeds ``threshold``."""
    sigma = correlogram.noise_sigma
    if sigma == 0.0:
        raise DegenerateError("off-zero correlations have zero spread")
    ratio = abs(correlogram.c_zero) / sigma
    return ratio, bool(ratio > threshold)


@dataclass
class PairResult:
    pair: tuple[str, str]
    correlogram: LagCorrelogram
    ratio: float
    significant: bool

    def to_record(self) -> dict:
        return {"pair": pair_name(self.pair), **self.correlogram.to_record(),
                "significance_ratio": self.ratio, "significant": self.significant}


def return_pair_analysis(
    returns: SessionReturns, max_lag: int = 20, exclude_gaps: bool = False, threshold: float = SIGNIFICANCE_RATIO
) -> dict[str, PairResult]:
    """Correlograms for (total, overnight), (total, daytime), (overnight, daytime)."""
    if exclude_gaps:
        returns = returns.without_gaps()
    if len(returns) <= 50:
        raise InsufficientDataError(f"{returns.ticker}: need more than 50 returns, got {len(returns)}")
    out = {}
    for pair in PAIRS:
        cg = lagged_xcorr(returns.get(pair[0]), returns.get(pair[1]), max_lag)
        try:
            ratio, sig = significance_ratio(cg, threshold)
        except DegenerateError:
            ratio, sig = math.nan, False
        out[pair_name(pair)] = PairResult(pair, cg, ratio, sig)
    return out


@dataclass
class YearlyCorrelation:
    pair: tuple[str, str]
    years: list[int]
    values: list[float]
    counts: list[int]
    omitted: list[int] = field(default_factory=list)

    def to_record(self) -> dict:
        return {"pair": pair_name(self.pair), "years": self.years, "C": self.values,
                "n": self.counts, "omitted_years": self.omitted}


def yearly_xcorr(returns: SessionReturns, pair: tuple[str, str], floor: int = YEAR_FLOOR) -> YearlyCorrelation:
    """Pearson coefficient per calendar year; years with fewer than ``floor`` days are omitted."""
    x = returns.get(pair[0])
    y = returns.get(pair[1])
    by_year: dict[int, list[int]] = defaultdict(list)
    for i, d in enumerate(returns.dates):
        by_year[d.year].append(i)
    years, values, counts, omitted = [], [], [], []
    for year in sorted(by_year):
        idx = by_year[year]
        if len(idx) < floor:
            omitted.append(year)
            continue
        try:
            c = pearson(x[idx], y[idx])
        except DegenerateError:
            omitted.append(year)
            continue
        years.append(year)
        values.append(c)
        counts.append(len(idx))
    if not years:
        raise InsufficientDataError(f"{returns.ticker}: no calendar year with at least {floor} days")
    return YearlyCorrelation(pair, years, values, counts, omitted)


def split_contiguous(n: int, k: int) -> list[slice]:
    """k contiguous slices of near-equal size; the first n % k get one extra."""
    base, extra = divmod(n, k)
    out, start = [], 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        out.append(slice(start, start + size))
        start += size
    return out


@dataclass
class CohortSummary:
    """Per-subset (or per-bin) statistics of one cohort measure.

    For subset summaries ``means`` holds the per-subset coefficients and
    ``mean``/``std`` summarise them; for binned summaries ``means``/``stds``
    are per bin.
    """

    measure: str
    means: list[float]
    stds: list[float]
    counts: list[int]
    mean: float | None = None
    std: float | None = None
    shuffled: float | None = None
    seed: int | None = None
    edges: list[float] | None = None
    centers: list[float] | None = None
    merged: list[bool] | None = None

    @property
    def subset_count(self) -> int:
        return len(self.counts)

    def to_record(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


def cohort_alpha_xcorr(alpha_a, alpha_b, subsets: int = 10, seed: int = 0, measure: str = "alpha") -> CohortSummary:
    """Per-subset Pearson between two per-stock vectors in the same stock order.

    The shuffled baseline is the Pearson coefficient of the full vectors
    after permuting ``alpha_b`` with ``seed``.
    """
    a = np.asarray(alpha_a, dtype=float)
    b = np.asarray(alpha_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("alpha vectors differ in length")
    if a.size < 2 * subsets:
        raise InsufficientDataError(f"{a.size} stocks, need at least {2 * subsets} for {subsets} subsets")
    cs, counts = [], []
    for sl in split_contiguous(a.size, subsets):
        aa, bb = a[sl], b[sl]
        if aa.size < 3:
            raise InsufficientDataError(f"subset of {aa.size} stocks is too small for a correlation")
        cs.append(pearson(aa, bb))
        counts.append(int(aa.size))
    perm = np.random.default_rng(seed).permutation(b.size)
    shuffled = pearson(a, b[perm])
    arr = np.array(cs)
    return CohortSummary(measure, cs, [], counts, float(arr.mean()), float(arr.std()),
                         shuffled, seed)


def bin_tendency(x, y, bins: int = 8, min_count: int = 5, measure: str = "binned") -> CohortSummary:
    """Mean and std of y in equal-width bins of x.

    Bins with fewer than ``min_count`` points are merged into a neighbour
    (the next bin, or the previous one at the right edge) and flagged.
    Empty bins disappear.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size == 0 or x.size != y.size:
        raise ValueError("need equal-length, non-empty x and y")
    if bins < 1:
        raise ValueError("bins must be at least 1")
    lo, hi = float(x.min()), float(x.max())
    edges = np.linspace(lo, hi, bins + 1) if hi > lo else np.array([lo, lo])
    idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, max(bins - 1, 0)) if hi > lo else np.zeros(x.size, int)
    groups = [[int(i), float(edges[i]), float(edges[i + 1]), list(np.flatnonzero(idx == i)), False]
              for i in range(len(edges) - 1)]
    groups = [g for g in groups if g[3]]
    i = 0
    while i < len(groups) and len(groups) > 1:
        if len(groups[i][3]) >= min_count:
            i += 1
            continue
        j = i + 1 if i + 1 < len(groups) else i - 1
        a, b = sorted((i, j))
        merged = [groups[a][0], groups[a][1], groups[b][2], groups[a][3] + groups[b][3], True]
        groups[a:b + 1] = [merged]
        i = a
    out_edges = [g[1] for g in groups] + [groups[-1][2]]
    means = [float(y[g[3]].mean()) for g in groups]
    stds = [float(y[g[3]].std()) for g in groups]
    centers = [float(x[g[3]].mean()) for g in groups]
    return CohortSummary(measure, means, stds, [len(g[3]) for g in groups], edges=out_edges,
                         centers=centers, merged=[g[4] for g in groups])

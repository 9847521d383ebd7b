"""Total, overnight and daytime log returns and their volatilities."""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from datetime import date
from typing import Literal

import numpy as np

from .errors import InsufficientDataError
from .market_data import PriceSeries

Kind = Literal["total", "overnight", "daytime"]
KINDS: tuple[Kind, ...] = ("total", "overnight", "daytime")


@dataclass(frozen=True)
class SessionReturns:
    """Aligned return sequences; entry ``t`` covers bar ``t`` of the source vs bar ``t-1``.

    ``gap_flags[t]`` is set when a row was skipped at ingestion between the
    two bars, so the return spans a missing trading record.
    """

    ticker: str
    dates: tuple[date, ...]
    r_total: np.ndarray
    r_overnight: np.ndarray
    r_daytime: np.ndarray
    gap_flags: np.ndarray

    def __len__(self) -> int:
        return len(self.dates)

    def get(self, kind: Kind) -> np.ndarray:
        return {"total": self.r_total, "overnight": self.r_overnight, "daytime": self.r_daytime}[kind]

    def without_gaps(self) -> "SessionReturns":
        keep = ~self.gap_flags
        return SessionReturns(
            self.ticker,
            tuple(d for d, k in zip(self.dates, keep) if k),
            self.r_total[keep],
            self.r_overnight[keep],
            self.r_daytime[keep],
            self.gap_flags[keep],
        )


@dataclass(frozen=True)
class VolatilitySeries:
    values: np.ndarray
    kind: Kind

    def __len__(self) -> int:
        return len(self.values)


def compute_returns(series: PriceSeries) -> SessionReturns:
    """Log returns from a split-adjusted series.

    overnight = ln(open_t / close_{t-1}), daytime = ln(close_t / open_t),
    total = ln(close_t / close_{t-1}).
    """
    if len(series) < 2:
        raise InsufficientDataError(f"{series.ticker}: need at least 2 bars, got {len(series)}")
    op = np.asarray(series.opens, dtype=float)
    cl = np.asarray(series.closes, dtype=float)
    r_overnight = np.log(op[1:] / cl[:-1])
    r_daytime = np.log(cl[1:] / op[1:])
    r_total = np.log(cl[1:] / cl[:-1])

    dates = series.dates
    dropped = series.dropped_dates
    gaps = np.zeros(len(dates) - 1, dtype=bool)
    if dropped:
        for i in range(1, len(dates)):
            j = bisect.bisect_right(dropped, dates[i - 1])
            gaps[i - 1] = j < len(dropped) and dropped[j] < dates[i]
    return SessionReturns(series.ticker, tuple(dates[1:]), r_total, r_overnight, r_daytime, gaps)


def volatility(returns, kind: Kind = "total") -> VolatilitySeries:
    """Absolute value of a return sequence."""
    if isinstance(returns, VolatilitySeries):
        return VolatilitySeries(np.abs(returns.values), returns.kind)
    return VolatilitySeries(np.abs(np.asarray(returns, dtype=float)), kind)

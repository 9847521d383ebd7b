"""Overnight/daytime return decomposition and its statistics.

Daily returns are split into an overnight (close to open) and a daytime
(open to close) session. The package fits volatility tails, measures
long-range memory with DFA and cross-correlates the three return series,
per stock and over cohorts.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AnalysisError,
    ConvergenceError,
    DataFormatError,
    DegenerateError,
    DuplicateRowError,
    InsufficientDataError,
)
from .market_data import PriceBar, PriceSeries, apply_split_adjustment, filter_date_range, parse_price_csv  # noqa: E402
from .returns import SessionReturns, VolatilitySeries, compute_returns, volatility  # noqa: E402

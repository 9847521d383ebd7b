"""Detrended fluctuation analysis.

The series is integrated into a profile, cut into non-overlapping boxes of
``scale`` points (from the start and again from the end, so the remainder
is not lost on one side), a least-squares polynomial of degree ``order`` is
removed from every box, and F(scale) is the RMS of what remains. The
correlation exponent alpha is the log-log slope of F against scale.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DegenerateError, InsufficientDataError
from .returns import KINDS, SessionReturns

log = logging.getLogger(__name__)

MIN_SERIES = 100
DEFAULT_POINTS = 30


@dataclass(frozen=True)
class DfaCurve:
    scales: np.ndarray
    fluctuations: np.ndarray
    detrend_order: int
    series_length: int

    def __len__(self) -> int:
        return len(self.scales)


@dataclass
class RegimeFit:
    alpha: float
    residual: float
    l_min: float
    l_max: float
    n_points: int


@dataclass
class DfaExponents:
    alpha_single: float | None = None
    alpha_short: float | None = None
    alpha_long: float | None = None
    crossover_scale: float | None = None
    fit_residuals: dict[str, float] = field(default_factory=dict)
    regimes: dict[str, RegimeFit] = field(default_factory=dict)
    warning: str | None = None

    @property
    def two_regime(self) -> bool:
        return self.alpha_short is not None and self.alpha_long is not None

    def to_records(self, ticker: str, kind: str) -> list[dict]:
        out = []
        for regime, fit in self.regimes.items():
            rec = {
                "ticker": ticker,
                "kind": kind,
                "regime": regime,
                "alpha": fit.alpha,
                "residual": fit.residual,
                "l_min": fit.l_min,
                "l_max": fit.l_max,
            }
            if regime != "single":
                rec["crossover"] = self.crossover_scale
            if self.warning:
                rec["warning"] = self.warning
            out.append(rec)
        return out


def profile(series) -> np.ndarray:
    """Cumulative sum of the mean-centred series."""
    x = np.asarray(series, dtype=float)
    if x.size < 4:
        raise InsufficientDataError(f"profile needs at least 4 points, got {x.size}")
    return np.cumsum(x - x.mean())


@lru_cache(maxsize=512)
def _detrend_basis(scale: int, order: int) -> np.ndarray:
    # orthonormal basis of degree-<=order polynomials sampled on the box
    t = np.linspace(-1.0, 1.0, scale)
    q, _ = np.linalg.qr(np.vander(t, order + 1, increasing=True))
    q.flags.writeable = False
    return q


def fluctuation_at_scale(prof, scale: int, order: int = 1) -> float:
    y = np.asarray(prof, dtype=float)
    n = y.size
    if scale < order + 2 or scale > n // 4:
        raise ValueError(f"scale {scale} outside [{order + 2}, {n // 4}] for length {n}")
    k = n // scale
    boxes = np.concatenate([y[: k * scale].reshape(k, scale), y[n - k * scale:].reshape(k, scale)])
    q = _detrend_basis(scale, order)
    resid = boxes - (boxes @ q) @ q.T
    return float(math.sqrt(np.mean(resid * resid)))


def scale_grid(n: int, order: int = 1, points: int = DEFAULT_POINTS) -> np.ndarray:
    lo = max(2 * (order + 2), 6)
    hi = n // 4
    if hi < lo:
        raise InsufficientDataError(f"series of length {n} too short for DFA scales >= {lo}")
    grid = np.unique(np.round(np.logspace(math.log10(lo), math.log10(hi), points)).astype(int))
    return grid[(grid >= lo) & (grid <= hi)]


def dfa_curve(series, order: int = 1, points: int = DEFAULT_POINTS) -> DfaCurve:
    x = np.asarray(series, dtype=float)
    if x.size < MIN_SERIES:
        raise InsufficientDataError(f"DFA needs at least {MIN_SERIES} points, got {x.size}")
    if not 1 <= order <= 4:
        raise ValueError(f"detrend order must be 1..4, got {order}")
    prof = profile(x)
    scales = scale_grid(x.size, order, points)
    f = np.array([fluctuation_at_scale(prof, int(s), order) for s in scales])
    return DfaCurve(scales, f, order, x.size)


def fit_alpha(curve: DfaCurve, lo: float | None = None, hi: float | None = None) -> RegimeFit:
    """OLS slope of log10 F on log10 scale over ``lo <= scale <= hi``."""
    s = np.asarray(curve.scales, dtype=float)
    f = np.asarray(curve.fluctuations, dtype=float)
    mask = np.ones(s.size, dtype=bool)
    if lo is not None:
        mask &= s >= lo
    if hi is not None:
        mask &= s <= hi
    if mask.sum() < 4:
        raise InsufficientDataError(f"{int(mask.sum())} curve points in range, need at least 4")
    if np.any(f[mask] <= 0):
        raise DegenerateError("zero fluctuation in fit range (polynomial or constant signal)")
    lx, ly = np.log10(s[mask]), np.log10(f[mask])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return RegimeFit(float(slope), float(np.sqrt(np.mean(resid**2))), float(s[mask][0]), float(s[mask][-1]), int(mask.sum()))


def two_regime_fit(curve: DfaCurve) -> DfaExponents:
    """Separate fits below and above the geometric midpoint of the scale range."""
    s = np.asarray(curve.scales, dtype=float)
    if s.size < 8:
        raise InsufficientDataError(f"two-regime fit needs at least 8 curve points, got {s.size}")
    split = math.sqrt(s[0] * s[-1])
    n_short = int(np.sum(s <= split))
    n_long = int(np.sum(s > split))
    if n_short < 4 or n_long < 4:
        single = fit_alpha(curve)
        msg = f"only {n_short}/{n_long} points per regime; fell back to single-regime fit"
        log.warning(msg)
        return DfaExponents(alpha_single=single.alpha, fit_residuals={"single": single.residual},
                            regimes={"single": single}, warning=msg)
    short = fit_alpha(curve, hi=split)
    long = fit_alpha(curve, lo=np.nextafter(split, np.inf))
    return DfaExponents(
        alpha_short=short.alpha,
        alpha_long=long.alpha,
        crossover_scale=float(split),
        fit_residuals={"short": short.residual, "long": long.residual},
        regimes={"short": short, "long": long},
    )


def single_regime_fit(curve: DfaCurve) -> DfaExponents:
    fit = fit_alpha(curve)
    return DfaExponents(alpha_single=fit.alpha, fit_residuals={"single": fit.residual}, regimes={"single": fit})


@dataclass
class StockDfa:
    """Per-kind exponents: single regime for returns, two regimes for volatilities."""

    returns: dict[str, DfaExponents | None]
    volatility: dict[str, DfaExponents | None]
    curves: dict[str, DfaCurve] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)


def analyze_stock_dfa(returns: SessionReturns, order: int = 1, points: int = DEFAULT_POINTS) -> StockDfa:
    if len(returns) < MIN_SERIES:
        raise InsufficientDataError(f"{returns.ticker}: DFA needs {MIN_SERIES} returns, got {len(returns)}")
    out = StockDfa({}, {})
    for kind in KINDS:
        r = returns.get(kind)
        for label, series, fitter, target in (
            (f"return_{kind}", r, single_regime_fit, out.returns),
            (f"volatility_{kind}", np.abs(r), two_regime_fit, out.volatility),
        ):
            try:
                curve = dfa_curve(series, order, points)
                out.curves[label] = curve
                target[kind] = fitter(curve)
            except (DegenerateError, InsufficientDataError) as exc:
                target[kind] = None
                out.errors[label] = f"{type(exc).__name__}: {exc}"
    return out

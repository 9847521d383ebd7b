"""Upper-tail fitting of volatility samples.

Three families are fitted on the same tail sample, all through their
survival function S(x) = P(X > x) on x >= x_min:

* power law            S(x) = (x / x_min) ** -zeta
* exponential          S(x) = exp(-(x - x_min) / x_star)
* power law w/ cutoff  S(x) = (x / x_min) ** -zeta * exp(-(x - x_min) / x_star)

Goodness of fit is the two-sided Kolmogorov-Smirnov distance against the
empirical tail distribution, compared with the asymptotic critical value
``coefficient / sqrt(n_tail)``. Parameters are estimated from the same
sample, so verdicts are anticonservative; records carry ``ASYMPTOTIC_NOTE``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from scipy.optimize import minimize

from .errors import ConvergenceError, DegenerateError, InsufficientDataError

Family = Literal["power_law", "exponential", "power_law_cutoff"]
FAMILIES: tuple[Family, ...] = ("power_law", "exponential", "power_law_cutoff")

MIN_TAIL = 10
# asymptotic two-sided KS coefficients, CV = c / sqrt(n)
KS_COEFFICIENTS = {0.01: 1.63}
ASYMPTOTIC_NOTE = "asymptotic CV, parameters estimated from the tested sample"

CUTOFF_FATOL = 1e-9
CUTOFF_MAXITER = 500


@dataclass(frozen=True)
class TailSample:
    values: np.ndarray  # descending
    x_min: float
    source_kind: str = "total"

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float))[::-1]
        object.__setattr__(self, "values", v)
        if not self.x_min > 0:
            raise ValueError(f"x_min must be positive, got {self.x_min}")
        if len(v) and v[-1] < self.x_min:
            raise ValueError(f"tail value {v[-1]} below x_min {self.x_min}")

    @property
    def n(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class TailFit:
    family: Family
    x_min: float
    n_tail: int
    zeta: float | None
    x_star: float | None  # math.inf when the cutoff is pushed to the boundary
    ks_d: float
    cv: float
    accepted: bool
    log_likelihood: float
    significance: float = 0.01

    def survival(self, x) -> np.ndarray:
        return _survival(self.family, self.x_min, self.zeta, self.x_star)(x)

    def to_record(self, ticker: str, kind: str) -> dict:
        x_star = self.x_star
        return {
            "ticker": ticker,
            "kind": kind,
            "family": self.family,
            "zeta": self.zeta,
            "x_star": None if x_star is None or math.isinf(x_star) else x_star,
            "x_min": self.x_min,
            "n_tail": self.n_tail,
            "D": self.ks_d,
            "CV": self.cv,
            "accepted": self.accepted,
            "logL": self.log_likelihood,
            "note": ASYMPTOTIC_NOTE,
        }


def _survival(family: str, x_min: float, zeta: float | None, x_star: float | None) -> Callable:
    rate = 0.0 if x_star is None or math.isinf(x_star) else 1.0 / x_star
    if family == "power_law":
        return lambda x: (np.asarray(x, dtype=float) / x_min) ** -zeta
    if family == "exponential":
        return lambda x: np.exp(-(np.asarray(x, dtype=float) - x_min) * rate)
    if family == "power_law_cutoff":
        return lambda x: (np.asarray(x, dtype=float) / x_min) ** -zeta * np.exp(
            -(np.asarray(x, dtype=float) - x_min) * rate
        )
    raise ValueError(f"unknown family {family!r}")


def select_tail(
    values,
    q: float | None = 0.10,
    x_min: float | None = None,
    kind: str = "total",
    min_size: int = MIN_TAIL,
) -> TailSample:
    """Cut the upper tail of a volatility sample.

    With ``x_min`` given, the tail is every value >= x_min. Otherwise zeros
    are discarded and x_min is the ceil(q * n)-th largest remaining value.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise InsufficientDataError("empty volatility sample")
    if x_min is not None:
        if not x_min > 0:
            raise ValueError(f"x_min must be positive, got {x_min}")
        tail = v[v >= x_min]
    else:
        if q is None or not 0 < q <= 1:
            raise ValueError(f"tail fraction must lie in (0, 1], got {q}")
        pos = np.sort(v[v > 0])[::-1]
        if pos.size == 0:
            raise InsufficientDataError("no positive values to form a tail")
        x_min = float(pos[math.ceil(q * pos.size) - 1])
        tail = pos[pos >= x_min]
    if tail.size < min_size:
        raise InsufficientDataError(f"tail has {tail.size} points, need at least {min_size}")
    return TailSample(tail, float(x_min), kind)


def ks_statistic(tail: TailSample, fitted_survival: Callable) -> float:
    """Two-sided KS distance between the tail's empirical CDF and 1 - S.

    Each sorted point is compared against both edges of the empirical step;
    the model's left limit is used on the lower edge so step-function models
    are handled exactly.
    """
    x = np.sort(tail.values)
    n = x.size
    if n == 0:
        return 0.0
    cdf = 1.0 - np.asarray(fitted_survival(x), dtype=float)
    cdf_left = 1.0 - np.asarray(fitted_survival(np.nextafter(x, -np.inf)), dtype=float)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - cdf)
    d_minus = np.max(cdf_left - (i - 1) / n)
    return float(min(1.0, max(d_plus, d_minus, 0.0)))


def ks_verdict(d: float, n: int, significance: float = 0.01, coefficient: float | None = None) -> tuple[float, bool]:
    """Critical value c / sqrt(n) and whether D stays below it."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if coefficient is None:
        if significance not in KS_COEFFICIENTS:
            raise ValueError(
                f"no built-in KS coefficient for significance {significance}; pass coefficient="
            )
        coefficient = KS_COEFFICIENTS[significance]
    cv = coefficient / math.sqrt(n)
    return cv, bool(d <= cv)


def _check_tail(tail: TailSample, min_size: int) -> None:
    if tail.n < min_size:
        raise InsufficientDataError(f"tail has {tail.n} points, need at least {min_size}")


def _finish(tail, family, zeta, x_star, loglik, significance, coefficient) -> TailFit:
    d = ks_statistic(tail, _survival(family, tail.x_min, zeta, x_star))
    cv, ok = ks_verdict(d, tail.n, significance, coefficient)
    return TailFit(family, tail.x_min, tail.n, zeta, x_star, d, cv, ok, float(loglik), significance)


def hill_exponent(values, x_min: float) -> float:
    logs = np.log(np.asarray(values, dtype=float) / x_min)
    if np.any(logs < 0):
        raise ValueError("values below x_min")
    total = logs.sum()
    if total <= 0:
        raise DegenerateError("all tail values equal x_min; exponent undefined")
    return float(logs.size / total)


def power_law_loglik(values, x_min: float, zeta: float) -> float:
    x = np.asarray(values, dtype=float)
    return float(np.sum(np.log(zeta / x_min) - (zeta + 1.0) * np.log(x / x_min)))


def fit_power_law(
    tail: TailSample, significance: float = 0.01, coefficient: float | None = None, min_size: int = MIN_TAIL
) -> TailFit:
    """Hill (maximum likelihood) exponent for a Pareto tail above x_min."""
    _check_tail(tail, min_size)
    zeta = hill_exponent(tail.values, tail.x_min)
    return _finish(tail, "power_law", zeta, None, power_law_loglik(tail.values, tail.x_min, zeta),
                   significance, coefficient)


def fit_exponential(
    tail: TailSample, significance: float = 0.01, coefficient: float | None = None, min_size: int = MIN_TAIL
) -> TailFit:
    _check_tail(tail, min_size)
    excess = tail.values - tail.x_min
    x_star = float(excess.mean())
    if x_star <= 0:
        raise DegenerateError("all tail values equal x_min; characteristic scale is zero")
    loglik = -tail.n * math.log(x_star) - excess.sum() / x_star
    return _finish(tail, "exponential", None, x_star, loglik, significance, coefficient)


def cutoff_loglik(values, x_min: float, zeta: float, rate: float) -> float:
    """Log-likelihood of the cutoff family; ``rate`` is 1 / x_star."""
    x = np.asarray(values, dtype=float)
    hazard = zeta / x + rate
    if np.any(hazard <= 0):
        return -math.inf
    return float(np.sum(-zeta * np.log(x / x_min) - rate * (x - x_min) + np.log(hazard)))


def fit_power_law_cutoff(
    tail: TailSample,
    significance: float = 0.01,
    coefficient: float | None = None,
    min_size: int = MIN_TAIL,
    fatol: float = CUTOFF_FATOL,
    maxiter: int = CUTOFF_MAXITER,
) -> TailFit:
    """Maximum likelihood (zeta, x_star) for the power law with exponential cutoff.

    Nelder-Mead on (u, v) with zeta = u**2 and x_min / x_star = v**2, which
    keeps both parameters non-negative without clipping the simplex. The
    simplex starts from the Hill exponent and the exponential scale and stops
    when the spread of log-likelihoods across its vertices is below ``fatol``.
    """
    _check_tail(tail, min_size)
    x, x_min = tail.values, tail.x_min
    zeta0 = hill_exponent(x, x_min)
    xstar0 = float(np.mean(x - x_min))
    mu0 = x_min / xstar0 if xstar0 > 0 else 1.0

    def objective(p):
        ll = cutoff_loglik(x, x_min, p[0] ** 2, p[1] ** 2 / x_min)
        return -ll if math.isfinite(ll) else math.inf

    p0 = np.sqrt([zeta0, mu0])
    simplex = np.array([p0, p0 + [0.05 * p0[0], 0.0], p0 + [0.0, max(0.05 * p0[1], 0.05)]])
    res = minimize(
        objective,
        p0,
        method="Nelder-Mead",
        options={"xatol": np.inf, "fatol": fatol, "maxiter": maxiter, "initial_simplex": simplex},
    )
    zeta = float(res.x[0] ** 2)
    rate = float(res.x[1] ** 2 / x_min)
    x_star = math.inf if rate == 0.0 else 1.0 / rate
    if res.status != 0:
        raise ConvergenceError(
            f"cutoff fit did not converge in {maxiter} iterations",
            best_point=(zeta, x_star),
            best_value=-float(res.fun),
        )
    return _finish(tail, "power_law_cutoff", zeta, x_star, -float(res.fun), significance, coefficient)


FITTERS = {
    "power_law": fit_power_law,
    "exponential": fit_exponential,
    "power_law_cutoff": fit_power_law_cutoff,
}


@dataclass
class FamilyComparison:
    tail: TailSample
    fits: dict[str, TailFit | None]
    errors: dict[str, str] = field(default_factory=dict)

    @property
    def accepted(self) -> dict[str, bool]:
        return {f: bool(fit is not None and fit.accepted) for f, fit in self.fits.items()}

    @property
    def best(self) -> str | None:
        ok = [fit for fit in self.fits.values() if fit is not None and fit.accepted]
        return min(ok, key=lambda f: f.ks_d).family if ok else None


def compare_families(tail: TailSample, significance: float = 0.01, coefficient: float | None = None) -> FamilyComparison:
    """Fit all three families on one shared tail sample.

    A failing family is recorded as ``None`` with its error message; the
    other two are still fitted.
    """
    fits: dict[str, TailFit | None] = {}
    errors: dict[str, str] = {}
    for family, fitter in FITTERS.items():
        try:
            fits[family] = fitter(tail, significance, coefficient)
        except (DegenerateError, ConvergenceError, InsufficientDataError) as exc:
            fits[family] = None
            errors[family] = f"{type(exc).__name__}: {exc}"
    return FamilyComparison(tail, fits, errors)


def scan_xmin(values, kind: str = "total", min_size: int = 50, max_candidates: int = 200) -> tuple[TailSample, float]:
    """Choose x_min minimizing the power-law KS distance over candidate thresholds.

    Candidates are up to ``max_candidates`` distinct positive values, spaced
    evenly in rank, that leave at least ``min_size`` points in the tail.
    Returns the chosen tail and its D.
    """
    v = np.asarray(values, dtype=float)
    pos = np.sort(v[v > 0])[::-1]
    if pos.size < min_size:
        raise InsufficientDataError(f"{pos.size} positive values, need at least {min_size}")
    ranks = np.unique(np.linspace(min_size - 1, pos.size - 1, num=min(max_candidates, pos.size - min_size + 1)).astype(int))
    best: tuple[float, TailSample] | None = None
    for r in ranks:
        x_min = float(pos[r])
        tail_vals = pos[pos >= x_min]
        logs = np.log(tail_vals / x_min).sum()
        if logs <= 0:
            continue
        tail = TailSample(tail_vals, x_min, kind)
        zeta = tail_vals.size / logs
        d = ks_statistic(tail, _survival("power_law", x_min, zeta, None))
        if best is None or d < best[0]:
            best = (d, tail)
    if best is None:
        raise DegenerateError("no usable x_min candidate")
    return best[1], best[0]

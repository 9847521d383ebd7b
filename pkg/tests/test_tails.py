import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sessionstats.errors import DegenerateError, InsufficientDataError
from sessionstats.synth import gen_cutoff, gen_exponential, gen_pareto
from sessionstats.tails import (
    TailSample,
    compare_families,
    cutoff_loglik,
    fit_exponential,
    fit_power_law,
    fit_power_law_cutoff,
    ks_statistic,
    ks_verdict,
    power_law_loglik,
    scan_xmin,
    select_tail,
)


def brute_force_ks(sample, cdf):
    """O(n^2): compare the model CDF with the ECDF on both sides of every point."""
    n = len(sample)
    best = 0.0
    for x in sample:
        below = sum(1 for s in sample if s < x) / n
        at = sum(1 for s in sample if s <= x) / n
        best = max(best, abs(at - cdf(x)), abs(below - cdf(x)))
    return best


def rejection_cutoff(n, zeta, x_star, x_min, seed):
    """Pareto proposals thinned to the cutoff density; independent of gen_cutoff."""
    rng = np.random.default_rng(seed)
    bound = 1.0 + x_min / (x_star * zeta)
    out = []
    while len(out) < n:
        p = x_min * (1.0 - rng.random(4 * n)) ** (-1.0 / zeta)
        keep = rng.random(4 * n) * bound <= np.exp(-(p - x_min) / x_star) * (1.0 + p / (x_star * zeta))
        out.extend(p[keep].tolist())
    return np.array(out[:n])


# ------------------------------------------------------------ select_tail


def test_select_tail_fraction():
    v = np.arange(1, 1001, dtype=float)
    t = select_tail(v, q=0.10)
    assert t.n == 100
    assert t.x_min == 901.0
    assert np.all(np.diff(t.values) < 0)


def test_select_tail_whole_sample():
    v = np.random.default_rng(0).random(50) + 0.1
    t = select_tail(v, q=1.0)
    assert t.n == 50 and t.x_min == v.min()


def test_select_tail_drops_zeros():
    v = np.concatenate([np.zeros(500), np.arange(1, 101, dtype=float)])
    t = select_tail(v, q=0.10)
    assert t.n == 10 and t.x_min == 91.0


def test_select_tail_explicit_and_errors():
    v = np.arange(1, 101, dtype=float)
    assert select_tail(v, x_min=50.5).n == 50
    with pytest.raises(InsufficientDataError):
        select_tail([], q=0.1)
    with pytest.raises(InsufficientDataError):
        select_tail(v, q=0.05)


# ------------------------------------------------------------ power law


def test_hill_closed_form():
    t = TailSample([math.e, math.e**2, math.e**3], 1.0)
    assert fit_power_law(t, min_size=3).zeta == pytest.approx(0.5, abs=1e-15)


def test_hill_seeded_recovery():
    x = gen_pareto(10000, 3.0, 0.01, seed=1)
    # frozen from a direct python loop over log(x / x_min)
    assert fit_power_law(TailSample(x, 0.01)).zeta == pytest.approx(2.97942025088394, rel=1e-12)
    assert 2.91 <= fit_power_law(TailSample(x, 0.01)).zeta <= 3.09


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(1.0, 1e3, allow_nan=False), min_size=10, max_size=60))
def test_hill_equals_loop(values):
    x_min = min(values)
    s = 0.0
    for v in values:
        s += math.log(v / x_min)
    if s == 0:
        with pytest.raises(DegenerateError):
            fit_power_law(TailSample(values, x_min))
        return
    assert fit_power_law(TailSample(values, x_min)).zeta == pytest.approx(len(values) / s, rel=1e-12)


def test_hill_errors():
    with pytest.raises(DegenerateError):
        fit_power_law(TailSample([2.0] * 20, 2.0))
    with pytest.raises(ValueError):
        TailSample([0.5, 3.0], 1.0)
    with pytest.raises(InsufficientDataError):
        fit_power_law(TailSample([2.0, 3.0], 1.0))


def test_power_law_loglik_matches_definition():
    x = gen_pareto(50, 2.5, 0.1, seed=4)
    direct = sum(math.log(2.5 / 0.1 * (v / 0.1) ** (-3.5)) for v in x)
    assert power_law_loglik(x, 0.1, 2.5) == pytest.approx(direct, rel=1e-12)


def test_hill_continuous_in_appended_value():
    base = list(gen_pareto(100, 3.0, 1.0, seed=2))

    def max_jump(points):
        zs = [fit_power_law(TailSample(base + [v], 1.0)).zeta for v in np.linspace(1.0, 5.0, points)]
        return np.max(np.abs(np.diff(zs)))

    # no jumps: refining the grid tenfold shrinks the largest step about tenfold
    assert max_jump(4001) < 0.15 * max_jump(401)


# ------------------------------------------------------------ exponential


def test_exponential_mean_excess():
    t = TailSample([5.0 + 1, 5.0 + 3], 5.0)
    assert fit_exponential(t, min_size=2).x_star == pytest.approx(2.0)


def test_exponential_recovery():
    x = gen_exponential(10000, 0.02, 0.01, seed=5)
    fit = fit_exponential(TailSample(x, 0.01))
    assert abs(fit.x_star - 0.02) <= 3 * 0.02 / math.sqrt(10000)


def test_exponential_degenerate():
    with pytest.raises(DegenerateError):
        fit_exponential(TailSample([1.0] * 12, 1.0))


@pytest.mark.slow
def test_exponential_rejected_on_pareto():
    rejected = sum(
        not fit_exponential(TailSample(gen_pareto(10000, 2.0, 0.01, seed=s), 0.01)).accepted for s in range(100)
    )
    assert rejected >= 95


# ------------------------------------------------------------ cutoff


def test_cutoff_on_pure_pareto():
    x = gen_pareto(10000, 3.0, 0.01, seed=1)
    t = TailSample(x, 0.01)
    hill = fit_power_law(t)
    cut = fit_power_law_cutoff(t)
    assert abs(cut.zeta - hill.zeta) < 0.15
    # likelihood-ratio oracle: the extra parameter buys less than 2 units
    assert cut.log_likelihood - hill.log_likelihood < 2.0
    assert cut.log_likelihood >= hill.log_likelihood - 1e-6


@pytest.mark.slow
@pytest.mark.xfail(reason="the true rate is 0, on the boundary, so the rate estimate is exactly 0 on only "
                          "about half of the seeds and small but positive otherwise", strict=False)
def test_cutoff_rate_beyond_data_on_pareto():
    hits = 0
    for seed in range(20):
        x = gen_pareto(10000, 3.0, 0.01, seed=seed)
        hits += 1.0 / fit_power_law_cutoff(TailSample(x, 0.01)).x_star < 1.0 / (10 * x.max())
    assert hits >= 19


def test_gen_cutoff_matches_rejection_sampler():
    from scipy.stats import ks_2samp

    a = gen_cutoff(10000, 2.0, 0.5, 0.1, seed=3)
    b = rejection_cutoff(10000, 2.0, 0.5, 0.1, seed=99)
    assert ks_2samp(a, b).pvalue > 0.01


def _grid_argmax(x, x_min, zetas, xstars):
    best = (-math.inf, None)
    for z in zetas:
        for xs in xstars:
            ll = cutoff_loglik(x, x_min, z, 1.0 / xs)
            if ll > best[0]:
                best = (ll, (z, xs))
    return best


@pytest.mark.slow
@pytest.mark.parametrize("x_min", [0.01, 0.1])
def test_cutoff_matches_grid_oracle(x_min):
    x = rejection_cutoff(10000, 2.0, 0.5, x_min, seed=11)
    fit = fit_power_law_cutoff(TailSample(x, x_min))
    zetas = np.linspace(1.5, 2.5, 200)
    xstars = np.linspace(0.2, 1.5, 200)
    ll, (z, xs) = _grid_argmax(x, x_min, zetas, xstars)
    assert fit.log_likelihood >= ll - 1e-6
    assert abs(fit.zeta - z) <= 2 * (zetas[1] - zetas[0])
    assert abs(fit.zeta - 2.0) <= 0.2
    if xs < xstars[-1]:
        assert abs(fit.x_star - xs) <= 2 * (xstars[1] - xstars[0]) + 0.01 * xs


@pytest.mark.slow
def test_cutoff_recovers_scale_where_identifiable():
    # x_min = 0.1 puts enough mass near the cutoff; at x_min = 0.01 only ~20
    # of 10000 points reach it and x_star is not identifiable to +-0.1
    zs, xs = [], []
    for seed in range(20):
        fit = fit_power_law_cutoff(TailSample(gen_cutoff(10000, 2.0, 0.5, 0.1, seed=seed), 0.1))
        zs.append(fit.zeta)
        xs.append(fit.x_star)
    assert all(abs(z - 2.0) <= 0.2 for z in zs)
    assert abs(np.median(xs) - 0.5) <= 0.05
    assert sum(abs(v - 0.5) <= 0.1 for v in xs) >= 15


@pytest.mark.slow
def test_cutoff_exponent_at_small_xmin():
    for seed in range(20):
        fit = fit_power_law_cutoff(TailSample(gen_cutoff(10000, 2.0, 0.5, 0.01, seed=seed), 0.01))
        assert abs(fit.zeta - 2.0) <= 0.2


@pytest.mark.slow
@pytest.mark.xfail(reason="only ~3 of 10000 points exceed x_star=0.5 when x_min=0.01; "
                          "x_star lands within +-0.1 on about a quarter of seeds", strict=False)
def test_cutoff_scale_at_small_xmin():
    hits = sum(
        abs(fit_power_law_cutoff(TailSample(gen_cutoff(10000, 2.0, 0.5, 0.01, seed=seed), 0.01)).x_star - 0.5) <= 0.1
        for seed in range(20)
    )
    assert hits >= 19


def test_cutoff_small_tail():
    with pytest.raises(InsufficientDataError):
        fit_power_law_cutoff(TailSample([1.0, 2, 3, 4, 5], 1.0))


def test_fitted_survival_contract():
    x = gen_cutoff(2000, 1.5, 0.3, 0.05, seed=8)
    t = TailSample(x, 0.05)
    for fit in (fit_power_law(t), fit_exponential(t), fit_power_law_cutoff(t)):
        assert fit.survival(0.05) == pytest.approx(1.0)
        s = fit.survival(np.sort(x))
        assert np.all(np.diff(s) <= 0)
        assert 0 <= fit.ks_d <= 1 and fit.cv > 0
        assert fit.accepted == (fit.ks_d <= fit.cv)


# ------------------------------------------------------------ KS


def test_ks_self_comparison_is_zero():
    x = np.random.default_rng(1).random(40) + 1.0
    t = TailSample(x, 1.0)

    def empirical_survival(q):
        q = np.asarray(q, dtype=float)
        return np.array([np.mean(x > v) for v in np.atleast_1d(q)])

    assert ks_statistic(t, empirical_survival) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("value", [1.0, 1.3, 7.0])
def test_ks_single_point(value):
    t = TailSample([value], 1.0)
    assert ks_statistic(t, lambda q: np.asarray(q, dtype=float) ** -2.0) >= 0.5


def test_ks_uniform_seed7_against_brute_force():
    u = np.random.default_rng(7).random(100)
    d = ks_statistic(TailSample(u, 1e-300), lambda q: 1.0 - np.clip(q, 0, 1))
    assert d == pytest.approx(brute_force_ks(list(u), lambda q: q), abs=1e-15)
    assert d == pytest.approx(0.06842829477751922, abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 200), st.integers(0, 2**32 - 1), st.floats(0.5, 4.0))
def test_ks_equals_brute_force(n, seed, zeta):
    x = np.round(gen_pareto(n, 2.0, 1.0, seed), 2)  # rounding creates ties
    x = np.maximum(x, 1.0)
    t = TailSample(x, 1.0)
    d = ks_statistic(t, lambda q: np.asarray(q, dtype=float) ** -zeta)
    assert d == pytest.approx(brute_force_ks(list(x), lambda q: 1 - q**-zeta), abs=1e-12)


def test_ks_verdict():
    cv, _ = ks_verdict(0.0, 1000)
    assert cv == pytest.approx(1.63 / math.sqrt(1000)) and cv == pytest.approx(0.05155, abs=1e-5)
    cv, ok = ks_verdict(0.10, 400)
    assert cv == pytest.approx(0.0815) and not ok
    assert all(ks_verdict(0.0, n)[1] for n in (1, 10, 10**6))
    with pytest.raises(ValueError):
        ks_verdict(0.1, 100, significance=0.05)
    assert ks_verdict(0.1, 100, significance=0.05, coefficient=1.36)[0] == pytest.approx(0.136)


@pytest.mark.slow
def test_ks_known_parameter_null_rate():
    rng = np.random.default_rng(2024)
    n, trials = 1000, 1000
    rejected = 0
    for _ in range(trials):
        x = 1.0 - rng.random(n)
        d = ks_statistic(TailSample(x ** (-1 / 3.0), 1.0), lambda q: np.asarray(q) ** -3.0)
        rejected += not ks_verdict(d, n)[1]
    assert rejected / trials <= 0.03


# ------------------------------------------------------------ comparison


def test_compare_pareto_sample():
    t = TailSample(gen_pareto(10000, 3.0, 0.01, seed=3), 0.01)
    cmp = compare_families(t)
    assert cmp.accepted["power_law"] and not cmp.accepted["exponential"]
    assert cmp.best in ("power_law", "power_law_cutoff")


def test_compare_exponential_sample():
    t = TailSample(gen_exponential(10000, 0.02, 0.01, seed=3), 0.01)
    cmp = compare_families(t)
    assert cmp.accepted["exponential"] and not cmp.accepted["power_law"]


def test_compare_isolates_failures():
    t = TailSample([1.0] * 15, 1.0)
    cmp = compare_families(t)
    assert set(cmp.fits) == {"power_law", "exponential", "power_law_cutoff"}
    assert cmp.fits["power_law"] is None and cmp.fits["exponential"] is None
    assert "DegenerateError" in cmp.errors["power_law"]
    assert cmp.best is None


def test_scan_xmin_finds_pareto_onset():
    rng = np.random.default_rng(6)
    body = rng.uniform(0.0, 1.0, 8000)
    tail = gen_pareto(2000, 3.0, 1.0, seed=6)
    t, d = scan_xmin(np.concatenate([body, tail]))
    assert 0.8 <= t.x_min <= 1.5
    assert d < ks_verdict(0, t.n)[0]

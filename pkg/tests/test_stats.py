from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make
from ledgerflow.ingest import yearly_summary
from ledgerflow.stats import (
    DayStats,
    DegenerateTailError,
    StatsError,
    daily_aggregate,
    dft_magnitudes,
    dft_spectrum,
    empirical_ccdf,
    pareto_index,
    peak_period,
    powerlaw_correlation_fit,
    weekly_peak_score,
)


def brute_ccdf(values):
    n = len(values)
    return [(v, sum(1 for x in values if x >= v) / n) for v in sorted(set(values))]


def test_ccdf_examples():
    assert empirical_ccdf([1, 2, 3, 4]).points == [(1, 1.0), (2, 0.75), (3, 0.5), (4, 0.25)]
    assert empirical_ccdf([5.5]).points == [(5.5, 1.0)]
    with pytest.raises(StatsError):
        empirical_ccdf([])
    with pytest.raises(StatsError):
        empirical_ccdf([1, 0])


def test_ccdf_of_pareto_sample_has_slope_minus_one():
    rng = np.random.default_rng(1)
    x = 1.0 / (1.0 - rng.random(10**5))
    curve = empirical_ccdf(x)
    keep = (curve.values > 2) & (curve.fractions > 1e-3)
    slope = np.polyfit(np.log(curve.values[keep]), np.log(curve.fractions[keep]), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.05)


@given(st.lists(st.integers(1, 50), min_size=1, max_size=60), st.randoms(use_true_random=False))
def test_ccdf_properties(values, rnd):
    curve = empirical_ccdf(values)
    assert curve.points == brute_ccdf(values)
    assert curve.fractions[0] == 1.0
    assert np.all(np.diff(curve.fractions) < 0)
    shuffled = list(values)
    rnd.shuffle(shuffled)
    assert empirical_ccdf(shuffled).points == curve.points


def grid(alpha, n=10**4, xmin=1.0):
    u = (np.arange(1, n + 1) - 0.5) / n
    return xmin * u ** (-1.0 / alpha)


def test_hill_on_inverse_cdf_grid():
    # grid oracle: n / sum(-ln u_i / alpha) = 1.0000347 alpha for n = 10**4
    fit = pareto_index(grid(1.0), 1.0)
    assert fit.alpha == pytest.approx(1.0, abs=0.02)
    assert fit.n_tail == 10**4 and fit.method == "hill"
    assert fit.stderr == pytest.approx(fit.alpha / 100)
    assert pareto_index(grid(2.0), 1.0).alpha == pytest.approx(2.0, abs=0.04)


def test_loglog_ols_on_grid():
    fit = pareto_index(grid(1.0), 1.0, method="loglog-ols")
    assert fit.alpha == pytest.approx(1.0, abs=0.02)
    assert fit.stderr > 0


def test_pareto_errors():
    with pytest.raises(StatsError):
        pareto_index([2.0] * 5 + [3.0] * 4, 1.0)
    with pytest.raises(DegenerateTailError):
        pareto_index([3.0] * 20, 1.0)
    with pytest.raises(StatsError):
        pareto_index(grid(1.0), 1.0, method="eyeball")


@pytest.mark.parametrize("c", [2.0**-20, 0.5, 8.0, 2.0**30])
def test_hill_scale_invariance_exact_for_powers_of_two(c):
    x = grid(1.3, n=500, xmin=3.0)
    assert pareto_index(c * x, c * 3.0).alpha == pareto_index(x, 3.0).alpha


@given(st.floats(1e-6, 1e6))
def test_hill_scale_invariance(c):
    x = grid(1.3, n=200, xmin=3.0)
    assert pareto_index(c * x, c * 3.0).alpha == pytest.approx(pareto_index(x, 3.0).alpha, rel=1e-12)


# --- daily series ---

def test_daily_aggregate_hand_count():
    recs = [make("2018-03-01T01:00:00", "a", "b"), make("2018-03-01T02:00:00", "a", "c")]
    series = daily_aggregate(recs)
    assert series.days == {date(2018, 3, 1): DayStats(2, 2_000_000, 1, 2, 3)}


def test_daily_aggregate_zero_fill():
    recs = [make("2018-03-01T01:00:00", "a", "b"), make("2018-03-04T02:00:00", "b", "a")]
    series = daily_aggregate(recs)
    assert len(series) == 4
    assert series.days[date(2018, 3, 2)] == DayStats()
    assert series.days[date(2018, 3, 4)].n_users == 2
    assert daily_aggregate([]).days == {}


def test_daily_column():
    series = daily_aggregate([make("2018-03-01T01:00:00", "a", "b", xrp=2)])
    assert series.column("txn_count").tolist() == [1]
    with pytest.raises(StatsError):
        series.column("nope")


day_records = st.builds(
    lambda d, s, t, amt: make(f"2017-12-{d:02d}T05:00:00" if d <= 31 else f"2018-01-{d - 31:02d}T05:00:00",
                              s, t, drops=amt),
    st.integers(20, 40), st.sampled_from("abcd"), st.sampled_from("abcd"), st.integers(1, 10**15),
)


@given(st.lists(day_records, max_size=40))
def test_daily_totals_reconcile_with_yearly(recs):
    series = daily_aggregate(recs)
    summary = yearly_summary(recs)
    assert sum(s.total_drops for s in series.days.values()) == summary.total.total_drops
    assert sum(s.txn_count for s in series.days.values()) == summary.total.n_transactions
    for s in series.days.values():
        assert s.n_users <= s.n_sources + s.n_destinations


# --- DFT ---

def test_pure_weekly_sinusoid():
    t = np.arange(364)
    mags = dft_magnitudes(np.sin(2 * np.pi * t / 7))
    periods = [p for p, _ in mags]
    values = np.array([m for _, m in mags])
    k = int(np.argmax(values))
    assert periods[k] == 7.0
    assert values[k] == pytest.approx(364 / 2)
    others = np.delete(values, k)
    assert others.max() < 1e-9 * values[k]
    assert weekly_peak_score(np.sin(2 * np.pi * t / 7)) > 1e6


def test_constant_series():
    assert all(m == 0 for _, m in dft_magnitudes([5.0] * 30))
    assert weekly_peak_score([5.0] * 30) == 0.0


def test_short_series():
    with pytest.raises(StatsError):
        dft_magnitudes([1.0] * 13)


def weekday_counts(seed, dip, n=364, level=1000.0):
    # day 0 is a Monday; days 5 and 6 of each week are the weekend
    rng = np.random.default_rng(seed)
    weekend = (np.arange(n) % 7) >= 5
    return rng.poisson(level * np.where(weekend, 1 - dip, 1.0)).astype(float)


@pytest.mark.parametrize("seed", range(5))
def test_weekend_dip_peaks_at_seven_days(seed):
    counts = weekday_counts(seed, 0.3)
    spec = dft_spectrum(counts)
    k = int(np.argmax(spec.magnitudes)) + 1
    assert abs(k - 364 / 7) <= 1
    assert peak_period(counts) == pytest.approx(7.0, rel=0.03)
    assert weekly_peak_score(counts) > 3


def test_white_noise_scores_near_one():
    # Monte Carlo over 1000 seeds gave median 0.99 and 95th percentile 2.08
    scores = [weekly_peak_score(np.random.default_rng(s).standard_normal(364)) for s in range(200)]
    assert 0.8 < np.median(scores) < 1.2
    assert np.percentile(scores, 95) < 3


@settings(max_examples=50)
@given(st.lists(st.floats(-1e6, 1e6), min_size=14, max_size=200))
def test_parseval(values):
    x = np.asarray(values)
    spec = dft_spectrum(x)
    n = x.size
    weights = np.full(spec.magnitudes.size, 2.0)
    if n % 2 == 0:
        weights[-1] = 1.0
    # DC of the raw series is n * mean; remaining energy comes from the one-sided spectrum
    energy = (n * x.mean()) ** 2 + np.sum(weights * spec.magnitudes**2)
    assert energy == pytest.approx(n * np.sum(x**2), rel=1e-9, abs=1e-6)


# --- power-law correlation ---

def test_exact_power_law():
    x = [10.0, 100.0, 1000.0]
    fit = powerlaw_correlation_fit(x, [2 * v**1.5 for v in x])
    assert fit.exponent == pytest.approx(1.5, abs=1e-14)
    assert fit.intercept == pytest.approx(np.log(2), abs=1e-12)
    assert fit.stderr == pytest.approx(0.0, abs=1e-12)


def test_constant_y():
    assert powerlaw_correlation_fit([1, 2, 3, 4], [7, 7, 7, 7]).exponent == 0.0


def test_fit_errors():
    with pytest.raises(StatsError):
        powerlaw_correlation_fit([2, 2, 2], [1, 2, 3])
    with pytest.raises(StatsError):
        powerlaw_correlation_fit([1, 2], [1, 2])
    with pytest.raises(StatsError):
        powerlaw_correlation_fit([1, 2, 3], [1, -2, 3])


@given(st.floats(-3, 3), st.floats(1e-3, 1e3))
def test_recovers_any_exponent(beta, c):
    x = np.geomspace(1, 1e4, 25)
    fit = powerlaw_correlation_fit(x, c * x**beta)
    assert fit.exponent == pytest.approx(beta, abs=1e-12)


def test_per_user_exponent_is_one_less():
    rng = np.random.default_rng(3)
    users = rng.integers(100, 10000, 200).astype(float)
    amount = users**1.5 * np.exp(0.2 * rng.standard_normal(200))
    total = powerlaw_correlation_fit(users, amount).exponent
    per_user = powerlaw_correlation_fit(users, amount / users).exponent
    assert per_user == pytest.approx(total - 1.0, abs=1e-12)


def test_noisy_herding_monte_carlo():
    # independent generator: log-uniform users over two decades, lognormal noise 0.2
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        users = np.exp(rng.uniform(np.log(100), np.log(10000), 365))
        amount = 5.0 * users**1.5 * np.exp(0.2 * rng.standard_normal(365))
        hits += 1.45 <= powerlaw_correlation_fit(users, amount).exponent <= 1.55
    assert hits >= 95

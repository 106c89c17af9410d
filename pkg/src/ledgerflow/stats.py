"""Distribution and time-series statistics of a filtered ledger."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .ingest import DROPS_PER_XRP, TransactionRecord

DEFAULT_XMIN_XRP = 10**7
MIN_TAIL = 10
WEEKLY_PERIOD = 7
WEEKLY_THRESHOLD = 3.0
MIN_SERIES = 14


class StatsError(ValueError):
    pass


class DegenerateTailError(StatsError):
    pass


@dataclass
class CcdfCurve:
    """Fraction of the sample at or above each distinct value.

    ``n_zero`` counts sample entries left off the positive-support curve
    (used for zero degrees).
    """

    values: np.ndarray
    fractions: np.ndarray
    n_zero: int = 0

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.fractions.tolist()))

    def __len__(self) -> int:
        return len(self.values)


def empirical_ccdf(values: Sequence[float]) -> CcdfCurve:
    arr = np.asarray(values)
    if arr.size == 0:
        raise StatsError("CCDF of an empty sample")
    if np.any(arr <= 0):
        raise StatsError("CCDF input must be strictly positive")
    distinct, counts = np.unique(arr, return_counts=True)
    # number of samples >= v is the reversed cumulative count
    at_or_above = np.cumsum(counts[::-1])[::-1]
    return CcdfCurve(distinct, at_or_above / arr.size)


class ParetoFit(NamedTuple):
    xmin: float
    alpha: float
    stderr: float
    n_tail: int
    method: str


def _tail(values, xmin: float) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    tail = arr[arr > xmin]
    if tail.size < MIN_TAIL:
        raise StatsError(f"only {tail.size} values above xmin={xmin}; need at least {MIN_TAIL}")
    if tail.min() == tail.max():
        raise DegenerateTailError("all tail values are equal")
    return tail


def pareto_index(values, xmin: float, method: str = "hill") -> ParetoFit:
    """Estimate the CCDF tail exponent of the values strictly above ``xmin``.

    ``hill`` is the maximum-likelihood estimate n / sum(ln(x / xmin)) with
    standard error alpha / sqrt(n). ``loglog-ols`` regresses the log CCDF
    of the tail on log value and reports the slope's OLS standard error.
    """
    if not xmin > 0:
        raise StatsError("xmin must be positive")
    tail = _tail(values, xmin)
    n = tail.size
    if method == "hill":
        alpha = n / float(np.sum(np.log(tail / xmin)))
        return ParetoFit(float(xmin), alpha, alpha / math.sqrt(n), n, method)
    if method == "loglog-ols":
        curve = empirical_ccdf(tail)
        if len(curve) < 3:
            raise DegenerateTailError("need at least three distinct tail values for a log-log fit")
        fit = _ols(np.log(curve.values), np.log(curve.fractions))
        return ParetoFit(float(xmin), -fit.exponent, fit.stderr, n, method)
    raise StatsError(f"unknown method {method!r}")


# --- daily series -----------------------------------------------------------

@dataclass
class DayStats:
    txn_count: int = 0
    total_drops: int = 0
    n_sources: int = 0
    n_destinations: int = 0
    n_users: int = 0


DAILY_COLUMNS = ("txn_count", "total_drops", "n_sources", "n_destinations", "n_users")


@dataclass
class DailySeries:
    days: dict[date, DayStats] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.days)

    @property
    def dates(self) -> list[date]:
        return list(self.days)

    def column(self, name: str) -> np.ndarray:
        if name not in DAILY_COLUMNS:
            raise StatsError(f"unknown daily column {name!r}")
        dtype = object if name == "total_drops" else np.int64
        return np.array([getattr(s, name) for s in self.days.values()], dtype=dtype)


def daily_aggregate(records: Iterable[TransactionRecord]) -> DailySeries:
    """Per-UTC-date activity, with explicit zero rows for idle interior days."""
    acc: dict[date, list] = {}
    for r in records:
        day = r.timestamp.date()
        slot = acc.get(day)
        if slot is None:
            slot = acc[day] = [0, 0, set(), set()]
        slot[0] += 1
        slot[1] += r.amount
        slot[2].add(r.source)
        slot[3].add(r.destination)
    series = DailySeries()
    if not acc:
        return series
    first, last = min(acc), max(acc)
    day = first
    one = timedelta(days=1)
    while day <= last:
        slot = acc.get(day)
        if slot is None:
            series.days[day] = DayStats()
        else:
            n, drops, src, dst = slot
            series.days[day] = DayStats(n, drops, len(src), len(dst), len(src | dst))
        day += one
    return series


# --- periodicity ------------------------------------------------------------

class Spectrum(NamedTuple):
    periods: np.ndarray
    magnitudes: np.ndarray
    length: int


def dft_spectrum(series: Sequence[float]) -> Spectrum:
    """Magnitudes of the mean-removed DFT for frequency indices 1..N//2.

    Unnormalised (numpy convention): a unit-amplitude sinusoid sitting on
    bin k gives magnitude N/2 there.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.size < MIN_SERIES:
        raise StatsError(f"series needs at least {MIN_SERIES} points, got {x.size}")
    spec = np.fft.rfft(x - x.mean())
    k = np.arange(1, spec.size)
    return Spectrum(x.size / k, np.abs(spec[1:]), x.size)


def dft_magnitudes(series: Sequence[float]) -> list[tuple[float, float]]:
    spec = dft_spectrum(series)
    return list(zip(spec.periods.tolist(), spec.magnitudes.tolist()))


def peak_period(series: Sequence[float]) -> float:
    spec = dft_spectrum(series)
    return float(spec.periods[int(np.argmax(spec.magnitudes))])


def weekly_peak_score(series: Sequence[float], period: float = WEEKLY_PERIOD) -> float:
    """Magnitude at the bin closest to ``period`` days over the median magnitude."""
    spec = dft_spectrum(series)
    k = int(round(spec.length / period))
    k = min(max(k, 1), spec.magnitudes.size)
    peak = float(spec.magnitudes[k - 1])
    top = float(spec.magnitudes.max())
    if top == 0.0:
        return 0.0
    floor = max(float(np.median(spec.magnitudes)), top * np.finfo(float).eps)
    return peak / floor


# --- power-law correlation --------------------------------------------------

class PowerLawFit(NamedTuple):
    exponent: float
    intercept: float
    stderr: float


def _ols(lx: np.ndarray, ly: np.ndarray) -> PowerLawFit:
    n = lx.size
    dx = lx - lx.mean()
    sxx = float(np.dot(dx, dx))
    if sxx == 0.0:
        raise StatsError("all x values are equal; slope undefined")
    slope = float(np.dot(dx, ly - ly.mean())) / sxx
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (intercept + slope * lx)
    dof = n - 2
    stderr = math.sqrt(float(np.dot(resid, resid)) / dof / sxx) if dof > 0 else math.nan
    return PowerLawFit(slope, intercept, stderr)


def powerlaw_correlation_fit(x: Sequence[float], y: Sequence[float]) -> PowerLawFit:
    """Least squares of ln y on ln x; the slope is the power-law exponent."""
    ax = np.asarray(x, dtype=float)
    ay = np.asarray(y, dtype=float)
    if ax.shape != ay.shape or ax.ndim != 1:
        raise StatsError("x and y must be equal-length sequences")
    if ax.size < 3:
        raise StatsError("need at least three points")
    if np.any(ax <= 0) or np.any(ay <= 0):
        raise StatsError("power-law fit needs strictly positive data")
    return _ols(np.log(ax), np.log(ay))


def herding_fit(series: DailySeries) -> PowerLawFit:
    """Fit daily XRP volume against daily distinct users over active days."""
    users = series.column("n_users").astype(float)
    volume = np.array([float(v) for v in series.column("total_drops")]) / DROPS_PER_XRP
    active = (users > 0) & (volume > 0)
    return powerlaw_correlation_fit(users[active], volume[active])

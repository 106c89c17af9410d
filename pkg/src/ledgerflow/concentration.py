"""Herfindahl-Hirschman style concentration indices.

``modified_inverse_hh`` of order n is the ratio of the (n-1)-th and n-th
power sums of the shares. For n = 2 it is the ordinary inverse HH index;
for large n it tends to the "effective number" of dominant entries, e.g.
``m + r`` for ``m`` full shares plus one fractional share ``r``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

DEFAULT_ORDER = 20
SHARE_SUM_RTOL = 1e-9


class ConcentrationError(ValueError):
    pass


def _as_shares(shares) -> np.ndarray:
    arr = np.asarray(shares, dtype=float)
    if arr.ndim != 1:
        raise ConcentrationError("shares must be one-dimensional")
    if arr.size:
        if not np.all(np.isfinite(arr)) or arr.min() < 0:
            raise ConcentrationError("shares must be finite and non-negative")
        if abs(arr.sum() - 1.0) > SHARE_SUM_RTOL:
            raise ConcentrationError(f"shares sum to {arr.sum()!r}, not 1")
    return arr


def normalize(raw: Sequence[float]) -> np.ndarray:
    """Divide non-negative values by their total.

    An empty input is the "no flow" case and normalizes to an empty list.
    Integer inputs are summed exactly before the division.
    """
    values = list(raw)
    if not values:
        return np.zeros(0)
    if any(v < 0 for v in values):
        raise ConcentrationError("negative entry in raw list")
    if all(isinstance(v, (int, np.integer)) for v in values):
        total = sum(int(v) for v in values)
        if total == 0:
            raise ConcentrationError("cannot normalize an all-zero list")
        return np.array([int(v) / total for v in values])
    arr = np.asarray(values, dtype=float)
    total = arr.sum()
    if total == 0:
        raise ConcentrationError("cannot normalize an all-zero list")
    return arr / total


def benchmark_shares(m: int, r: float) -> np.ndarray:
    """``m`` shares of 1/(m+r) followed by one share of r/(m+r)."""
    if m < 1:
        raise ConcentrationError("m must be a positive integer")
    if not 0.0 <= r <= 1.0:
        raise ConcentrationError("r must lie in [0, 1]")
    x = m + r
    return np.array([1.0 / x] * m + [r / x])


def hh_index(shares) -> float:
    """Sum of squared shares: 1 for full concentration, 1/m for m equal shares."""
    arr = _as_shares(shares)
    if arr.size == 0:
        raise ConcentrationError("HH index of an empty share list is undefined")
    return float(np.dot(arr, arr))


def modified_hh(shares, n: int) -> float:
    """Power sum of the shares of order ``n`` (n = 2 is the HH index)."""
    if n < 1:
        raise ConcentrationError(f"order must be >= 1, got {n}")
    arr = _as_shares(shares)
    if arr.size == 0:
        raise ConcentrationError("modified HH index of an empty share list is undefined")
    if n == 1:
        return 1.0
    return float(np.sum(arr**n))


def _power_sum_ratio(values: np.ndarray, n: int) -> tuple[float, float]:
    # Rescale by the maximum so the largest term is exactly 1 and the
    # denominator can never underflow.
    top = values.max()
    p = values / top
    return top, float(np.sum(p ** (n - 1)) / np.sum(p**n))


def modified_inverse_hh(shares, n: int = DEFAULT_ORDER) -> float:
    """Modified inverse HH index of order ``n`` of a share list.

    Returns 0 for an empty list (no flow).
    """
    if n < 2:
        raise ConcentrationError(f"order must be >= 2, got {n}")
    arr = _as_shares(shares)
    if arr.size == 0:
        return 0.0
    top, ratio = _power_sum_ratio(arr, n)
    return ratio / top


def effective_count(raw: Sequence[int | float], n: int = DEFAULT_ORDER) -> float:
    """``modified_inverse_hh(normalize(raw), n)`` evaluated without forming shares.

    Works straight on raw amounts so that a 10**17 : 1 spread of daily flows
    keeps full relative precision.
    """
    if n < 2:
        raise ConcentrationError(f"order must be >= 2, got {n}")
    values = list(raw)
    if not values:
        return 0.0
    if any(v < 0 for v in values):
        raise ConcentrationError("negative entry in raw list")
    if all(isinstance(v, (int, np.integer)) for v in values):
        ints = [int(v) for v in values]
        top_int = max(ints)
        if top_int == 0:
            raise ConcentrationError("cannot normalize an all-zero list")
        total_over_top = sum(ints) / top_int
        p = np.array([v / top_int for v in ints])
    else:
        arr = np.asarray(values, dtype=float)
        top = arr.max()
        if top == 0:
            raise ConcentrationError("cannot normalize an all-zero list")
        p = arr / top
        total_over_top = float(p.sum())
    return total_over_top * float(np.sum(p ** (n - 1)) / np.sum(p**n))

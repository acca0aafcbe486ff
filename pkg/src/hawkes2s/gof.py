"""Residual analysis through the time-rescaling theorem."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BowsherParams, EventSeries, ExpHawkesParams, HawkesError, TradingCalendar
from .likelihood import bowsher_terms, recursion_state


def rescale_times(params: ExpHawkesParams | BowsherParams, series: EventSeries,
                  calendar: TradingCalendar | None = None) -> list[np.ndarray]:
    """Compensator of each dimension evaluated at that dimension's own events."""
    if isinstance(params, BowsherParams):
        _, comp, _ = bowsher_terms(params, series, calendar)
        out = [np.asarray(comp)]
    else:
        if params.M != series.dims:
            raise HawkesError(f"params have {params.M} dimensions, series has {series.dims}")
        cal = TradingCalendar.single(series.horizon) if calendar is None else calendar
        state = recursion_state(params.beta, series, cal)
        opens = cal.opens
        before = np.concatenate([[0.0], np.cumsum(cal.closes - opens)])
        out = []
        for m, t in enumerate(series.times):
            day = cal.day_of(t)
            if np.any(day < 0):
                raise HawkesError(f"dimension {m} has events outside trading intervals")
            elapsed = before[day] + t - opens[day]
            comp = params.mu[m] * elapsed
            for n in range(params.M):
                comp = comp + params.alpha[m, n] * state.Q[m][n]
            out.append(comp)
    for m, comp in enumerate(out):
        if comp.size > 1 and np.any(np.diff(comp) <= 0):
            raise AssertionError(f"rescaled times of dimension {m} are not strictly increasing")
    return out


def rescaled_durations(params, series: EventSeries, calendar: TradingCalendar | None = None):
    return [np.diff(c, prepend=0.0) for c in rescale_times(params, series, calendar)]


def kolmogorov_sf(x: float, terms: int = 100, eps: float = 1e-12) -> float:
    """P(K > x) for the Kolmogorov distribution."""
    if x <= 0:
        return 1.0
    total = 0.0
    for k in range(1, terms + 1):
        term = (-1) ** (k - 1) * math.exp(-2.0 * k * k * x * x)
        total += term
        if abs(term) < eps:
            break
    return float(min(max(2.0 * total, 0.0), 1.0))


def ks_exp1(durations) -> tuple[float, float]:
    """One-sample KS test against Exp(1) with the asymptotic p-value."""
    d = np.sort(np.asarray(durations, dtype=float))
    n = d.size
    if n < 10:
        raise HawkesError(f"KS test needs at least 10 durations, got {n}")
    if np.any(d <= 0):
        raise HawkesError("durations must be positive")
    cdf = -np.expm1(-d)
    k = np.arange(1, n + 1)
    stat = float(max(np.max(k / n - cdf), np.max(cdf - (k - 1) / n)))
    return stat, kolmogorov_sf(math.sqrt(n) * stat)


def qq_points(durations) -> np.ndarray:
    """(theoretical Exp(1) quantile, empirical order statistic) rows."""
    d = np.sort(np.asarray(durations, dtype=float))
    n = d.size
    if n == 0:
        raise HawkesError("no durations")
    probs = (np.arange(1, n + 1) - 0.5) / n
    return np.column_stack([-np.log1p(-probs), d])


@dataclass(frozen=True)
class InterarrivalStats:
    mean: float
    std: float
    q1: float
    q2: float
    q3: float
    count: int


def interarrival_stats(series: EventSeries, i: int) -> InterarrivalStats:
    t = series.times[i]
    if t.size < 2:
        raise HawkesError(f"dimension {i} needs at least 2 events")
    gaps = np.diff(t)
    q1, q2, q3 = np.percentile(gaps, [25, 50, 75])
    std = float(np.std(gaps, ddof=1)) if gaps.size > 1 else 0.0
    return InterarrivalStats(float(gaps.mean()), std, float(q1), float(q2), float(q3), int(t.size))

"""Domain types and pointwise model evaluation for exponential Hawkes processes.

Kernel convention (main model): phi_ij(t) = alpha_ij * beta_ij * exp(-beta_ij * t),
so alpha_ij is the branching ratio of the (i, j) kernel.

Day-gap convention: when a :class:`TradingCalendar` is supplied the intensity
is zero outside trading intervals and each trading day starts from its
baseline; an event only excites the remainder of its own day. Kernels are
evaluated in raw (calendar) seconds.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class HawkesError(ValueError):
    """Base class for invalid-model or invalid-data errors."""


class InfeasibleLikelihoodError(HawkesError):
    """Raised when an observed event has (numerically) zero intensity."""


class UnstableParamsError(HawkesError):
    pass


def _as_times(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float).ravel()
    return arr


@dataclass(frozen=True)
class EventSeries:
    """Per-dimension strictly increasing event times observed on [0, horizon]."""

    times: tuple
    horizon: float

    def __init__(self, times: Sequence, horizon: float):
        arrs = tuple(_as_times(t) for t in times)
        if len(arrs) < 1:
            raise HawkesError("an EventSeries needs at least one dimension")
        horizon = float(horizon)
        if not horizon > 0:
            raise HawkesError(f"horizon must be positive, got {horizon}")
        for i, t in enumerate(arrs):
            if t.size and (t[0] < 0 or t[-1] > horizon):
                raise HawkesError(f"dimension {i}: timestamps must lie in [0, {horizon}]")
            if t.size > 1 and np.any(np.diff(t) <= 0):
                raise HawkesError(f"dimension {i}: timestamps must be strictly increasing")
            if not np.all(np.isfinite(t)):
                raise HawkesError(f"dimension {i}: non-finite timestamp")
            t.setflags(write=False)
        object.__setattr__(self, "times", arrs)
        object.__setattr__(self, "horizon", horizon)

    @property
    def dims(self) -> int:
        return len(self.times)

    @property
    def counts(self) -> list[int]:
        return [t.size for t in self.times]

    def __len__(self) -> int:
        return sum(self.counts)

    def restrict(self, start: float, end: float) -> "EventSeries":
        """Events in [start, end], shifted so that ``start`` becomes 0."""
        parts = [t[(t >= start) & (t <= end)] - start for t in self.times]
        return EventSeries(parts, end - start)


@dataclass(frozen=True)
class TradingCalendar:
    """Ordered, disjoint trading intervals of a common length (seconds)."""

    intervals: tuple

    def __init__(self, intervals: Sequence[tuple[float, float]]):
        ivs = tuple((float(a), float(b)) for a, b in intervals)
        if not ivs:
            raise HawkesError("calendar needs at least one interval")
        for k, (a, b) in enumerate(ivs):
            if not b > a:
                raise HawkesError(f"interval {k}: close must exceed open")
            if k and a < ivs[k - 1][1]:
                raise HawkesError(f"interval {k} overlaps the previous one")
        lengths = np.array([b - a for a, b in ivs])
        if not np.allclose(lengths, lengths[0], rtol=1e-9, atol=1e-6):
            raise HawkesError("all trading intervals must have the same length")
        object.__setattr__(self, "intervals", ivs)

    @classmethod
    def single(cls, horizon: float) -> "TradingCalendar":
        return cls([(0.0, horizon)])

    @property
    def opens(self) -> np.ndarray:
        return np.array([a for a, _ in self.intervals])

    @property
    def closes(self) -> np.ndarray:
        return np.array([b for _, b in self.intervals])

    @property
    def day_count(self) -> int:
        return len(self.intervals)

    @property
    def day_length(self) -> float:
        a, b = self.intervals[0]
        return b - a

    @property
    def total_time(self) -> float:
        return float(np.sum(self.closes - self.opens))

    def day_of(self, t) -> np.ndarray:
        """Index of the interval containing each time, -1 when in a gap."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.opens, t, side="right") - 1
        ok = idx >= 0
        ok[ok] &= t[ok] <= self.closes[idx[ok]]
        return np.where(ok, idx, -1)

    def trading_elapsed(self, t: float) -> float:
        opens, closes = self.opens, self.closes
        return float(np.sum(np.clip(t, opens, closes) - opens))


@dataclass(frozen=True)
class ExpHawkesParams:
    mu: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray

    def __init__(self, mu, alpha, beta):
        mu = np.atleast_1d(np.asarray(mu, dtype=float)).copy()
        alpha = np.atleast_2d(np.asarray(alpha, dtype=float)).copy()
        beta = np.atleast_2d(np.asarray(beta, dtype=float)).copy()
        m = mu.size
        if mu.ndim != 1 or alpha.shape != (m, m) or beta.shape != (m, m):
            raise HawkesError(
                f"shape mismatch: mu {mu.shape}, alpha {alpha.shape}, beta {beta.shape}"
            )
        if np.any(mu < 0) or np.any(alpha < 0):
            raise HawkesError("mu and alpha must be non-negative")
        if np.any(beta <= 0):
            raise HawkesError("beta must be strictly positive")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(alpha)) and np.all(np.isfinite(beta))):
            raise HawkesError("parameters must be finite")
        for a in (mu, alpha, beta):
            a.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def M(self) -> int:
        return self.mu.size


@dataclass(frozen=True)
class BowsherParams:
    """Univariate spillover model.

    Within day d the stochastic part is
    ``pi * L_{d-1} * exp(-rho * (t - open_d)) + sum alpha * exp(-beta * (t - u))``
    over that day's events u < t, where L_{d-1} is its value at the previous
    close. The kernel here is unnormalised (alpha * exp(-beta t)); it matches the
    main model with adjacency alpha / beta.
    """

    mu: float
    pi: float
    rho: float
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("mu", "pi", "rho", "alpha", "beta"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.mu < 0 or self.pi < 0 or self.alpha < 0:
            raise HawkesError("mu, pi and alpha must be non-negative")
        if self.rho <= 0 or self.beta <= 0:
            raise HawkesError("rho and beta must be strictly positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.mu, self.pi, self.rho, self.alpha, self.beta])


@dataclass
class FitResult:
    params: ExpHawkesParams | BowsherParams
    nll: float
    outer_iterations: int
    inner_trace: list = field(default_factory=list)
    converged: bool = True
    model: str = "hawkes"
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    spectral_radius: float
    conclusive: bool = True


def _check_dims(params: ExpHawkesParams, series: EventSeries, t: float, i: int):
    if params.M != series.dims:
        raise HawkesError(f"params have {params.M} dimensions, series has {series.dims}")
    if not 0 <= i < params.M:
        raise HawkesError(f"dimension index {i} out of range")
    if not 0 <= t <= series.horizon:
        raise HawkesError(f"t={t} outside [0, {series.horizon}]")


def _history(series: EventSeries, j: int, t: float, calendar: TradingCalendar | None):
    """Source events of dimension j that excite time t (strictly earlier)."""
    tj = series.times[j]
    tj = tj[tj < t]
    if calendar is not None:
        day = calendar.day_of(np.array([t]))[0]
        tj = tj[calendar.day_of(tj) == day]
    return tj


def intensity_at(params: ExpHawkesParams, series: EventSeries, t: float, i: int,
                 calendar: TradingCalendar | None = None) -> float:
    _check_dims(params, series, t, i)
    if calendar is not None and calendar.day_of(np.array([t]))[0] < 0:
        return 0.0
    lam = params.mu[i]
    for j in range(params.M):
        a, b = params.alpha[i, j], params.beta[i, j]
        if a == 0:
            continue
        tj = _history(series, j, t, calendar)
        lam += a * b * np.sum(np.exp(-b * (t - tj)))
    return float(lam)


def compensator_at(params: ExpHawkesParams, series: EventSeries, t: float, i: int,
                   calendar: TradingCalendar | None = None) -> float:
    _check_dims(params, series, t, i)
    if calendar is None:
        comp = params.mu[i] * t
    else:
        comp = params.mu[i] * calendar.trading_elapsed(t)
    for j in range(params.M):
        a, b = params.alpha[i, j], params.beta[i, j]
        if a == 0:
            continue
        tj = series.times[j]
        tj = tj[tj < t]
        if calendar is None:
            upper = np.full(tj.shape, t)
        else:
            days = calendar.day_of(tj)
            if np.any(days < 0):
                raise HawkesError(f"dimension {j} has events outside trading intervals")
            upper = np.minimum(t, calendar.closes[days])
        comp += a * np.sum(-np.expm1(-b * (upper - tj)))
    return float(comp)


def branching_matrix(params: ExpHawkesParams) -> np.ndarray:
    # ||phi_ij||_1 = alpha_ij for the alpha * beta * exp(-beta t) kernel
    return np.array(params.alpha, copy=True)


def spectral_radius(matrix, tol: float = 1e-10, max_iter: int = 1000) -> tuple[float, bool]:
    """Power iteration on a non-negative matrix; returns (radius, converged).

    On non-convergence the max row sum (an upper bound) is returned instead.
    """
    a = np.abs(np.asarray(matrix, dtype=float))
    x = np.ones(a.shape[0])
    est = 0.0
    for _ in range(max_iter):
        y = a @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0, True
        new = norm / np.linalg.norm(x)
        x = y / norm
        if abs(new - est) <= tol * max(1.0, new):
            return float(new), True
        est = new
    return float(a.sum(axis=1).max()), False


def stability_check(params: ExpHawkesParams) -> StabilityReport:
    radius, conclusive = spectral_radius(branching_matrix(params))
    return StabilityReport(stable=radius < 1.0, spectral_radius=radius, conclusive=conclusive)

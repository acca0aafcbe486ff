"""Negative log-likelihood, gradient and Hessian of exponential Hawkes models.

All evaluations go through :func:`recursion_state`, a linear-time forward pass
per (target, source) pair. The (mu, alpha) Hessian is block-diagonal by target
dimension; flattened vectors use the order ``[mu_0, alpha_00..alpha_0(M-1), mu_1, ...]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import bowsher_pass, pair_pass
from .core import (
    BowsherParams,
    EventSeries,
    ExpHawkesParams,
    HawkesError,
    InfeasibleLikelihoodError,
    TradingCalendar,
)

LOG_FLOOR = 1e-300


@dataclass
class RecursionState:
    """R[m][n][i], the same-day decayed source sums at target events, plus
    Q (compensator excitation at target events) and C (full excitation integrals)."""

    R: list
    Q: list
    C: np.ndarray


def event_days(series: EventSeries, calendar: TradingCalendar) -> list[np.ndarray]:
    days = []
    for j, t in enumerate(series.times):
        d = calendar.day_of(t).astype(np.int64)
        if np.any(d < 0):
            bad = t[d < 0][0]
            raise HawkesError(f"dimension {j}: event at {bad} lies outside every trading interval")
        days.append(d)
    return days


def _calendar(series: EventSeries, calendar: TradingCalendar | None) -> TradingCalendar:
    return TradingCalendar.single(series.horizon) if calendar is None else calendar


def recursion_state(beta, series: EventSeries, calendar: TradingCalendar | None = None) -> RecursionState:
    beta = np.asarray(beta, dtype=float)
    M = series.dims
    if beta.shape != (M, M):
        raise HawkesError(f"beta has shape {beta.shape}, expected {(M, M)}")
    cal = _calendar(series, calendar)
    days = event_days(series, cal)
    closes = cal.closes
    R = [[None] * M for _ in range(M)]
    Q = [[None] * M for _ in range(M)]
    C = np.zeros((M, M))
    for m in range(M):
        for n in range(M):
            R[m][n], Q[m][n], C[m, n] = pair_pass(
                series.times[m], days[m], series.times[n], days[n], float(beta[m, n]), closes
            )
    return RecursionState(R, Q, C)


def _check(params: ExpHawkesParams, series: EventSeries):
    if params.M != series.dims:
        raise HawkesError(f"params have {params.M} dimensions, series has {series.dims}")


def _log_sum(lam: np.ndarray, m: int) -> float:
    if lam.size == 0:
        return 0.0
    low = lam.min()
    if not np.isfinite(low) or np.any(np.isnan(lam)):
        raise InfeasibleLikelihoodError(f"non-finite intensity in dimension {m}")
    if low < LOG_FLOOR:
        raise InfeasibleLikelihoodError(f"zero intensity at an observed event of dimension {m}")
    return float(np.sum(np.log(lam)))


def event_intensities(params: ExpHawkesParams, state: RecursionState) -> list[np.ndarray]:
    M = params.M
    out = []
    for m in range(M):
        lam = np.full(state.R[m][0].size, params.mu[m])
        for n in range(M):
            lam = lam + params.alpha[m, n] * params.beta[m, n] * state.R[m][n]
        out.append(lam)
    return out


def nll_daygap(params: ExpHawkesParams, series: EventSeries,
               calendar: TradingCalendar | None = None) -> float:
    _check(params, series)
    cal = _calendar(series, calendar)
    state = recursion_state(params.beta, series, cal)
    total = cal.total_time * float(np.sum(params.mu)) + float(np.sum(params.alpha * state.C))
    for m, lam in enumerate(event_intensities(params, state)):
        total -= _log_sum(lam, m)
    if not np.isfinite(total):
        raise InfeasibleLikelihoodError("non-finite negative log-likelihood")
    return total


def nll(params: ExpHawkesParams, series: EventSeries) -> float:
    """NLL on [0, horizon] without trading gaps."""
    return nll_daygap(params, series, None)


def design_blocks(series: EventSeries, calendar: TradingCalendar | None, beta):
    """Per-target linear structure of the NLL at fixed beta.

    For target m the NLL restricted to x = (mu_m, alpha_m0, ..., alpha_m(M-1)) is
    ``c_m @ x - sum(log(A_m @ x))``. Returns a list of (c_m, A_m).
    """
    cal = _calendar(series, calendar)
    beta = np.asarray(beta, dtype=float)
    state = recursion_state(beta, series, cal)
    M = series.dims
    blocks = []
    for m in range(M):
        c = np.concatenate([[cal.total_time], state.C[m]])
        A = np.empty((series.times[m].size, M + 1))
        A[:, 0] = 1.0
        for n in range(M):
            A[:, n + 1] = beta[m, n] * state.R[m][n]
        blocks.append((c, A))
    return blocks


def pack(params: ExpHawkesParams) -> np.ndarray:
    return np.column_stack([params.mu, params.alpha]).ravel()


def unpack(x, beta) -> ExpHawkesParams:
    beta = np.asarray(beta, dtype=float)
    M = beta.shape[0]
    x = np.asarray(x, dtype=float).reshape(M, M + 1)
    return ExpHawkesParams(x[:, 0], x[:, 1:], beta)


def nll_gradient(params: ExpHawkesParams, series: EventSeries,
                 calendar: TradingCalendar | None = None):
    """Gradient over the convex block; returns (d/dmu, d/dalpha)."""
    _check(params, series)
    blocks = design_blocks(series, calendar, params.beta)
    x = pack(params).reshape(params.M, -1)
    g = np.empty_like(x)
    for m, (c, A) in enumerate(blocks):
        lam = A @ x[m]
        _log_sum(lam, m)
        g[m] = c - A.T @ (1.0 / lam)
    return g[:, 0].copy(), g[:, 1:].copy()


def nll_hessian(params: ExpHawkesParams, series: EventSeries,
                calendar: TradingCalendar | None = None) -> np.ndarray:
    """Hessian over (mu, alpha) as an M(M+1) square matrix, block-diagonal by target."""
    _check(params, series)
    blocks = design_blocks(series, calendar, params.beta)
    M = params.M
    k = M + 1
    x = pack(params).reshape(M, k)
    H = np.zeros((M * k, M * k))
    for m, (c, A) in enumerate(blocks):
        lam = A @ x[m]
        _log_sum(lam, m)
        Aw = A / lam[:, None]
        h = Aw.T @ Aw
        H[m * k:(m + 1) * k, m * k:(m + 1) * k] = 0.5 * (h + h.T)
    return H


def trading_clock(series: EventSeries, calendar: TradingCalendar):
    """Map event times of a univariate series onto a gap-free trading clock.

    Returns (clock times, day indices, cumulative day boundaries).
    """
    if series.dims != 1:
        raise HawkesError("the Bowsher model is univariate")
    t = series.times[0]
    day = event_days(series, calendar)[0]
    lengths = calendar.closes - calendar.opens
    bounds = np.concatenate([[0.0], np.cumsum(lengths)])
    s = t - calendar.opens[day] + bounds[day] if t.size else t.copy()
    return s, day, bounds


def bowsher_terms(params: BowsherParams, series: EventSeries, calendar: TradingCalendar | None = None):
    """(intensity at events, compensator at events, total compensator)."""
    cal = _calendar(series, calendar)
    s, day, bounds = trading_clock(series, cal)
    return bowsher_pass(s, day, bounds, params.mu, params.pi, params.rho, params.alpha, params.beta)


def nll_bowsher(params: BowsherParams, series: EventSeries,
                calendar: TradingCalendar | None = None) -> float:
    lam, _, total = bowsher_terms(params, series, calendar)
    value = total - _log_sum(lam, 0)
    if not np.isfinite(value):
        raise InfeasibleLikelihoodError("non-finite negative log-likelihood")
    return float(value)

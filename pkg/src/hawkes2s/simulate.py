"""Ogata thinning for exponential, day-gap and Bowsher Hawkes models."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ._kernels import thin_bowsher, thin_hawkes
from .core import (
    BowsherParams,
    EventSeries,
    ExpHawkesParams,
    HawkesError,
    TradingCalendar,
    UnstableParamsError,
    stability_check,
)

log = logging.getLogger(__name__)

RNG_ID = "numpy.random.PCG64"
UNSTABLE_RADIUS = 1.05


@dataclass(frozen=True)
class SimConfig:
    seed: int
    horizon: float | None = None
    max_events: int | None = None
    calendar: TradingCalendar | None = None

    def __post_init__(self):
        if (self.horizon is None) == (self.max_events is None):
            raise HawkesError("set exactly one of horizon and max_events")
        if self.horizon is not None and not self.horizon > 0:
            raise HawkesError("horizon must be positive")
        if self.max_events is not None and self.max_events < 1:
            raise HawkesError("max_events must be at least 1")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _guard(params: ExpHawkesParams):
    report = stability_check(params)
    if report.spectral_radius >= UNSTABLE_RADIUS:
        raise UnstableParamsError(
            f"unstable parameters: spectral radius of alpha is {report.spectral_radius:.6g}"
        )
    if not report.stable:
        log.warning("near-critical parameters: spectral radius %.6g", report.spectral_radius)


def _check_ratio(worst: float):
    if worst > 1.0 + 1e-12:
        raise AssertionError(f"thinning bound violated (ratio {worst})")


def _split(times, dims, M, horizon):
    parts = [times[dims == j] for j in range(M)]
    return EventSeries(parts, horizon)


def _run(params, opens, closes, max_events, seed):
    if np.all(params.mu == 0):
        raise HawkesError("all baselines are zero: no event can ever occur")
    times, dims, worst = thin_hawkes(
        np.ascontiguousarray(params.mu), np.ascontiguousarray(params.alpha),
        np.ascontiguousarray(params.beta), opens, closes, int(max_events), _rng(seed),
    )
    _check_ratio(worst)
    return times, dims


def simulate_hawkes(params: ExpHawkesParams, config: SimConfig) -> EventSeries:
    """Simulate on [0, horizon], or until ``max_events`` events when that is set."""
    if config.calendar is not None:
        return simulate_daygap(params, config.calendar, config)
    _guard(params)
    if config.max_events is not None:
        times, dims = _run(params, np.array([0.0]), np.array([np.inf]), config.max_events, config.seed)
        horizon = float(times[-1])
    else:
        horizon = float(config.horizon)
        times, dims = _run(params, np.array([0.0]), np.array([horizon]), 0, config.seed)
    return _split(times, dims, params.M, horizon)


def simulate_daygap(params: ExpHawkesParams, calendar: TradingCalendar, config: SimConfig) -> EventSeries:
    _guard(params)
    opens, closes = calendar.opens, calendar.closes
    if config.horizon is not None:
        keep = opens < config.horizon
        opens, closes = opens[keep], np.minimum(closes[keep], config.horizon)
        if opens.size == 0:
            raise HawkesError("horizon ends before the first trading interval")
    times, dims = _run(params, opens, closes, config.max_events or 0, config.seed)
    if config.max_events is not None:
        horizon = float(times[-1]) if times.size else float(closes[-1])
    else:
        horizon = float(config.horizon)
    return _split(times, dims, params.M, horizon)


def simulate_bowsher(params: BowsherParams, calendar: TradingCalendar, config: SimConfig) -> EventSeries:
    """Thinning against the Bowsher intensity; the bound is re-evaluated at each open.

    Only alpha / beta < 1 (the within-day branching ratio) is enforced; no
    condition is imposed on the spillover pair (pi, rho).
    """
    if params.alpha / params.beta >= 1.0:
        raise UnstableParamsError(f"alpha / beta = {params.alpha / params.beta:.6g} must be below 1")
    if params.mu == 0:
        raise HawkesError("zero baseline: no event can ever occur")
    opens, closes = calendar.opens, calendar.closes
    horizon = config.horizon if config.horizon is not None else float(closes[-1])
    keep = opens < horizon
    opens, closes = opens[keep], np.minimum(closes[keep], horizon)
    times, worst = thin_bowsher(params.mu, params.pi, params.rho, params.alpha, params.beta,
                                opens, closes, _rng(config.seed))
    _check_ratio(worst)
    if config.max_events is not None:
        times = times[: config.max_events]
        horizon = float(times[-1]) if times.size else horizon
    return EventSeries([times], horizon)

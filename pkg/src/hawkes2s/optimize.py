"""Two-stage likelihood optimisation (2SHLO) and the Bowsher fitter.

The inner stage minimises the NLL over (mu, alpha) at fixed decays, which is
convex; the outer stage runs Nelder-Mead over log(beta).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.optimize import minimize

from .core import (
    BowsherParams,
    EventSeries,
    ExpHawkesParams,
    FitResult,
    HawkesError,
    InfeasibleLikelihoodError,
    TradingCalendar,
)
from .likelihood import design_blocks, nll_bowsher, nll_daygap

log = logging.getLogger(__name__)

MIN_EVENTS = 5


@dataclass(frozen=True)
class OptimConfig:
    inner_method: str = "projected-newton"
    inner_tol: float = 1e-8
    inner_max_iter: int = 500
    outer_tol: float = 1e-4
    outer_ftol: float = 1e-10
    outer_max_iter: int | None = None  # defaults to 200 * number of decays
    param_floor: float = 1e-8
    seed: int = 0
    warm_start: bool = True
    # after the simplex stops, re-try each decay at these multiples of its start value and
    # restart from any improvement; escapes flat regions where an alpha sits at the floor
    outer_probe_rounds: int = 3
    probe_multipliers: tuple = (0.1, 0.3, 1.0, 3.0)

    def __post_init__(self):
        if self.inner_method not in ("projected-newton", "accelerated-gradient"):
            raise HawkesError(f"unknown inner method {self.inner_method!r}")
        for name in ("inner_tol", "outer_tol", "outer_ftol", "param_floor"):
            if not getattr(self, name) > 0:
                raise HawkesError(f"{name} must be positive")
        if self.outer_probe_rounds < 0:
            raise HawkesError("outer_probe_rounds must be non-negative")


@dataclass
class InnerResult:
    mu: np.ndarray
    alpha: np.ndarray
    nll: float
    converged: bool
    iterations: int
    projected_gradient: float
    trace: list = field(default_factory=list)


def _block_obj(c, A, x):
    lam = A @ x
    if lam.min() <= 0:
        return np.inf
    return float(c @ x - np.sum(np.log(lam)))


def _block_grad(c, A, x):
    lam = A @ x
    return c - A.T @ (1.0 / lam), lam


def _proj_grad(x, g, floor):
    pg = g.copy()
    at = x <= floor
    pg[at] = np.minimum(g[at], 0.0)
    return pg


def _kkt_tol(f):
    return 1e-5 * (1.0 + abs(f))


def _newton_block(c, A, x, floor, tol, max_iter):
    """Projected Newton with halving backtracking on one target block.

    Variables pinned at the floor with a positive gradient are held there
    (diagonally scaled step); the rest take a Newton step on their sub-block.
    """
    x = np.maximum(x, floor)
    f = _block_obj(c, A, x)
    trace = [f]
    it = 0
    for it in range(1, max_iter + 1):
        g, lam = _block_grad(c, A, x)
        pg = _proj_grad(x, g, floor)
        pgn = float(np.linalg.norm(pg))
        if pgn <= 1e-9 * (1.0 + abs(f)):
            break
        Aw = A / lam[:, None]
        H = Aw.T @ Aw
        eps = min(1e-6, pgn)
        active = (x <= floor + eps) & (g > 0)
        free = ~active
        d = np.zeros_like(x)
        d[active] = -g[active] / np.maximum(np.diag(H)[active], 1e-300)
        if free.any():
            Hf = H[np.ix_(free, free)]
            damp = 0.0
            for _ in range(11):
                try:
                    cf = cho_factor(Hf + damp * np.eye(Hf.shape[0]))
                    d[free] = -cho_solve(cf, g[free])
                    break
                except LinAlgError:
                    damp = 1e-8 if damp == 0.0 else 2 * damp
            else:
                d[free] = -g[free]
        step = 1.0
        accepted = False
        for _ in range(60):
            xn = np.maximum(x + step * d, floor)
            fn = _block_obj(c, A, xn)
            if fn <= f:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        assert fn <= f
        prev = f
        x, f = xn, fn
        trace.append(f)
        if abs(prev - f) / max(abs(prev), 1.0) < tol:
            g, _ = _block_grad(c, A, x)
            if np.linalg.norm(_proj_grad(x, g, floor)) <= _kkt_tol(f):
                break
    g, _ = _block_grad(c, A, x)
    pgn = float(np.linalg.norm(_proj_grad(x, g, floor)))
    return x, f, pgn <= _kkt_tol(f), it, pgn, trace


def _agd_block(c, A, x, floor, tol, max_iter):
    """Projected FISTA with backtracking, function-value restart and a
    diagonal rescaling taken from the Hessian at the starting point."""
    x = np.maximum(x, floor)
    g0, lam0 = _block_grad(c, A, x)
    Aw = A / lam0[:, None]
    scale = 1.0 / np.sqrt(np.maximum(np.einsum("ij,ij->j", Aw, Aw), 1e-300))
    # work in y = x / scale
    cs, As, fl = c * scale, A * scale, floor / scale
    y = x / scale
    f = _block_obj(cs, As, y)
    trace = [f]
    z, y_prev, theta, L = y.copy(), y.copy(), 1.0, 1.0
    it = 0
    restarted = False
    for it in range(1, max_iter + 1):
        gz, _ = _block_grad(cs, As, z)
        fz = _block_obj(cs, As, z)
        while True:
            yn = np.maximum(z - gz / L, fl)
            diff = yn - z
            fn = _block_obj(cs, As, yn)
            if fn <= fz + gz @ diff + 0.5 * L * (diff @ diff) + 1e-12 * abs(fz):
                break
            L *= 2.0
        if fn > f:
            if restarted:
                break  # no descent even from the iterate itself: at precision floor
            # restart momentum from the current iterate
            z, theta, restarted = y.copy(), 1.0, True
            continue
        restarted = False
        y_prev, y, f = y, yn, fn
        trace.append(f)
        gy, _ = _block_grad(cs, As, y)
        mapping = float(np.linalg.norm(y - np.maximum(y - gy, fl)))
        if mapping <= tol * 1e-2 * (1.0 + abs(f)):
            break
        theta_n = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta * theta))
        z = np.maximum(y + (theta - 1.0) / theta_n * (y - y_prev), fl)
        theta = theta_n
        L *= 0.9
    x = y * scale
    g, _ = _block_grad(c, A, x)
    pgn = float(np.linalg.norm(_proj_grad(x, g, floor)))
    return x, _block_obj(c, A, x), pgn <= _kkt_tol(f), it, pgn, trace


def initial_guess(series: EventSeries, calendar: TradingCalendar | None, rng=None):
    """Heuristic (mu0, alpha0): event rate and 0.2, jittered uniformly by x[0.5, 1.5] when rng is given."""
    total = calendar.total_time if calendar is not None else series.horizon
    M = series.dims
    mu0 = np.maximum(np.array(series.counts, dtype=float) / total, 1e-6)
    alpha0 = np.full((M, M), 0.2)
    if rng is not None:
        mu0 = mu0 * rng.uniform(0.5, 1.5, M)
        alpha0 = alpha0 * rng.uniform(0.5, 1.5, (M, M))
    return mu0, alpha0


def inner_minimize(series: EventSeries, calendar: TradingCalendar | None, beta,
                   config: OptimConfig = OptimConfig(), init=None, blocks=None) -> InnerResult:
    """Global minimiser of the NLL over (mu, alpha) at fixed beta."""
    beta = np.asarray(beta, dtype=float)
    if np.any(beta <= 0):
        raise HawkesError("beta must be strictly positive")
    if blocks is None:
        blocks = design_blocks(series, calendar, beta)
    if init is None:
        init = initial_guess(series, calendar, np.random.default_rng(config.seed))
    mu0, alpha0 = init
    solver = _newton_block if config.inner_method == "projected-newton" else _agd_block
    M = series.dims
    x = np.column_stack([mu0, alpha0])
    out = np.empty_like(x)
    total, converged, iters, pg2, traces = 0.0, True, 0, 0.0, []
    for m, (c, A) in enumerate(blocks):
        xm, fm, ok, it, pgn, tr = solver(c, A, x[m], config.param_floor, config.inner_tol, config.inner_max_iter)
        if not np.isfinite(fm):
            raise InfeasibleLikelihoodError(f"inner solve infeasible for target dimension {m}")
        out[m] = xm
        total += fm
        converged &= ok
        iters = max(iters, it)
        pg2 += pgn * pgn
        traces.append(tr)
    if not converged:
        log.debug("inner solve did not meet tolerance at beta=%s", beta.tolist())
    return InnerResult(out[:, 0].copy(), out[:, 1:].reshape(M, M).copy(), total,
                       bool(converged), iters, float(np.sqrt(pg2)), traces)


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    nit: int
    nfev: int
    converged: bool


def nelder_mead(fun, x0, step=0.25, xtol=1e-4, ftol=1e-10, max_iter=None) -> SimplexResult:
    """Plain Nelder-Mead (reflection 1, expansion 2, contraction 0.5, shrink 0.5).

    The initial simplex perturbs each coordinate of ``x0`` by ``step``. Stops
    when every vertex is within ``xtol`` (max-norm) of the best one, or when the
    vertex values agree to ``ftol`` relative.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    max_iter = 200 * n if max_iter is None else max_iter
    sim = np.vstack([x0] + [x0 + step * np.eye(n)[k] for k in range(n)])
    fs = np.array([fun(v) for v in sim])
    nfev = n + 1
    nit = 0
    converged = False
    while nit < max_iter:
        order = np.argsort(fs, kind="stable")
        sim, fs = sim[order], fs[order]
        if np.max(np.abs(sim[1:] - sim[0])) <= xtol or (
            np.isfinite(fs[-1]) and fs[-1] - fs[0] <= ftol * (1.0 + abs(fs[0]))
        ):
            converged = True
            break
        nit += 1
        centroid = sim[:-1].mean(axis=0)
        xr = centroid + (centroid - sim[-1])
        fr = fun(xr)
        nfev += 1
        if fr < fs[0]:
            xe = centroid + 2.0 * (centroid - sim[-1])
            fe = fun(xe)
            nfev += 1
            if fe < fr:
                sim[-1], fs[-1] = xe, fe
            else:
                sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-2]:
            sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-1]:
            xc = centroid + 0.5 * (xr - centroid)
            fc = fun(xc)
            nfev += 1
            if fc <= fr:
                sim[-1], fs[-1] = xc, fc
                continue
        else:
            xc = centroid + 0.5 * (sim[-1] - centroid)
            fc = fun(xc)
            nfev += 1
            if fc < fs[-1]:
                sim[-1], fs[-1] = xc, fc
                continue
        for k in range(1, n + 1):
            sim[k] = sim[0] + 0.5 * (sim[k] - sim[0])
            fs[k] = fun(sim[k])
            nfev += 1
    best = int(np.argmin(fs))
    return SimplexResult(sim[best].copy(), float(fs[best]), nit, nfev, converged)


def initial_decays(series: EventSeries) -> np.ndarray:
    """beta0[m, n] = 1 / (mean inter-arrival time of target dimension m)."""
    M = series.dims
    rows = []
    for t in series.times:
        gap = np.mean(np.diff(t)) if t.size > 1 else series.horizon
        rows.append(np.full(M, 1.0 / gap))
    return np.array(rows)


def fit_2shlo(series: EventSeries, calendar: TradingCalendar | None = None,
              config: OptimConfig = OptimConfig(), beta0=None) -> FitResult:
    for j, n in enumerate(series.counts):
        if n < MIN_EVENTS:
            raise HawkesError(f"dimension {j} has {n} events; at least {MIN_EVENTS} are needed")
    M = series.dims
    rng = np.random.default_rng(config.seed)
    z0 = np.log(initial_decays(series) if beta0 is None else np.asarray(beta0, dtype=float)).ravel()
    state = {"init": initial_guess(series, calendar, rng), "best": None}
    trace = []

    def objective(z):
        beta = np.exp(np.clip(z, -50.0, 50.0)).reshape(M, M)
        init = state["init"] if config.warm_start else initial_guess(series, calendar, rng)
        try:
            res = inner_minimize(series, calendar, beta, config, init=init)
        except InfeasibleLikelihoodError:
            trace.append((beta, np.inf))
            return np.inf
        trace.append((beta, res.nll))
        if state["best"] is None or res.nll < state["best"][1].nll:
            state["best"] = (beta, res)
        if config.warm_start:
            state["init"] = (res.mu, res.alpha)
        return res.nll

    def run(z):
        return nelder_mead(objective, z, step=0.25, xtol=config.outer_tol,
                           ftol=config.outer_ftol, max_iter=config.outer_max_iter)

    simplex = run(z0)
    nit, nfev, probes = simplex.nit, simplex.nfev, 0
    for _ in range(config.outer_probe_rounds):
        if state["best"] is None:
            break
        start = state["best"][1].nll
        for k in range(z0.size):
            for mult in config.probe_multipliers:
                trial = np.log(state["best"][0]).ravel()
                trial[k] = z0[k] + np.log(mult)
                objective(trial)
                probes += 1
        if state["best"][1].nll >= start - config.outer_ftol * (1.0 + abs(start)):
            break
        log.info("decay probe improved nll by %.6g; restarting simplex", start - state["best"][1].nll)
        simplex = run(np.log(state["best"][0]).ravel())
        nit += simplex.nit
        nfev += simplex.nfev
    if state["best"] is None:
        raise InfeasibleLikelihoodError("every inner solve was infeasible")
    beta, res = state["best"]
    params = ExpHawkesParams(res.mu, res.alpha, beta)
    value = nll_daygap(params, series, calendar)
    return FitResult(
        params=params,
        nll=value,
        outer_iterations=nit,
        inner_trace=trace,
        converged=bool(simplex.converged and res.converged),
        model="daygap" if calendar is not None and calendar.day_count > 1 else "hawkes",
        diagnostics={
            "outer_evaluations": nfev + probes,
            "probe_evaluations": probes,
            "inner_converged": res.converged,
            "inner_iterations": res.iterations,
            "projected_gradient": res.projected_gradient,
            "outer_converged": simplex.converged,
        },
    )


BOWSHER_NAMES = ("mu", "pi", "rho", "alpha", "beta")


def bowsher_start(series: EventSeries, calendar: TradingCalendar) -> np.ndarray:
    t = series.times[0]
    rate = t.size / calendar.total_time
    beta0 = 1.0 / np.mean(np.diff(t))
    return np.array([0.5 * rate, 0.3, 10.0 / calendar.day_length, 0.3 * beta0, beta0])


def fit_bowsher(series: EventSeries, calendar: TradingCalendar | None = None,
                config: OptimConfig = OptimConfig(), x0=None, step: float = 1e-6) -> FitResult:
    """L-BFGS-B over (mu, pi, rho, alpha, beta) with central-difference gradients.

    Optimisation runs on parameters divided by their starting values so the
    difference step and bounds act on comparable scales.
    """
    if series.dims != 1:
        raise HawkesError("the Bowsher model is univariate")
    if series.counts[0] < MIN_EVENTS:
        raise HawkesError(f"at least {MIN_EVENTS} events are needed")
    cal = TradingCalendar.single(series.horizon) if calendar is None else calendar
    p0 = bowsher_start(series, cal) if x0 is None else np.asarray(x0, dtype=float)
    scale = p0.copy()
    lower = config.param_floor / scale

    def f(u):
        p = np.maximum(u, lower) * scale
        try:
            return nll_bowsher(BowsherParams(*p), series, cal)
        except InfeasibleLikelihoodError:
            return 1e300

    def grad(u):
        g = np.empty_like(u)
        for k in range(u.size):
            e = np.zeros_like(u)
            e[k] = step
            if u[k] - step < lower[k]:
                g[k] = (f(u + e) - f(u)) / step
            else:
                g[k] = (f(u + e) - f(u - e)) / (2 * step)
        return g

    res = minimize(f, np.ones(5), jac=grad, method="L-BFGS-B",
                   bounds=[(lo, None) for lo in lower],
                   options={"maxiter": config.inner_max_iter, "ftol": 1e-12, "gtol": 1e-8})
    p = np.maximum(res.x, lower) * scale
    params = BowsherParams(*p)
    return FitResult(
        params=params,
        nll=nll_bowsher(params, series, cal),
        outer_iterations=int(res.nit),
        inner_trace=[],
        converged=bool(res.success),
        model="bowsher",
        diagnostics={"message": str(res.message), "evaluations": int(res.nfev)},
    )

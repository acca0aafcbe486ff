"""Command-line front end: ``hawkes2s {simulate,fit,gof,landscape,stats}``.

Every command writes its main output to ``--out`` and a JSON sidecar
``<out>.meta.json`` recording inputs (with SHA-256), seed and configuration.
Exit status is 0 whenever the computation completed, including fits that did
not meet their convergence tolerance.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import platform
import sys
from datetime import time
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    BowsherParams,
    EventSeries,
    ExpHawkesParams,
    HawkesError,
    TradingCalendar,
    stability_check,
)
from .formats import (
    fmt,
    is_trade_csv,
    read_calendar,
    read_events,
    read_params,
    sha256,
    write_calendar,
    write_events,
    write_fit,
)
from .gof import interarrival_stats, ks_exp1, qq_points, rescaled_durations
from .ingest import IngestConfig, auto_bin_edges, build_series, parse_trades
from .likelihood import nll_daygap
from .optimize import OptimConfig, fit_2shlo, fit_bowsher
from .simulate import RNG_ID, SimConfig, simulate_bowsher, simulate_hawkes

log = logging.getLogger("hawkes2s")


def _matrix_arg(text: str) -> np.ndarray:
    return np.array([[float(v) for v in row.replace(",", " ").split()] for row in text.split(";")])


def _write_meta(out: Path, command: str, args: argparse.Namespace, inputs: list, extra=None):
    meta = {
        "command": command,
        "tool": "hawkes2s",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "argv": sys.argv[1:],
        "args": {k: v for k, v in vars(args).items() if k != "func"},
        "inputs": {str(p): sha256(p) for p in inputs if p},
    }
    meta.update(extra or {})
    Path(str(out) + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n")


def _ingest_config(args) -> IngestConfig:
    edges = tuple(float(v) for v in args.bins.split(",")) if args.bins else ()
    return IngestConfig(
        open_time=time.fromisoformat(args.open),
        close_time=time.fromisoformat(args.close),
        volume_bin_edges=edges,
        index_filter=tuple(args.index_filter.split(",")) if args.index_filter else (),
        tie_policy=args.tie_policy,
        timezone=args.tz,
    )


def _load_data(args):
    """(series, calendar or None, labels) from a trade CSV or an event file."""
    path = args.events
    if is_trade_csv(path):
        cfg = _ingest_config(args)
        records = parse_trades(path, cfg)
        if args.split == "by-volume-bin" and not cfg.volume_bin_edges and args.auto_bins:
            from dataclasses import replace
            cfg = replace(cfg, volume_bin_edges=auto_bin_edges([r.volume for r in records], args.auto_bins))
        built = build_series(records, cfg, args.split)
        if built.dropped:
            log.info("dropped %d records (outside trading hours or ties)", built.dropped)
        return built.series, built.calendar, list(built.labels)
    series = read_events(path)
    calendar = read_calendar(args.calendar) if args.calendar else None
    return series, calendar, [str(j) for j in range(series.dims)]


def _params_from_args(args):
    if args.params:
        return read_params(args.params)
    if args.model == "bowsher":
        raise HawkesError("Bowsher parameters must come from a --params file")
    if args.mu is None or args.alpha is None or args.beta is None:
        raise HawkesError("give --params or all of --mu, --alpha, --beta")
    return ExpHawkesParams([float(v) for v in args.mu.replace(",", " ").split()],
                           _matrix_arg(args.alpha), _matrix_arg(args.beta))


def cmd_simulate(args) -> int:
    params = _params_from_args(args)
    calendar = read_calendar(args.calendar) if args.calendar else None
    if args.horizon is None and args.max_events is None:
        raise HawkesError("give --horizon or --max-events")
    if args.model == "daygap" and calendar is None:
        raise HawkesError("the day-gap model needs --calendar")
    config = SimConfig(seed=args.seed, horizon=args.horizon, max_events=args.max_events, calendar=calendar)
    extra = {"rng": RNG_ID, "seed": args.seed}
    if isinstance(params, BowsherParams):
        cal = calendar or TradingCalendar.single(args.horizon)
        series = simulate_bowsher(params, cal, SimConfig(seed=args.seed, horizon=args.horizon,
                                                         max_events=args.max_events))
    else:
        report = stability_check(params)
        extra["spectral_radius"] = report.spectral_radius
        series = simulate_hawkes(params, config)
    write_events(args.out, series)
    extra["horizon"] = series.horizon
    extra["counts"] = series.counts
    _write_meta(Path(args.out), "simulate", args, [args.params, args.calendar], extra)
    print(f"simulated {len(series)} events in {series.dims} dimension(s); horizon={series.horizon:g}; "
          f"counts={series.counts}")
    return 0


def _optim_config(args) -> OptimConfig:
    return OptimConfig(
        inner_method=args.inner_method,
        inner_tol=args.tol_inner,
        inner_max_iter=args.max_inner,
        outer_tol=args.tol_outer,
        outer_max_iter=args.max_outer,
        seed=args.seed,
        warm_start=not args.random_init,
        outer_probe_rounds=args.probe_rounds,
    )


def cmd_fit(args) -> int:
    series, calendar, labels = _load_data(args)
    config = _optim_config(args)
    model = args.model or ("daygap" if calendar is not None else "hawkes")
    if model == "hawkes":
        calendar = None
    elif calendar is None:
        raise HawkesError(f"model {model!r} needs a calendar (--calendar or a trade CSV)")
    radius = None
    if model == "bowsher":
        fit = fit_bowsher(series, calendar, config)
    else:
        fit = fit_2shlo(series, calendar, config)
        fit.model = model
        radius = stability_check(fit.params).spectral_radius
    out = Path(args.out)
    write_fit(out, fit, labels, radius)
    inputs = [args.events, args.calendar]
    if is_trade_csv(args.events):
        write_events(str(out) + ".events.csv", series)
        write_calendar(str(out) + ".calendar.csv", calendar or TradingCalendar.single(series.horizon))
    _write_meta(out, "fit", args, inputs, {"seed": args.seed, "config": vars(config), "labels": labels})
    p = fit.params
    if isinstance(p, BowsherParams):
        desc = " ".join(f"{k}={fmt(getattr(p, k))}" for k in ("mu", "pi", "rho", "alpha", "beta"))
    else:
        desc = (f"mu={np.array2string(p.mu, precision=6)} alpha={np.array2string(p.alpha.ravel(), precision=4)} "
                f"beta={np.array2string(p.beta.ravel(), precision=4)}")
    print(f"fit model={model} nll={fit.nll:.6f} converged={str(fit.converged).lower()} "
          f"outer_iterations={fit.outer_iterations} {desc}")
    return 0


def cmd_gof(args) -> int:
    series, calendar, labels = _load_data(args)
    params = read_params(args.params)
    dims = 1 if isinstance(params, BowsherParams) else params.M
    if dims != series.dims:
        raise HawkesError(f"params have {dims} dimensions but the data has {series.dims}")
    durations = rescaled_durations(params, series, calendar)
    out = Path(args.out)
    qq_path = Path(args.qq) if args.qq else out.with_suffix(".qq.csv")
    lines = ["dimension,label,count,ks_statistic,p_value,mean_duration,std_duration"]
    with open(qq_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["dimension", "theoretical", "empirical"])
        for j, d in enumerate(durations):
            if d.size >= 10 and np.all(d > 0):
                stat, p = ks_exp1(d)
                ks = f"{fmt(stat)},{fmt(p)}"
            else:
                ks = "nan,nan"
            std = float(np.std(d, ddof=1)) if d.size > 1 else float("nan")
            mean = float(np.mean(d)) if d.size else float("nan")
            lines.append(f"{j},{labels[j]},{d.size},{ks},{fmt(mean)},{fmt(std)}")
            if d.size:
                for th, em in qq_points(d):
                    w.writerow([j, fmt(th), fmt(em)])
    out.write_text("\n".join(lines) + "\n")
    _write_meta(out, "gof", args, [args.events, args.params, args.calendar], {"qq": str(qq_path)})
    print("\n".join(lines))
    return 0


def _coord(text: str, M: int) -> tuple[int, int]:
    r, c = (int(v) for v in text.split(","))
    if not (0 <= r < M and 0 <= c < M):
        raise HawkesError(f"coordinate ({r},{c}) is outside the {M}x{M} beta matrix")
    return r, c


def landscape_grid(params: ExpHawkesParams, series: EventSeries, calendar, coord_a, coord_b,
                   values_a, values_b) -> np.ndarray:
    """Rows (beta_a, beta_b, nll) over the product grid, other parameters fixed."""
    rows = []
    for a in values_a:
        for b in values_b:
            beta = np.array(params.beta)
            beta[coord_a] = a
            beta[coord_b] = b
            try:
                value = nll_daygap(ExpHawkesParams(params.mu, params.alpha, beta), series, calendar)
            except HawkesError:
                value = float("inf")
            rows.append((a, b, value))
    return np.array(rows)


def cmd_landscape(args) -> int:
    series, calendar, _ = _load_data(args)
    params = read_params(args.params)
    if isinstance(params, BowsherParams):
        raise HawkesError("landscape needs an exponential Hawkes parameter file")
    ca, cb = _coord(args.coord_a, params.M), _coord(args.coord_b, params.M)
    space = np.geomspace if args.log_spacing else np.linspace
    na = args.grid_a or args.grid
    nb = args.grid_b or args.grid
    va = space(args.range_a[0], args.range_a[1], na)
    vb = space(args.range_b[0], args.range_b[1], nb)
    grid = landscape_grid(params, series, calendar, ca, cb, va, vb)
    out = Path(args.out)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["beta_a", "beta_b", "nll"])
        for a, b, v in grid:
            w.writerow([fmt(a), fmt(b), fmt(v)])
    k = int(np.argmin(grid[:, 2]))
    _write_meta(out, "landscape", args, [args.events, args.params, args.calendar],
                {"minimum": {"beta_a": grid[k, 0], "beta_b": grid[k, 1], "nll": grid[k, 2]}})
    print(f"grid {na}x{nb}: minimum nll={grid[k, 2]:.6f} at beta{list(ca)}={grid[k, 0]:.6g}, "
          f"beta{list(cb)}={grid[k, 1]:.6g}")
    return 0


def cmd_stats(args) -> int:
    series, _, labels = _load_data(args)
    lines = ["dimension,label,mean_min,std_min,q1_min,q2_min,q3_min,count"]
    for j in range(series.dims):
        try:
            s = interarrival_stats(series, j)
        except HawkesError:
            lines.append(f"{j},{labels[j]},unavailable,unavailable,unavailable,unavailable,unavailable,"
                         f"{series.counts[j]}")
            continue
        vals = ",".join(fmt(v / 60.0) for v in (s.mean, s.std, s.q1, s.q2, s.q3))
        lines.append(f"{j},{labels[j]},{vals},{s.count}")
    out = Path(args.out)
    out.write_text("\n".join(lines) + "\n")
    _write_meta(out, "stats", args, [args.events, args.calendar])
    print("\n".join(lines))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hawkes2s", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("events", help="event CSV (timestamp_seconds,dimension) or trade CSV")
    data.add_argument("--calendar", help="calendar CSV (open,close seconds) for event files")
    data.add_argument("--split", choices=["by-index", "by-volume-bin"], default="by-index")
    data.add_argument("--bins", help="comma-separated volume bin edges")
    data.add_argument("--auto-bins", type=int, metavar="K",
                      help="volume bins from k-means on log-volume (heuristic)")
    data.add_argument("--index-filter", help="comma-separated allowed index codes")
    data.add_argument("--open", default="07:00")
    data.add_argument("--close", default="17:00")
    data.add_argument("--tz", default="Europe/London")
    data.add_argument("--tie-policy", choices=["drop", "jitter"], default="jitter")

    p = sub.add_parser("simulate", help="simulate an event series by thinning")
    p.add_argument("--params")
    p.add_argument("--model", choices=["hawkes", "daygap", "bowsher"], default="hawkes")
    p.add_argument("--mu", help="baseline vector, e.g. '0.1 0.2'")
    p.add_argument("--alpha", help="matrix rows separated by ';'")
    p.add_argument("--beta", help="matrix rows separated by ';'")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--horizon", type=float)
    p.add_argument("--max-events", type=int)
    p.add_argument("--calendar")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    defaults = OptimConfig()
    p = sub.add_parser("fit", parents=[data], help="fit by two-stage likelihood optimisation")
    p.add_argument("--model", choices=["hawkes", "daygap", "bowsher"])
    p.add_argument("--inner-method", choices=["projected-newton", "accelerated-gradient"],
                   default=defaults.inner_method)
    p.add_argument("--tol-inner", type=float, default=defaults.inner_tol)
    p.add_argument("--tol-outer", type=float, default=defaults.outer_tol)
    p.add_argument("--max-inner", type=int, default=defaults.inner_max_iter)
    p.add_argument("--max-outer", type=int, default=None)
    p.add_argument("--random-init", action="store_true", help="random inner start at every outer step")
    p.add_argument("--probe-rounds", type=int, default=defaults.outer_probe_rounds,
                   help="rounds of per-decay probing and simplex restart after convergence (0 disables)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("gof", parents=[data], help="time-rescaling residual analysis")
    p.add_argument("--params", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--qq", help="Q-Q table path (default <out>.qq.csv)")
    p.set_defaults(func=cmd_gof)

    p = sub.add_parser("landscape", parents=[data], help="NLL over a grid of two decays")
    p.add_argument("--params", required=True)
    p.add_argument("--coord-a", default="0,0")
    p.add_argument("--coord-b", default="1,1")
    p.add_argument("--range-a", type=float, nargs=2, required=True)
    p.add_argument("--range-b", type=float, nargs=2, required=True)
    p.add_argument("--grid", type=int, default=25)
    p.add_argument("--grid-a", type=int)
    p.add_argument("--grid-b", type=int)
    p.add_argument("--log-spacing", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_landscape)

    p = sub.add_parser("stats", parents=[data], help="inter-arrival statistics (minutes)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (HawkesError, OSError) as exc:
        print(f"hawkes2s {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

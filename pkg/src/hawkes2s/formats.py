"""Plain-text file formats used by the CLI.

Parameter / fit files are ``key = value`` lines. Vectors are space separated,
matrix rows are given one per line as ``name[row] = v0 v1 ...``. Lines starting
with ``#`` are comments and a line ``[section]`` ends the key-value part
(fit files append their iteration trace after ``[trace]``). Example::

    model = hawkes
    mu = 0.1 0.2
    alpha[0] = 0.5 0
    alpha[1] = 0.4 0.3
    beta[0] = 0.3 1
    beta[1] = 0.2 0.2

A Bowsher file sets ``model = bowsher`` and scalar ``mu pi rho alpha beta``.

Event files are CSV ``timestamp_seconds,dimension`` with ``# horizon = T`` and
``# dims = M`` comment lines; calendar files are CSV ``open,close`` in seconds.
"""
from __future__ import annotations

import csv
import hashlib
import re

import numpy as np

from .core import BowsherParams, EventSeries, ExpHawkesParams, FitResult, HawkesError, TradingCalendar

_ROW = re.compile(r"^(\w+)\[(\d+)\]$")


def fmt(x: float) -> str:
    return repr(float(x))


def read_keyvalues(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("["):
                break
            if "=" not in line:
                raise HawkesError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key] = value
    return out


def _vector(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.split()])


def _matrix(kv: dict, name: str, M: int) -> np.ndarray:
    rows = []
    for r in range(M):
        key = f"{name}[{r}]"
        if key not in kv:
            raise HawkesError(f"missing matrix row {key}")
        rows.append(_vector(kv[key]))
    return np.array(rows)


def read_params(path) -> ExpHawkesParams | BowsherParams:
    kv = read_keyvalues(path)
    if kv.get("model", "hawkes") == "bowsher":
        return BowsherParams(*(float(kv[k]) for k in ("mu", "pi", "rho", "alpha", "beta")))
    mu = _vector(kv["mu"])
    M = mu.size
    return ExpHawkesParams(mu, _matrix(kv, "alpha", M), _matrix(kv, "beta", M))


def _matrix_lines(name: str, a) -> list[str]:
    return [f"{name}[{r}] = " + " ".join(fmt(v) for v in row) for r, row in enumerate(np.atleast_2d(a))]


def params_lines(params) -> list[str]:
    if isinstance(params, BowsherParams):
        return ["model = bowsher"] + [f"{k} = {fmt(getattr(params, k))}" for k in ("mu", "pi", "rho", "alpha", "beta")]
    return (["model = hawkes", "mu = " + " ".join(fmt(v) for v in params.mu)]
            + _matrix_lines("alpha", params.alpha) + _matrix_lines("beta", params.beta))


def write_params(path, params):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(params_lines(params)) + "\n")


def fit_lines(fit: FitResult, labels=None, radius=None) -> list[str]:
    """Parameters plus human-unit views (inverse rates in minutes) and diagnostics."""
    lines = params_lines(fit.params)
    lines[0] = f"model = {'bowsher' if fit.model == 'bowsher' else 'hawkes'}"
    lines.append(f"fit_model = {fit.model}")
    if labels:
        lines.append("labels = " + " ".join(labels))
    lines += [f"nll = {fmt(fit.nll)}", f"converged = {str(fit.converged).lower()}",
              f"outer_iterations = {fit.outer_iterations}"]
    for k, v in fit.diagnostics.items():
        lines.append(f"diag.{k} = {v}")
    p = fit.params
    with np.errstate(divide="ignore"):
        if isinstance(p, BowsherParams):
            lines += [f"mu_inv_minutes = {fmt(1 / p.mu / 60)}", f"beta_inv_minutes = {fmt(1 / p.beta / 60)}",
                      f"rho_inv_minutes = {fmt(1 / p.rho / 60)}", f"branching_ratio = {fmt(p.alpha / p.beta)}"]
        else:
            lines.append("mu_inv_minutes = " + " ".join(fmt(v) for v in 1 / p.mu / 60))
            lines += _matrix_lines("beta_inv_minutes", 1 / p.beta / 60)
            lines += _matrix_lines("branching", p.alpha)
            if radius is not None:
                lines.append(f"spectral_radius = {fmt(radius)}")
    return lines


def write_fit(path, fit: FitResult, labels=None, radius=None):
    lines = fit_lines(fit, labels, radius)
    if fit.inner_trace:
        lines.append("[trace]")
        lines.append("# evaluation beta(row-major) nll")
        for k, (beta, value) in enumerate(fit.inner_trace):
            lines.append(f"{k} " + " ".join(fmt(v) for v in np.ravel(beta)) + f" {fmt(value)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_events(path, series: EventSeries):
    rows = sorted((t, j) for j, ts in enumerate(series.times) for t in ts)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# horizon = {fmt(series.horizon)}\n# dims = {series.dims}\n")
        w = csv.writer(fh)
        w.writerow(["timestamp_seconds", "dimension"])
        for t, j in rows:
            w.writerow([fmt(t), j])


def read_events(path) -> EventSeries:
    meta = {}
    data = []
    with open(path, encoding="utf-8") as fh:
        body = []
        for line in fh:
            if line.startswith("#"):
                if "=" in line:
                    k, v = line[1:].split("=", 1)
                    meta[k.strip()] = v.strip()
            else:
                body.append(line)
    reader = csv.reader(body)
    header = next(reader, None)
    if header is None or [h.strip() for h in header[:2]] != ["timestamp_seconds", "dimension"]:
        raise HawkesError(f"{path}: header must be timestamp_seconds,dimension")
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            data.append((float(row[0]), int(row[1])))
        except (ValueError, IndexError):
            raise HawkesError(f"{path}: malformed row {lineno}: {row}") from None
    dims = int(meta.get("dims", 1 + max((j for _, j in data), default=0)))
    parts = [[] for _ in range(dims)]
    for t, j in data:
        parts[j].append(t)
    horizon = float(meta["horizon"]) if "horizon" in meta else max(t for t, _ in data)
    return EventSeries([sorted(p) for p in parts], horizon)


def is_trade_csv(path) -> bool:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            return line.strip().lower().startswith("timestamp,index,volume")
    return False


def write_calendar(path, calendar: TradingCalendar):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["open", "close"])
        for a, b in calendar.intervals:
            w.writerow([fmt(a), fmt(b)])


def read_calendar(path) -> TradingCalendar:
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["open", "close"]:
            raise HawkesError(f"{path}: header must be open,close")
        return TradingCalendar([(float(a), float(b)) for a, b in reader if a.strip()])


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()

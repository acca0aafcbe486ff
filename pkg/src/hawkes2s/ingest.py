"""Trade-report CSV ingestion: records -> EventSeries + TradingCalendar.

CSV schema (header required): ``timestamp,index,volume[,flags]`` with ISO-8601
timestamps, decimal volumes and optional semicolon-separated flags.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from datetime import datetime, time, timedelta, timezone
from zoneinfo import ZoneInfo

import numpy as np

from .core import EventSeries, HawkesError, TradingCalendar

log = logging.getLogger(__name__)

DROP_FLAGS = frozenset({"roll", "switch"})
JITTER = 1e-6


class IngestError(HawkesError):
    pass


@dataclass(frozen=True)
class TradeRecord:
    timestamp: datetime
    index_code: str
    volume: float
    flags: frozenset = frozenset()


@dataclass(frozen=True)
class IngestConfig:
    open_time: time = time(7, 0)
    close_time: time = time(17, 0)
    volume_bin_edges: tuple = ()
    index_filter: tuple = ()
    tie_policy: str = "jitter"
    timezone: str = "Europe/London"

    def __post_init__(self):
        if not self.open_time < self.close_time:
            raise IngestError("open_time must precede close_time")
        edges = list(self.volume_bin_edges)
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise IngestError("volume bin edges must be strictly ascending")
        if self.tie_policy not in ("drop", "jitter"):
            raise IngestError(f"unknown tie policy {self.tie_policy!r}")

    @property
    def tz(self) -> ZoneInfo:
        return ZoneInfo(self.timezone)


@dataclass
class BuiltSeries:
    series: EventSeries
    calendar: TradingCalendar
    labels: list
    dropped: int = 0
    origin: datetime | None = None
    warnings: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.series, self.calendar, self.labels))


def _parse_time(text: str, tz: ZoneInfo) -> datetime:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        return ts.replace(tzinfo=tz)
    return ts.astimezone(tz)


def parse_trades(path, config: IngestConfig = IngestConfig()) -> list[TradeRecord]:
    tz = config.tz
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise IngestError(f"{path}: missing header")
        header = [h.strip().lower() for h in header]
        if header[:3] != ["timestamp", "index", "volume"]:
            raise IngestError(f"{path}: header must start with timestamp,index,volume")
        has_flags = len(header) > 3 and header[3] == "flags"
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 3:
                raise IngestError(f"{path}:{lineno}: expected at least 3 fields, got {len(row)}")
            try:
                ts = _parse_time(row[0], tz)
            except ValueError:
                raise IngestError(f"{path}:{lineno}: bad timestamp {row[0]!r}") from None
            code = row[1].strip()
            try:
                volume = float(row[2])
            except ValueError:
                raise IngestError(f"{path}:{lineno}: bad volume {row[2]!r}") from None
            if not volume >= 0:
                raise IngestError(f"{path}:{lineno}: negative volume {volume}")
            if config.index_filter and code not in config.index_filter:
                raise IngestError(f"{path}:{lineno}: unknown index code {code!r}")
            flags = frozenset()
            if has_flags and len(row) > 3:
                flags = frozenset(f.strip().lower() for f in row[3].split(";") if f.strip())
            if flags & DROP_FLAGS:
                continue
            records.append(TradeRecord(ts, code, volume, flags))
    return records


def write_trades(path, records, with_flags: bool = True):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "index", "volume"] + (["flags"] if with_flags else []))
        for r in records:
            row = [r.timestamp.isoformat(), r.index_code, repr(float(r.volume))]
            if with_flags:
                row.append(";".join(sorted(r.flags)))
            w.writerow(row)


def auto_bin_edges(volumes, k: int = 3, iters: int = 100) -> tuple:
    """Bin edges from 1-D k-means on log-volume (a heuristic, quantile-seeded)."""
    v = np.log(np.asarray(volumes, dtype=float)[np.asarray(volumes) > 0])
    if v.size < k:
        raise IngestError("not enough positive volumes for automatic bins")
    centers = np.quantile(v, (np.arange(k) + 0.5) / k)
    for _ in range(iters):
        labels = np.argmin(np.abs(v[:, None] - centers[None, :]), axis=1)
        new = np.array([v[labels == j].mean() if np.any(labels == j) else centers[j] for j in range(k)])
        if np.allclose(new, centers):
            break
        centers = new
    centers = np.sort(centers)
    return tuple(float(np.exp(0.5 * (a + b))) for a, b in zip(centers, centers[1:]))


def _resolve_ties(t: np.ndarray, policy: str) -> tuple[np.ndarray, int]:
    if t.size < 2:
        return t, 0
    if policy == "drop":
        keep = np.concatenate([[True], np.diff(t) > 0])
        return t[keep], int(np.sum(~keep))
    out = t.copy()
    for k in range(1, out.size):
        if out[k] <= out[k - 1]:
            out[k] = out[k - 1] + JITTER
    return out, 0


def build_series(records, config: IngestConfig = IngestConfig(), split: str = "by-index") -> BuiltSeries:
    """Convert trade records to seconds since the first trading-day open."""
    if not records:
        raise IngestError("no records")
    tz = config.tz
    local = [r.timestamp.astimezone(tz) for r in records]
    opens_of = {}
    inside = []
    for ts in local:
        d = ts.date()
        if d not in opens_of:
            opens_of[d] = (datetime.combine(d, config.open_time, tz), datetime.combine(d, config.close_time, tz))
        o, c = opens_of[d]
        inside.append(o <= ts < c)
    inside = np.array(inside)
    dropped = int(np.sum(~inside))
    kept = [k for k in range(len(records)) if inside[k]]
    if not kept:
        raise IngestError("all records fall outside trading hours")
    dates = sorted({local[k].date() for k in kept})
    origin = opens_of[dates[0]][0]
    # absolute (UTC) differences; same-tzinfo subtraction would ignore DST shifts
    t0 = origin.timestamp()
    intervals = [(opens_of[d][0].timestamp() - t0, opens_of[d][1].timestamp() - t0) for d in dates]
    calendar = TradingCalendar(intervals)

    if split == "by-index":
        labels = sorted({records[k].index_code for k in kept})
        dim_of = {c: j for j, c in enumerate(labels)}
        assign = [dim_of[records[k].index_code] for k in kept]
    elif split == "by-volume-bin":
        codes = {records[k].index_code for k in kept}
        if len(codes) != 1:
            raise IngestError(f"volume-bin split needs exactly one index, found {sorted(codes)}")
        edges = list(config.volume_bin_edges)
        labels = ([f"<{edges[0]:g}"] if edges else ["all"]) + [
            f"[{a:g},{b:g})" for a, b in zip(edges, edges[1:])
        ] + ([f">={edges[-1]:g}"] if edges else [])
        assign = [int(np.searchsorted(edges, records[k].volume, side="right")) for k in kept]
    else:
        raise IngestError(f"unknown split {split!r}")

    secs = np.array([local[k].timestamp() - t0 for k in kept])
    assign = np.array(assign)
    parts = []
    warnings = []
    for j in range(len(labels)):
        t = np.sort(secs[assign == j], kind="stable")
        t, n_drop = _resolve_ties(t, config.tie_policy)
        dropped += n_drop
        if t.size == 0:
            warnings.append(f"dimension {labels[j]} is empty")
            log.warning("dimension %s is empty", labels[j])
        parts.append(t)
    horizon = calendar.intervals[-1][1]
    top = max((p[-1] for p in parts if p.size), default=0.0)
    series = EventSeries(parts, max(horizon, top))
    return BuiltSeries(series, calendar, labels, dropped, origin, warnings)


def seconds_to_datetimes(seconds, origin: datetime) -> list[datetime]:
    tz = origin.tzinfo
    base = origin.astimezone(timezone.utc)
    return [(base + timedelta(seconds=float(s))).astimezone(tz) for s in seconds]

"""Synthetic trade feed shaped like the public credit-index reports.

Three indices, ten London trading days (weekends skipped), 07:00-17:00,
generated from a day-gap exponential Hawkes model.  Run as a script to
regenerate the bundled copy in ``tests/data``.
"""
from datetime import date, datetime, timedelta
from pathlib import Path
from zoneinfo import ZoneInfo

import numpy as np

from hawkes2s.core import ExpHawkesParams, TradingCalendar
from hawkes2s.ingest import TradeRecord, write_trades
from hawkes2s.simulate import SimConfig, simulate_daygap

LONDON = ZoneInfo("Europe/London")
CODES = ("ITXEB", "ITXES", "ITXEX")
FIRST_DAY = date(2024, 1, 8)
DAYS = 10
BUNDLED = Path(__file__).parent / "data" / "feed_seed0.csv"

FEED_PARAMS = ExpHawkesParams(
    [0.03, 0.0225, 0.015],
    [[0.3, 0.2, 0.2], [0.2, 0.3, 0.2], [0.2, 0.25, 0.3]],
    [[1 / 60, 1 / 120, 1 / 180], [1 / 120, 1 / 90, 1 / 150], [1 / 150, 1 / 120, 1 / 100]],
)


def trading_days():
    days, d = [], FIRST_DAY
    while len(days) < DAYS:
        if d.weekday() < 5:
            days.append(d)
        d += timedelta(days=1)
    return days


def feed_calendar():
    days = trading_days()
    origin = datetime.combine(days[0], datetime.min.time().replace(hour=7), LONDON)
    opens = [(datetime.combine(d, origin.timetz()) - origin).total_seconds() for d in days]
    return origin, TradingCalendar([(o, o + 36000.0) for o in opens])


def make_feed(seed: int, path) -> None:
    origin, cal = feed_calendar()
    series = simulate_daygap(FEED_PARAMS, cal, SimConfig(seed=seed, horizon=cal.intervals[-1][1]))
    rng = np.random.default_rng(seed + 10_000)
    records = []
    for code, ts in zip(CODES, series.times):
        # micro-second timestamps, lognormal ticket sizes in millions
        for t in ts:
            records.append(TradeRecord(origin + timedelta(microseconds=round(t * 1e6)), code,
                                       round(float(rng.lognormal(2.5, 0.8)), 2)))
    records.sort(key=lambda r: (r.timestamp, r.index_code))
    write_trades(path, records)


if __name__ == "__main__":
    BUNDLED.parent.mkdir(exist_ok=True)
    make_feed(0, BUNDLED)
    print(BUNDLED)

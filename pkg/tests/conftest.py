import numpy as np
import pytest
from scipy.integrate import quad

from hawkes2s.core import BowsherParams, EventSeries, ExpHawkesParams, TradingCalendar

BENCH_MU = [0.1, 0.2]
BENCH_ALPHA = [[0.5, 0.0], [0.4, 0.3]]
# beta_01 is irrelevant (alpha_01 = 0) but must be positive here
BENCH_BETA = [[0.3, 1.0], [0.2, 0.2]]


@pytest.fixture
def bench_params():
    return ExpHawkesParams(BENCH_MU, BENCH_ALPHA, BENCH_BETA)


def random_params(rng, M, alpha_max=0.3):
    return ExpHawkesParams(
        rng.uniform(0.05, 0.5, M),
        rng.uniform(0.0, alpha_max, (M, M)),
        rng.uniform(0.1, 2.0, (M, M)),
    )


def random_series(rng, M, n_max, horizon):
    parts = []
    for _ in range(M):
        n = int(rng.integers(1, n_max + 1))
        parts.append(np.sort(rng.uniform(0, horizon, n)))
    return EventSeries(parts, horizon)


def random_daygap_series(rng, M, n_per_day, days, length=50.0, gap=30.0):
    cal = TradingCalendar([(d * (length + gap), d * (length + gap) + length) for d in range(days)])
    parts = []
    for _ in range(M):
        ts = []
        for a, b in cal.intervals:
            ts.append(rng.uniform(a, b, int(rng.integers(1, n_per_day + 1))))
        parts.append(np.sort(np.concatenate(ts)))
    return EventSeries(parts, cal.intervals[-1][1]), cal


def naive_intensity(params, series, t, i, calendar=None):
    """Direct O(n) sum over the history of one dimension pair set."""
    if calendar is not None:
        day = calendar.day_of(np.array([t]))[0]
        if day < 0:
            return 0.0
        start = calendar.intervals[day][0]
    else:
        start = -np.inf
    lam = params.mu[i]
    for j in range(params.M):
        for tk in series.times[j]:
            if start <= tk < t:
                lam += params.alpha[i, j] * params.beta[i, j] * np.exp(-params.beta[i, j] * (t - tk))
    return lam


def naive_nll(params, series, calendar=None):
    """O(n^2) negative log-likelihood straight from the definitions."""
    cal = calendar or TradingCalendar.single(series.horizon)
    total = 0.0
    for m in range(params.M):
        total += params.mu[m] * cal.total_time
        for n in range(params.M):
            for tk in series.times[n]:
                d = cal.day_of(np.array([tk]))[0]
                close = cal.intervals[d][1]
                total += params.alpha[m, n] * (1 - np.exp(-params.beta[m, n] * (close - tk)))
        for t in series.times[m]:
            total -= np.log(naive_intensity(params, series, t, m, calendar))
    return total


def bowsher_intensity(p: BowsherParams, times, cal: TradingCalendar, t):
    """Direct evaluation of the Bowsher intensity by per-day sums."""
    d_t = cal.day_of(np.array([t]))[0]
    if d_t < 0:
        return 0.0
    carry = 0.0
    for d, (a, b) in enumerate(cal.intervals):
        today = times[(times >= a) & (times <= b)]
        if d == d_t:
            spill = p.pi * carry * np.exp(-p.rho * (t - a))
            return p.mu + spill + np.sum(p.alpha * np.exp(-p.beta * (t - today[today < t])))
        carry = p.pi * carry * np.exp(-p.rho * (b - a)) + np.sum(p.alpha * np.exp(-p.beta * (b - today)))
    raise AssertionError


def piecewise_quad(f, cal, times):
    total = 0.0
    for a, b in cal.intervals:
        pts = sorted({a, b, *[x for x in times if a < x < b]})
        for lo, hi in zip(pts, pts[1:]):
            total += quad(f, lo, hi, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    return total


ACCEPTANCE_LINES = []


def report(number: int, title: str, ok: bool, detail: str):
    """Record and print one acceptance line; the summary hook repeats them at the end."""
    line = f"ACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

"""Compiled single-pass recursions shared by likelihood, gof and simulate."""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def pair_pass(tm, dm, tn, dn, beta, closes):
    """Forward pass for one (target m, source n) pair.

    Returns
      R[i] = sum over same-day source events t_k < tm[i] of exp(-beta (tm[i] - t_k))
      Q[i] = sum over all source events t_k < tm[i] of (1 - exp(-beta (min(tm[i], close_k) - t_k)))
      C    = sum over all source events of (1 - exp(-beta (close_k - t_k)))
    where close_k is the close of the source event's own day.
    """
    nm = tm.size
    nn = tn.size
    R = np.zeros(nm)
    Q = np.zeros(nm)
    s = 0.0
    count = 0.0
    past = 0.0
    anchor = 0.0
    day = -1
    k = 0
    for i in range(nm):
        t = tm[i]
        while k < nn and tn[k] < t:
            dk = dn[k]
            if dk != day:
                if day >= 0:
                    past += count - s * math.exp(-beta * (closes[day] - anchor))
                s = 0.0
                count = 0.0
                day = dk
                anchor = tn[k]
            s = s * math.exp(-beta * (tn[k] - anchor)) + 1.0
            anchor = tn[k]
            count += 1.0
            k += 1
        if day != dm[i]:
            if day >= 0:
                past += count - s * math.exp(-beta * (closes[day] - anchor))
            s = 0.0
            count = 0.0
            day = dm[i]
            anchor = t
        r = s * math.exp(-beta * (t - anchor))
        R[i] = r
        Q[i] = past + count - r
    while k < nn:
        dk = dn[k]
        if dk != day:
            if day >= 0:
                past += count - s * math.exp(-beta * (closes[day] - anchor))
            s = 0.0
            count = 0.0
            day = dk
            anchor = tn[k]
        s = s * math.exp(-beta * (tn[k] - anchor)) + 1.0
        anchor = tn[k]
        count += 1.0
        k += 1
    C = past
    if day >= 0:
        C += count - s * math.exp(-beta * (closes[day] - anchor))
    return R, Q, C


@njit(cache=True)
def bowsher_pass(s, day, bounds, mu, pi, rho, alpha, beta):
    """Intensity and compensator of the Bowsher model on a trading clock.

    ``s`` are event times on the trading clock (gaps removed), ``day`` their
    day index and ``bounds`` the cumulative day boundaries (length D + 1).
    Returns (intensity at each event, compensator at each event, total compensator).
    """
    n = s.size
    ndays = bounds.size - 1
    lam = np.empty(n)
    comp = np.empty(n)
    carry = 0.0  # stochastic level at the previous close
    done = 0.0  # compensator accumulated over finished days
    k = 0
    for d in range(ndays):
        b0 = bounds[d]
        b1 = bounds[d + 1]
        spill0 = pi * carry
        exc = 0.0  # sum exp(-beta (t - u)) over today's events, anchored at `anchor`
        cnt = 0.0
        anchor = b0
        while k < n and day[k] == d:
            t = s[k]
            e = exc * math.exp(-beta * (t - anchor))
            spill = spill0 * math.exp(-rho * (t - b0))
            lam[k] = mu + spill + alpha * e
            comp[k] = (done + mu * (t - b0) + spill0 / rho * -math.expm1(-rho * (t - b0))
                       + alpha / beta * (cnt - e))
            exc = e + 1.0
            anchor = t
            cnt += 1.0
            k += 1
        e_close = exc * math.exp(-beta * (b1 - anchor))
        done += (mu * (b1 - b0) + spill0 / rho * -math.expm1(-rho * (b1 - b0))
                 + alpha / beta * (cnt - e_close))
        carry = spill0 * math.exp(-rho * (b1 - b0)) + alpha * e_close
    return lam, comp, done


@njit(cache=True)
def thin_hawkes(mu, alpha, beta, opens, closes, max_events, rng):
    """Ogata thinning over a list of trading intervals.

    Excitation restarts from zero at each interval open. Returns (times, dims,
    max acceptance ratio seen). Stops after ``max_events`` acceptances when
    max_events > 0.
    """
    M = mu.size
    cap = 1024
    times = np.empty(cap)
    dims = np.empty(cap, dtype=np.int64)
    n = 0
    worst = 0.0
    exc = np.zeros((M, M))
    lam = np.empty(M)
    for d in range(opens.size):
        t = opens[d]
        end = closes[d]
        exc[:, :] = 0.0
        while True:
            total = 0.0
            for i in range(M):
                v = mu[i]
                for j in range(M):
                    v += exc[i, j]
                total += v
            if total <= 0.0:
                break
            u = rng.random()
            dt = -math.log(1.0 - u) / total
            if t + dt > end:
                break
            t += dt
            for i in range(M):
                v = mu[i]
                for j in range(M):
                    exc[i, j] *= math.exp(-beta[i, j] * dt)
                    v += exc[i, j]
                lam[i] = v
            new_total = 0.0
            for i in range(M):
                new_total += lam[i]
            ratio = new_total / total
            if ratio > worst:
                worst = ratio
            if rng.random() * total <= new_total:
                # pick the dimension proportionally to its intensity
                r = rng.random() * new_total
                j = 0
                acc = lam[0]
                while acc < r and j < M - 1:
                    j += 1
                    acc += lam[j]
                if n > 0 and dims[n - 1] == j and times[n - 1] >= t:
                    continue
                if n == cap:
                    cap *= 2
                    nt = np.empty(cap)
                    nd = np.empty(cap, dtype=np.int64)
                    nt[:n] = times[:n]
                    nd[:n] = dims[:n]
                    times = nt
                    dims = nd
                times[n] = t
                dims[n] = j
                n += 1
                for i in range(M):
                    exc[i, j] += alpha[i, j] * beta[i, j]
                if max_events > 0 and n >= max_events:
                    return times[:n], dims[:n], worst
    return times[:n], dims[:n], worst


@njit(cache=True)
def thin_bowsher(mu, pi, rho, alpha, beta, opens, closes, rng):
    """Thinning for the Bowsher model; the bound is reset at every interval open."""
    cap = 1024
    times = np.empty(cap)
    n = 0
    worst = 0.0
    carry = 0.0
    for d in range(opens.size):
        t0 = opens[d]
        end = closes[d]
        spill0 = pi * carry
        exc = 0.0
        t = t0
        while True:
            spill = spill0 * math.exp(-rho * (t - t0))
            total = mu + spill + exc
            if total <= 0.0:
                break
            u = rng.random()
            dt = -math.log(1.0 - u) / total
            if t + dt > end:
                break
            t += dt
            exc *= math.exp(-beta * dt)
            spill = spill0 * math.exp(-rho * (t - t0))
            new_total = mu + spill + exc
            ratio = new_total / total
            if ratio > worst:
                worst = ratio
            if rng.random() * total <= new_total:
                if n > 0 and times[n - 1] >= t:
                    continue
                if n == cap:
                    cap *= 2
                    nt = np.empty(cap)
                    nt[:n] = times[:n]
                    times = nt
                times[n] = t
                n += 1
                exc += alpha
        carry = spill0 * math.exp(-rho * (end - t0)) + exc * math.exp(-beta * (end - t))
    return times[:n], worst

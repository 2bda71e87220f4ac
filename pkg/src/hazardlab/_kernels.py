"""Hot numeric kernels with two interchangeable backends.

The default backend compiles the loop implementations with numba's @njit.
Setting HAZARDLAB_DISABLE_NUMBA=1 (or running where numba will not import)
selects pure-numpy implementations of the same contracts.  The random
stream is counter-based (splitmix64 applied to a slot index), so the
vectorized backend can generate draws in chunks while the loop backend
walks them one at a time, producing bit-identical uniform draws.  Values
derived through exp/log can differ between backends in the last ulp
(vector math vs libm); byte-level reproducibility is guaranteed within a
backend, which is what the determinism contract promises.

splitmix64: output j of a stream with seed s is mix64(s + (j+1) * GAMMA)
where GAMMA = 0x9E3779B97F4A7C15 and mix64 is

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27;  z *= 0x94D049BB133111EB
    z ^= z >> 31

A uniform in the open interval (0, 1) is ((z >> 11) + 0.5) * 2**-53.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "USING_NUMBA",
    "uniform_block",
    "sim_combination",
    "sim_combination_numpy",
    "sim_combination_jit",
    "cox_stats",
    "cox_stats_numpy",
    "cox_stats_jit",
    "cox_loglik",
    "cox_loglik_numpy",
    "cox_loglik_jit",
]

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_TWO = np.uint64(2)
_U01_SCALE = 2.0 ** -53

_disable = os.environ.get("HAZARDLAB_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _disable in ("1", "true", "yes", "on")

if not _DISABLED:
    try:
        from numba import njit as _njit
    except ImportError:
        _DISABLED = True

USING_NUMBA = not _DISABLED


def _mix64_np(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


def uniform_block(stream_seed: int, start: int, count: int) -> np.ndarray:
    """Draws [start, start + count) of the stream, each in (0, 1)."""
    idx = np.arange(start, start + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _mix64_np(np.uint64(stream_seed) + (idx + _ONE) * _GAMMA)
    return ((z >> _S11).astype(np.float64) + 0.5) * _U01_SCALE


# ---------------------------------------------------------------------------
# Campaign drives for one combination.
#
# Slot layout: drive i uses slot 2i for the raw weather draw and slot 2i+1
# for the event-time draw.  The weather slot is consumed even when the
# combination has no varying weather so layouts stay aligned.
# ---------------------------------------------------------------------------


def _sim_combination_loop(
    stream_seed,
    budget_s,
    horizon_s,
    rate,
    base_eta,
    beta_raw,
    raw_lo,
    raw_hi,
    shape,
    max_drives,
):
    cap = 1024
    durations = np.empty(cap, dtype=np.float64)
    events = np.empty(cap, dtype=np.bool_)
    raws = np.empty(cap, dtype=np.float64)
    count = 0
    consumed = 0.0
    seed = np.uint64(stream_seed)
    while consumed < budget_s:
        if count >= max_drives:
            raise ValueError("combination exceeds the drive-count safety cap")
        if count == cap:
            cap *= 2
            nd = np.empty(cap, dtype=np.float64)
            ne = np.empty(cap, dtype=np.bool_)
            nr = np.empty(cap, dtype=np.float64)
            nd[:count] = durations
            ne[:count] = events
            nr[:count] = raws
            durations, events, raws = nd, ne, nr
        i = np.uint64(count)
        zw = seed + (i * _TWO + _ONE) * _GAMMA
        zw = (zw ^ (zw >> _S30)) * _MIX1
        zw = (zw ^ (zw >> _S27)) * _MIX2
        zw = zw ^ (zw >> _S31)
        u_w = (np.float64(zw >> _S11) + 0.5) * _U01_SCALE
        ze = seed + (i * _TWO + _TWO) * _GAMMA
        ze = (ze ^ (ze >> _S30)) * _MIX1
        ze = (ze ^ (ze >> _S27)) * _MIX2
        ze = ze ^ (ze >> _S31)
        u_e = (np.float64(ze >> _S11) + 0.5) * _U01_SCALE
        raw = raw_lo + u_w * (raw_hi - raw_lo)
        lam = rate * np.exp(base_eta + beta_raw * raw)
        if shape == 1.0:
            t = -np.log(u_e) / lam
        else:
            t = (-np.log(u_e)) ** (1.0 / shape) / lam
        if t < horizon_s:
            durations[count] = t
            events[count] = True
        else:
            durations[count] = horizon_s
            events[count] = False
        raws[count] = raw
        consumed += durations[count]
        count += 1
    return durations[:count].copy(), events[:count].copy(), raws[:count].copy()


def sim_combination_numpy(
    stream_seed,
    budget_s,
    horizon_s,
    rate,
    base_eta,
    beta_raw,
    raw_lo,
    raw_hi,
    shape,
    max_drives,
):
    """Chunked vectorized twin of the drive loop, identical stream and sums."""
    chunk = 4096
    dur_parts = []
    ev_parts = []
    raw_parts = []
    total = 0
    prev = 0.0
    while True:
        u = uniform_block(stream_seed, 2 * total, 2 * chunk)
        u_w = u[0::2]
        u_e = u[1::2]
        raw = raw_lo + u_w * (raw_hi - raw_lo)
        lam = rate * np.exp(base_eta + beta_raw * raw)
        if shape == 1.0:
            t = -np.log(u_e) / lam
        else:
            t = (-np.log(u_e)) ** (1.0 / shape) / lam
        ev = t < horizon_s
        dur = np.where(ev, t, horizon_s)
        # cumsum seeded with the carried total reproduces the sequential
        # accumulation bit for bit across chunk boundaries
        cum = np.cumsum(np.concatenate(([prev], dur)))
        started = cum[:-1] < budget_s
        take = int(np.count_nonzero(started))
        if total + take > max_drives:
            # same rule as the sequential loop: needing more than the cap
            raise ValueError("combination exceeds the drive-count safety cap")
        dur_parts.append(dur[:take])
        ev_parts.append(ev[:take])
        raw_parts.append(raw[:take])
        total += take
        if take < chunk:
            break
        prev = float(cum[-1])
    return (
        np.concatenate(dur_parts),
        np.concatenate(ev_parts),
        np.concatenate(raw_parts),
    )


# ---------------------------------------------------------------------------
# Cox partial-likelihood statistics.
#
# Inputs are sorted by duration ascending with events before censorings at
# tied times, so the risk set at event time i is the row suffix starting at
# starts[i] and the tied events occupy rows starts[i] .. starts[i]+deaths[i)-1.
# eta is the (already shifted) linear predictor.  Returns the partial log
# likelihood, its gradient, its Hessian, and log of the full risk-set
# denominator at each event time (shifted scale, for the baseline hazard).
# ---------------------------------------------------------------------------


def _cox_stats_loop(eta, x, starts, deaths, efron):
    n, p = x.shape
    m = starts.shape[0]
    r = np.exp(eta)
    s0 = 0.0
    s1 = np.zeros(p)
    s2 = np.zeros((p, p))
    s1f = np.empty(p)
    s2f = np.empty((p, p))
    v = np.empty(p)
    ll = 0.0
    grad = np.zeros(p)
    hess = np.zeros((p, p))
    logdenom = np.empty(m)
    ptr = n - 1
    for i in range(m - 1, -1, -1):
        a = starts[i]
        d = deaths[i]
        while ptr >= a:
            rj = r[ptr]
            s0 += rj
            for q in range(p):
                rx = rj * x[ptr, q]
                s1[q] += rx
                for w in range(p):
                    s2[q, w] += rx * x[ptr, w]
            ptr -= 1
        for row in range(a, a + d):
            ll += eta[row]
            for q in range(p):
                grad[q] += x[row, q]
        logdenom[i] = np.log(s0)
        if efron and d > 1:
            s0f = 0.0
            for q in range(p):
                s1f[q] = 0.0
                for w in range(p):
                    s2f[q, w] = 0.0
            for row in range(a, a + d):
                rj = r[row]
                s0f += rj
                for q in range(p):
                    rx = rj * x[row, q]
                    s1f[q] += rx
                    for w in range(p):
                        s2f[q, w] += rx * x[row, w]
            for k in range(d):
                c = k / d
                s0k = s0 - c * s0f
                ll -= np.log(s0k)
                for q in range(p):
                    v[q] = (s1[q] - c * s1f[q]) / s0k
                    grad[q] -= v[q]
                for q in range(p):
                    for w in range(p):
                        hess[q, w] -= (s2[q, w] - c * s2f[q, w]) / s0k - v[q] * v[w]
        else:
            ll -= d * np.log(s0)
            for q in range(p):
                v[q] = s1[q] / s0
                grad[q] -= d * v[q]
            for q in range(p):
                for w in range(p):
                    hess[q, w] -= d * (s2[q, w] / s0 - v[q] * v[w])
    return ll, grad, hess, logdenom


def _cox_loglik_loop(eta, starts, deaths, efron):
    n = eta.shape[0]
    m = starts.shape[0]
    r = np.exp(eta)
    s0 = 0.0
    ll = 0.0
    ptr = n - 1
    for i in range(m - 1, -1, -1):
        a = starts[i]
        d = deaths[i]
        while ptr >= a:
            s0 += r[ptr]
            ptr -= 1
        for row in range(a, a + d):
            ll += eta[row]
        if efron and d > 1:
            s0f = 0.0
            for row in range(a, a + d):
                s0f += r[row]
            for k in range(d):
                ll -= np.log(s0 - (k / d) * s0f)
        else:
            ll -= d * np.log(s0)
    return ll


def _event_rows(starts, deaths):
    total = int(deaths.sum())
    rep = np.repeat(np.arange(starts.shape[0]), deaths)
    offs = np.arange(total) - np.repeat(np.cumsum(deaths) - deaths, deaths)
    return np.repeat(starts, deaths) + offs, rep, offs


def cox_stats_numpy(eta, x, starts, deaths, efron):
    """Vectorized twin of the Cox statistics loop (suffix cumulative sums)."""
    n, p = x.shape
    r = np.exp(eta)
    rx = r[:, None] * x
    rxx = rx[:, :, None] * x[:, None, :]
    suf0 = np.cumsum(r[::-1])[::-1]
    suf1 = np.cumsum(rx[::-1], axis=0)[::-1]
    suf2 = np.cumsum(rxx[::-1], axis=0)[::-1]
    s0 = suf0[starts]
    s1 = suf1[starts]
    s2 = suf2[starts]
    ev, rep, offs = _event_rows(starts, deaths)
    d = deaths.astype(float)
    logdenom = np.log(s0)
    ll = float(eta[ev].sum())
    grad = x[ev].sum(axis=0)
    if efron:
        c0 = np.concatenate(([0.0], np.cumsum(r)))
        c1 = np.concatenate((np.zeros((1, p)), np.cumsum(rx, axis=0)))
        c2 = np.concatenate((np.zeros((1, p, p)), np.cumsum(rxx, axis=0)))
        stops = starts + deaths
        s0f = c0[stops] - c0[starts]
        s1f = c1[stops] - c1[starts]
        s2f = c2[stops] - c2[starts]
        frac = offs / d[rep]
        s0k = s0[rep] - frac * s0f[rep]
        v = (s1[rep] - frac[:, None] * s1f[rep]) / s0k[:, None]
        ll -= float(np.log(s0k).sum())
        grad -= v.sum(axis=0)
        a2 = s2[rep] - frac[:, None, None] * s2f[rep]
        hess = -(np.einsum("f,fpq->pq", 1.0 / s0k, a2) - np.einsum("fp,fq->pq", v, v))
    else:
        mean1 = s1 / s0[:, None]
        ll -= float((d * logdenom).sum())
        grad -= (d[:, None] * mean1).sum(axis=0)
        hess = -(
            np.einsum("i,ipq->pq", d / s0, s2)
            - np.einsum("i,ip,iq->pq", d, mean1, mean1)
        )
    return ll, grad, hess, logdenom


def cox_loglik_numpy(eta, starts, deaths, efron):
    r = np.exp(eta)
    suf0 = np.cumsum(r[::-1])[::-1]
    s0 = suf0[starts]
    ev, rep, offs = _event_rows(starts, deaths)
    ll = float(eta[ev].sum())
    if efron:
        c0 = np.concatenate(([0.0], np.cumsum(r)))
        s0f = c0[starts + deaths] - c0[starts]
        frac = offs / deaths.astype(float)[rep]
        ll -= float(np.log(s0[rep] - frac * s0f[rep]).sum())
    else:
        ll -= float((deaths * np.log(s0)).sum())
    return ll


if USING_NUMBA:
    sim_combination_jit = _njit(cache=True)(_sim_combination_loop)
    cox_stats_jit = _njit(cache=True)(_cox_stats_loop)
    cox_loglik_jit = _njit(cache=True)(_cox_loglik_loop)
    sim_combination = sim_combination_jit
    cox_stats = cox_stats_jit
    cox_loglik = cox_loglik_jit
else:
    sim_combination_jit = None
    cox_stats_jit = None
    cox_loglik_jit = None
    sim_combination = sim_combination_numpy
    cox_stats = cox_stats_numpy
    cox_loglik = cox_loglik_numpy


def warmup() -> None:
    """Trigger jit compilation on tiny inputs so timed runs stay honest."""
    eta = np.array([0.1, 0.0, -0.1])
    x = np.array([[1.0], [0.0], [1.0]])
    starts = np.array([0, 1], dtype=np.int64)
    deaths = np.array([1, 2], dtype=np.int64)
    for efron in (False, True):
        cox_stats(eta, x, starts, deaths, efron)
        cox_loglik(eta, starts, deaths, efron)
    sim_combination(1, 10.0, 5.0, 0.5, 0.0, 0.0, 0.0, 0.0, 1.0, 1000)

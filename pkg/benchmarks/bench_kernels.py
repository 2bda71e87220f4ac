#!/usr/bin/env python3
"""Timing comparison of the compiled and vectorized kernel backends.

Runs the two hot kernels — campaign simulation and the partial-likelihood
statistics — on realistic input sizes under both implementations, checks
that the backends agree before trusting the numbers, and prints best-of-N
wall times with speedups.  A full model fit is timed as end-to-end context
for whichever backend the process is running (switch with
HAZARDLAB_DISABLE_NUMBA=1).

Usage: python3 benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from hazardlab._kernels import (
    USING_NUMBA,
    cox_loglik_jit,
    cox_loglik_numpy,
    cox_stats_jit,
    cox_stats_numpy,
    sim_combination_jit,
    sim_combination_numpy,
    warmup,
)
from hazardlab.coxph import _Prepared, fit
from hazardlab.simulate import simulate, standard_campaign_config

# (label, stream_seed, budget_s, horizon_s, rate, base_eta, beta_raw, lo, hi, shape)
SIM_SIZES = [
    ("sim ~15 drives", 3, 7.2e3, 600.0, 5e-4, 0.0, 0.00995, 70.0, 100.0, 1.0),
    ("sim ~700 drives", 3, 3.6e5, 600.0, 5e-4, 0.0, 0.00995, 70.0, 100.0, 1.0),
    ("sim ~100k drives", 3, 5.0e4, 1.0, 2.0, 0.0, 0.0, 0.0, 0.0, 1.0),
]
MAX_DRIVES = 10**7


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def check_sim_agreement(args):
    dur_np, ev_np, raw_np = sim_combination_numpy(*args)
    dur_jit, ev_jit, raw_jit = sim_combination_jit(*args)
    assert dur_np.size == dur_jit.size
    assert np.array_equal(raw_np, raw_jit), "uniform draws must match bitwise"
    assert np.array_equal(ev_np, ev_jit)
    assert np.allclose(dur_np, dur_jit, rtol=5e-16, atol=0.0)
    return dur_np.size


def check_cox_agreement(eta, x, starts, deaths, efron):
    ll_np, grad_np, hess_np, logden_np = cox_stats_numpy(eta, x, starts, deaths, efron)
    ll_jit, grad_jit, hess_jit, logden_jit = cox_stats_jit(eta, x, starts, deaths, efron)
    assert abs(ll_np - ll_jit) <= 1e-10 * max(1.0, abs(ll_np))
    assert np.allclose(grad_np, grad_jit, rtol=1e-9, atol=1e-9)
    assert np.allclose(hess_np, hess_jit, rtol=1e-9, atol=1e-9)
    assert np.allclose(logden_np, logden_jit, rtol=1e-12, atol=1e-12)


def prepared_campaign(scale_minutes):
    config = standard_campaign_config(seed=0, minutes_per_combination=scale_minutes)
    dataset = simulate(config).dataset
    prep = _Prepared(dataset)
    eta = prep.x @ np.full(prep.p, 0.1)
    return dataset, prep, eta


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=7, help="best-of-N timing")
    args = parser.parse_args()

    print(f"active backend: {'numba' if USING_NUMBA else 'numpy'}")
    if not USING_NUMBA:
        print(
            "numba backend unavailable (HAZARDLAB_DISABLE_NUMBA set or numba "
            "missing); only vectorized times can be reported.\n"
        )
    else:
        warmup()

    rows = []

    for label, *sim_args in SIM_SIZES:
        call = tuple(sim_args) + (MAX_DRIVES,)
        numpy_t = best_of(lambda: sim_combination_numpy(*call), args.repeats)
        if USING_NUMBA:
            n = check_sim_agreement(call)
            jit_t = best_of(lambda: sim_combination_jit(*call), args.repeats)
        else:
            n = sim_combination_numpy(*call)[0].size
            jit_t = None
        rows.append((f"{label} (n={n})", jit_t, numpy_t))

    for minutes, tag in ((6000.0, "~8k obs"), (60000.0, "~80k obs")):
        dataset, prep, eta = prepared_campaign(minutes)
        for efron in (False, True):
            tie = "efron" if efron else "breslow"
            if USING_NUMBA:
                check_cox_agreement(eta, prep.x, prep.starts, prep.deaths, efron)
            stats_np = best_of(
                lambda: cox_stats_numpy(eta, prep.x, prep.starts, prep.deaths, efron),
                args.repeats,
            )
            stats_jit = (
                best_of(
                    lambda: cox_stats_jit(eta, prep.x, prep.starts, prep.deaths, efron),
                    args.repeats,
                )
                if USING_NUMBA
                else None
            )
            rows.append(
                (f"cox stats {tag} {tie} (n={dataset.durations.size})", stats_jit, stats_np)
            )
        ll_np = best_of(
            lambda: cox_loglik_numpy(eta, prep.starts, prep.deaths, True), args.repeats
        )
        ll_jit = (
            best_of(
                lambda: cox_loglik_jit(eta, prep.starts, prep.deaths, True),
                args.repeats,
            )
            if USING_NUMBA
            else None
        )
        rows.append((f"cox loglik {tag} efron (n={dataset.durations.size})", ll_jit, ll_np))

    dataset, _, _ = prepared_campaign(6000.0)
    fit_t = best_of(lambda: fit(dataset), max(1, args.repeats // 2))
    rows.append(
        (
            f"full fit, active backend (n={dataset.durations.size})",
            fit_t if USING_NUMBA else None,
            fit_t if not USING_NUMBA else None,
        )
    )

    width = max(len(r[0]) for r in rows)
    print(f"{'benchmark'.ljust(width)}  {'numba':>10}  {'numpy':>10}  {'speedup':>8}")
    for label, jit_t, numpy_t in rows:
        jit_s = f"{jit_t * 1e3:8.3f}ms" if jit_t is not None else " " * 10
        np_s = f"{numpy_t * 1e3:8.3f}ms" if numpy_t is not None else " " * 10
        if jit_t is not None and numpy_t is not None:
            speed = f"{numpy_t / jit_t:7.1f}x"
        else:
            speed = " " * 8
        print(f"{label.ljust(width)}  {jit_s}  {np_s}  {speed}")


if __name__ == "__main__":
    main()

"""Acceptance gate: eight end-to-end criteria, one test and one printed
PASS/FAIL line each, with every tolerance pinned as a module constant.

Run with `pytest -v tests/test_acceptance.py` — the -v report gives the
per-criterion verdict; the printed detail lines (shown with -s or on
failure) record the measured margins.
"""

import time
from dataclasses import replace

import numpy as np

from hazardlab.cli import EXIT_OK, run
from hazardlab.coxph import (
    fit,
    partial_gradient,
    partial_hessian,
    partial_log_likelihood,
    predict_survival,
)
from hazardlab.data import Dataset, load_csv
from hazardlab.nonparametric import (
    cumulative_hazard,
    kaplan_meier,
    two_group_hazard_ratio,
)
from hazardlab.plot import emit_plot
from hazardlab.simulate import (
    calibrate_baseline_rate,
    simulate,
    standard_campaign_config,
    with_rate,
)
from oracles import (
    fd_gradient,
    fd_jacobian,
    km_brute_force,
    random_survival_arrays,
    relative_error,
)

# pinned tolerances and budgets
KM_ORACLE_TOL = 1e-12        # C1: product-limit vs brute force, abs
KM_ORACLE_BUDGET_S = 5.0     # C1: wall-clock budget
HAND_FIXTURE_TOL = 1e-9      # C2: hand-computed values, abs
GRADIENT_FD_TOL = 1e-6       # C3: gradient vs central differences, relative
HESSIAN_FD_TOL = 1e-4        # C3: Hessian vs central differences, relative
RECOVERY_MIN = 95            # C4: seeds (of 100) with every beta within 3 SE
SIGNIFICANT_MIN = 90         # C4: seeds (of 100) with night/experts/universal p<0.005
RECOVERY_BUDGET_S = 60.0     # C4: wall-clock budget
NULL_REJECT_MAX = 20         # C5: per-covariate p<0.05 seeds allowed (10% of 200)
DRIVES_TARGET, DRIVES_SLACK = 160, 40   # C6
EVENTS_TARGET, EVENTS_SLACK = 48, 14    # C6
POWER_IDENTITY_TOL = 1e-12   # C7: S(t|z) vs S_baseline^exp(beta.z), abs
EXPECTED_SUM_TOL = 1e-9      # C7: E_A + E_B vs total deaths, abs


def _criterion(tag: str, ok: bool, detail: str) -> None:
    print(f"{tag}: {'PASS' if ok else 'FAIL'} | {detail}")
    assert ok, f"{tag}: {detail}"


def _dataset(durations, events, covariates=None):
    durations = np.asarray(durations, dtype=float)
    if covariates is None:
        covariates = np.zeros((durations.size, 1))
    covariates = np.asarray(covariates, dtype=float).reshape(durations.size, -1)
    names = tuple(f"z{i}" for i in range(covariates.shape[1]))
    return Dataset(durations, np.asarray(events, dtype=bool), covariates, names)


def test_c1_product_limit_matches_brute_force():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        durations, events, _ = random_survival_arrays(
            rng, max_n=30, force_event=False
        )
        curve = kaplan_meier(_dataset(durations, events))
        times, at_risk, deaths, survival = km_brute_force(durations, events)
        assert curve.times.tolist() == times
        assert curve.at_risk.tolist() == at_risk
        if not times:
            assert curve.all_censored
            continue
        worst = max(worst, float(np.max(np.abs(curve.survival - survival))))
    elapsed = time.perf_counter() - start
    _criterion(
        "C1 product-limit oracle",
        worst <= KM_ORACLE_TOL and elapsed < KM_ORACLE_BUDGET_S,
        f"max |dS| {worst:.2e} (tol {KM_ORACLE_TOL:g}) over 200 datasets "
        f"in {elapsed:.2f}s (budget {KM_ORACLE_BUDGET_S:g}s)",
    )


def test_c2_hand_fixtures():
    curve = kaplan_meier(_dataset([1, 2, 3, 4, 5], [1, 1, 0, 1, 0]))
    errors = [float(abs(s - v)) for s, v in zip(curve.survival, (0.8, 0.6, 0.3))]

    two = _dataset([1, 2], [1, 1], [1.0, 0.0])
    four = _dataset([1, 2, 3, 4], [1, 1, 1, 1], [1.0, 0.0, 1.0, 0.0])
    at_zero = np.zeros(1)
    errors.append(abs(partial_log_likelihood(two, at_zero) + np.log(2.0)))
    errors.append(abs(partial_log_likelihood(four, at_zero) + np.log(24.0)))
    errors.append(abs(partial_gradient(four, at_zero)[0] - 2.0 / 3.0))
    worst = max(errors)
    _criterion(
        "C2 hand fixtures",
        worst <= HAND_FIXTURE_TOL,
        f"worst abs error {worst:.2e} (tol {HAND_FIXTURE_TOL:g}) over "
        "survival {0.8, 0.6, 0.3}, log-likelihoods -log 2 / -log 24, gradient 2/3",
    )


def test_c3_derivatives_match_finite_differences():
    rng = np.random.default_rng(2)
    worst_grad = 0.0
    worst_hess = 0.0
    for _ in range(100):
        p = int(rng.integers(1, 5))
        durations, events, covariates = random_survival_arrays(rng, max_n=50, p=p)
        ds = _dataset(durations, events, covariates)
        beta = rng.normal(scale=0.4, size=p)
        for method in ("breslow", "efron"):
            grad = partial_gradient(ds, beta, tie_method=method)
            fd_g = fd_gradient(
                lambda b: partial_log_likelihood(ds, b, tie_method=method), beta
            )
            worst_grad = max(worst_grad, relative_error(fd_g, grad))
            hess = partial_hessian(ds, beta, tie_method=method)
            fd_h = fd_jacobian(
                lambda b: partial_gradient(ds, b, tie_method=method), beta
            )
            worst_hess = max(worst_hess, relative_error(fd_h, hess))
    _criterion(
        "C3 derivative checks",
        worst_grad <= GRADIENT_FD_TOL and worst_hess <= HESSIAN_FD_TOL,
        f"gradient rel err {worst_grad:.2e} (tol {GRADIENT_FD_TOL:g}), "
        f"Hessian rel err {worst_hess:.2e} (tol {HESSIAN_FD_TOL:g}), "
        "100 instances x both tie methods",
    )


def test_c4_recovers_planted_effects():
    start = time.perf_counter()
    recovered = 0
    significant = 0
    for seed in range(100):
        config = standard_campaign_config(seed=seed, minutes_per_combination=6000.0)
        campaign = simulate(config)
        result = fit(campaign.dataset)
        recovered += bool(
            np.all(
                np.abs(result.coefficients - config.true_beta)
                <= 3.0 * result.std_errors
            )
        )
        names = campaign.dataset.covariate_names
        strong = [names.index(n) for n in ("night", "experts", "universal")]
        significant += bool(np.all(result.p_values[strong] < 0.005))
    elapsed = time.perf_counter() - start
    _criterion(
        "C4 planted-effect recovery",
        recovered >= RECOVERY_MIN
        and significant >= SIGNIFICANT_MIN
        and elapsed < RECOVERY_BUDGET_S,
        f"within 3 SE {recovered}/100 (need >= {RECOVERY_MIN}), "
        f"night/experts/universal p<0.005 {significant}/100 (need >= {SIGNIFICANT_MIN}), "
        f"{elapsed:.1f}s (budget {RECOVERY_BUDGET_S:g}s)",
    )


def test_c5_null_calibration():
    rejections = np.zeros(5, dtype=int)
    for seed in range(200):
        config = standard_campaign_config(seed=seed)
        config = replace(config, true_beta=np.zeros(5))
        result = fit(simulate(config).dataset)
        rejections += (result.p_values < 0.05).astype(int)
    worst = int(rejections.max())
    _criterion(
        "C5 null calibration",
        worst <= NULL_REJECT_MAX,
        f"per-covariate p<0.05 counts {rejections.tolist()}/200 "
        f"(each allowed <= {NULL_REJECT_MAX})",
    )


def test_c6_desk_scale_campaign():
    config = standard_campaign_config(seed=0)
    campaign = simulate(with_rate(config, calibrate_baseline_rate(48.0, config)))
    drives_ok = abs(campaign.total_drives - DRIVES_TARGET) <= DRIVES_SLACK
    events_ok = abs(campaign.total_events - EVENTS_TARGET) <= EVENTS_SLACK
    _criterion(
        "C6 desk-scale campaign",
        drives_ok and events_ok,
        f"{campaign.total_drives} drives (target {DRIVES_TARGET}±{DRIVES_SLACK}), "
        f"{campaign.total_events} events (target {EVENTS_TARGET}±{EVENTS_SLACK}) "
        "at the calibrated rate, seed 0",
    )


def test_c7_identities():
    rng = np.random.default_rng(7)

    # cumulative hazard is exactly -log survival at every step
    for _ in range(30):
        durations, events, _ = random_survival_arrays(rng, max_n=30, force_event=False)
        curve = kaplan_meier(_dataset(durations, events))
        hazard = cumulative_hazard(curve)
        positive = curve.survival > 0
        assert np.all(
            hazard.cumulative_hazard[positive] == -np.log(curve.survival[positive])
        )
        assert np.all(np.isinf(hazard.cumulative_hazard[~positive]))

    # prediction equals the baseline curve raised to the relative risk
    campaign = simulate(standard_campaign_config(seed=3, minutes_per_combination=360.0))
    result = fit(campaign.dataset)
    grid = np.linspace(1.0, 600.0, 97)
    baseline = predict_survival(result, np.zeros(5), grid).survival
    worst_power = 0.0
    for _ in range(10):
        z = np.array(
            [rng.uniform(0, 100), rng.uniform(0, 100), *rng.integers(0, 2, 3)],
            dtype=float,
        )
        predicted = predict_survival(result, z, grid).survival
        powered = baseline ** float(np.exp(result.coefficients @ z))
        worst_power = max(worst_power, float(np.max(np.abs(predicted - powered))))

    # duplicated groups: ratio exactly one
    half = _dataset([1, 2, 3, 4, 5], [1, 1, 0, 1, 0])
    assert two_group_hazard_ratio(half, half).hazard_ratio == 1.0

    # expected events over both groups add up to the death total
    worst_sum = 0.0
    for _ in range(20):
        da, ea, _ = random_survival_arrays(rng, max_n=30)
        db, eb, _ = random_survival_arrays(rng, max_n=30)
        r = two_group_hazard_ratio(_dataset(da, ea), _dataset(db, eb))
        worst_sum = max(
            worst_sum,
            abs(r.expected_a + r.expected_b - (r.observed_a + r.observed_b)),
        )

    _criterion(
        "C7 identities",
        worst_power <= POWER_IDENTITY_TOL and worst_sum <= EXPECTED_SUM_TOL,
        "H = -log S exact at all steps; "
        f"S(t|z) vs S0^exp(beta.z) max |d| {worst_power:.2e} (tol {POWER_IDENTITY_TOL:g}); "
        "duplicated-group ratio exactly 1; "
        f"E_A+E_B vs deaths max |d| {worst_sum:.2e} (tol {EXPECTED_SUM_TOL:g})",
    )


def test_c8_byte_determinism(tmp_path, capsys):
    # simulate: identical seed, identical CSV bytes
    sim_bytes = []
    for name in ("first.csv", "second.csv"):
        path = tmp_path / name
        code = run(["simulate", "--seed", "123", "--minutes", "90", "--out", str(path)])
        assert code == EXIT_OK
        sim_bytes.append(path.read_bytes())
    capsys.readouterr()

    # fit-cox: identical JSON report bytes for the same input
    fit_bytes = []
    for name in ("fit_one.json", "fit_two.json"):
        assert run(["fit-cox", str(tmp_path / "first.csv"), "--json"]) == EXIT_OK
        payload = capsys.readouterr().out.encode()
        (tmp_path / name).write_bytes(payload)
        fit_bytes.append(payload)

    # emit_plot: identical SVG and CSV bytes for the same curves
    dataset = load_csv(tmp_path / "first.csv")
    curves = [kaplan_meier(dataset, label="all drives")]
    plot_bytes = []
    for name in ("plot_one.svg", "plot_two.svg"):
        svg_path, csv_path = emit_plot(curves, tmp_path / name)
        with open(svg_path, "rb") as fh:
            svg = fh.read()
        with open(csv_path, "rb") as fh:
            csv = fh.read()
        plot_bytes.append((svg, csv))

    same_sim = sim_bytes[0] == sim_bytes[1]
    same_fit = fit_bytes[0] == fit_bytes[1]
    same_plot = plot_bytes[0] == plot_bytes[1]
    _criterion(
        "C8 byte determinism",
        same_sim and same_fit and same_plot,
        f"simulate CSV identical: {same_sim} ({len(sim_bytes[0])} bytes); "
        f"fit-cox JSON identical: {same_fit} ({len(fit_bytes[0])} bytes); "
        f"emit_plot SVG+CSV identical: {same_plot} "
        f"({len(plot_bytes[0][0])}+{len(plot_bytes[0][1])} bytes)",
    )

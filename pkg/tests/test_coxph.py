import math

import numpy as np
import pytest

from hazardlab._stats import norm_ppf, two_sided_p
from hazardlab.coxph import (
    CoxFit,
    FitOptions,
    SeparationError,
    SingularHessianError,
    baseline_hazard_at,
    fit,
    fit_to_json,
    fit_to_text_table,
    hazard_ratio_between,
    partial_gradient,
    partial_hessian,
    partial_log_likelihood,
    predict_survival,
)
from hazardlab.data import Dataset, ValidationError
from oracles import fd_gradient, fd_jacobian, random_survival_arrays, relative_error


def make_dataset(durations, events, covariates):
    covariates = np.atleast_2d(np.asarray(covariates, dtype=float))
    if covariates.shape[0] != len(durations):
        covariates = covariates.T
    return Dataset(
        durations=np.asarray(durations, dtype=float),
        events=np.asarray(events, dtype=bool),
        covariates=covariates,
        covariate_names=tuple(f"z{i}" for i in range(covariates.shape[1])),
    )


def random_dataset(rng, max_n=50, p=1):
    durations, events, covariates = random_survival_arrays(rng, max_n=max_n, p=p)
    return make_dataset(durations, events, covariates)


def exponential_trial(rng, n, beta, censor_at=2.0):
    """Binary-covariate exponential failure times, fixed-horizon censoring."""
    z = (rng.random(n) < 0.5).astype(float)
    t = rng.exponential(1.0 / np.exp(beta * z))
    durations = np.minimum(t, censor_at)
    events = t < censor_at
    return make_dataset(durations, events, z)


class TestHandFixtures:
    def test_two_subjects_loglik(self):
        ds = make_dataset([1, 2], [1, 1], [1.0, 0.0])
        assert partial_log_likelihood(ds, [0.0]) == pytest.approx(-math.log(2), abs=1e-12)

    def test_three_subjects_gradient(self):
        ds = make_dataset([1, 2, 3], [1, 1, 1], [1.0, 0.0, 0.0])
        assert partial_log_likelihood(ds, [0.0]) == pytest.approx(-math.log(6), abs=1e-12)
        grad = partial_gradient(ds, [0.0])
        assert grad[0] == pytest.approx(2 / 3, abs=1e-12)
        hess = partial_hessian(ds, [0.0])
        assert hess[0, 0] == pytest.approx(-2 / 9, abs=1e-12)

    def test_four_subjects_loglik(self):
        ds = make_dataset([1, 2, 3, 4], [1, 1, 1, 1], [1.0, 0.0, 0.0, 0.0])
        assert partial_log_likelihood(ds, [0.0]) == pytest.approx(-math.log(24), abs=1e-12)

    def test_nonzero_beta_closed_form(self):
        # single event at t=1, risk set {z=1, z=0}: ll = b - log(e^b + 1)
        ds = make_dataset([1, 2], [1, 0], [1.0, 0.0])
        for b in (-1.5, 0.3, 2.0):
            expected = b - math.log(math.exp(b) + 1.0)
            assert partial_log_likelihood(ds, [b]) == pytest.approx(expected, abs=1e-12)


class TestTieMethods:
    # subjects: (t=1, event, z=1), (t=1, event, z=0), (t=2, censored, z=1)
    def fixture(self):
        return make_dataset([1, 1, 2], [1, 1, 0], [1.0, 0.0, 1.0])

    def test_breslow_fixture_value(self):
        # closed form: 1 - 2*log(2e + 1); constant frozen from a 30-digit run
        ll = partial_log_likelihood(self.fixture(), [1.0], tie_method="breslow")
        assert ll == pytest.approx(1.0 - 2.0 * math.log(2.0 * math.e + 1.0), abs=1e-12)
        assert ll == pytest.approx(-2.723989608116502, abs=1e-12)

    def test_efron_fixture_value(self):
        # closed form: 1 - log(2e+1) - log(2e+1 - (e+1)/2)
        full = 2.0 * math.e + 1.0
        expected = 1.0 - math.log(full) - math.log(full - (math.e + 1.0) / 2.0)
        ll = partial_log_likelihood(self.fixture(), [1.0], tie_method="efron")
        assert ll == pytest.approx(expected, abs=1e-12)
        assert ll == pytest.approx(-2.3831309238610663, abs=1e-12)

    def test_methods_agree_without_ties(self):
        rng = np.random.default_rng(41)
        for _ in range(30):
            n = int(rng.integers(3, 40))
            ds = make_dataset(
                rng.exponential(10.0, n),
                np.concatenate(([True], rng.random(n - 1) < 0.7)),
                rng.normal(size=(n, 2)),
            )
            beta = rng.normal(scale=0.5, size=2)
            lb = partial_log_likelihood(ds, beta, tie_method="breslow")
            le = partial_log_likelihood(ds, beta, tie_method="efron")
            assert lb == pytest.approx(le, abs=1e-12)
            gb = partial_gradient(ds, beta, tie_method="breslow")
            ge = partial_gradient(ds, beta, tie_method="efron")
            assert np.allclose(gb, ge, rtol=0, atol=1e-12)

    def test_efron_dominates_breslow_at_ties(self):
        # with ties present the Efron approximation concentrates the
        # likelihood; at beta=0 the two agree only when each tie has d=1
        ds = self.fixture()
        lb = partial_log_likelihood(ds, [1.0], tie_method="breslow")
        le = partial_log_likelihood(ds, [1.0], tie_method="efron")
        assert le > lb


class TestDerivatives:
    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(42)
        for _ in range(25):
            p = int(rng.integers(1, 4))
            ds = random_dataset(rng, p=p)
            beta = rng.normal(scale=0.4, size=p)
            for method in ("breslow", "efron"):
                grad = partial_gradient(ds, beta, tie_method=method)
                approx = fd_gradient(
                    lambda b: partial_log_likelihood(ds, b, tie_method=method), beta
                )
                assert relative_error(approx, grad) < 1e-6

    def test_hessian_matches_finite_differences(self):
        rng = np.random.default_rng(43)
        for _ in range(25):
            p = int(rng.integers(1, 4))
            ds = random_dataset(rng, p=p)
            beta = rng.normal(scale=0.4, size=p)
            for method in ("breslow", "efron"):
                hess = partial_hessian(ds, beta, tie_method=method)
                approx = fd_jacobian(
                    lambda b: partial_gradient(ds, b, tie_method=method), beta
                )
                assert relative_error(approx, hess) < 1e-4
                assert np.allclose(hess, hess.T, rtol=0, atol=1e-12)

    def test_hessian_negative_semidefinite(self):
        rng = np.random.default_rng(44)
        for _ in range(25):
            ds = random_dataset(rng, p=2)
            hess = partial_hessian(ds, rng.normal(scale=0.4, size=2))
            eigenvalues = np.linalg.eigvalsh(hess)
            assert np.all(eigenvalues <= 1e-10)


class TestFit:
    def test_gradient_vanishes_at_optimum(self):
        rng = np.random.default_rng(45)
        for _ in range(10):
            ds = exponential_trial(rng, 120, beta=0.7)
            result = fit(ds)
            assert result.converged
            grad = partial_gradient(ds, result.coefficients)
            assert np.max(np.abs(grad)) < 1e-7

    def test_recovers_planted_coefficient(self):
        rng = np.random.default_rng(46)
        ds = exponential_trial(rng, 800, beta=0.9)
        result = fit(ds)
        assert result.converged
        assert abs(result.coefficients[0] - 0.9) < 3.0 * result.std_errors[0]

    def test_row_permutation_invariance(self):
        rng = np.random.default_rng(47)
        ds = exponential_trial(rng, 150, beta=0.5)
        perm = rng.permutation(ds.n)
        shuffled = Dataset(
            durations=ds.durations[perm],
            events=ds.events[perm],
            covariates=ds.covariates[perm],
            covariate_names=ds.covariate_names,
        )
        a, b = fit(ds), fit(shuffled)
        assert np.allclose(a.coefficients, b.coefficients, rtol=0, atol=1e-10)
        assert np.allclose(a.std_errors, b.std_errors, rtol=0, atol=1e-10)
        assert a.log_likelihood == pytest.approx(b.log_likelihood, abs=1e-10)

    def test_covariate_shift_invariance(self):
        rng = np.random.default_rng(48)
        ds = exponential_trial(rng, 150, beta=0.5)
        shifted = Dataset(
            durations=ds.durations,
            events=ds.events,
            covariates=ds.covariates + 1000.0,
            covariate_names=ds.covariate_names,
        )
        a, b = fit(ds), fit(shifted)
        assert np.allclose(a.coefficients, b.coefficients, rtol=0, atol=1e-8)
        assert np.allclose(a.std_errors, b.std_errors, rtol=0, atol=1e-8)

    def test_covariate_scale_equivariance(self):
        rng = np.random.default_rng(49)
        ds = exponential_trial(rng, 150, beta=0.5)
        scaled = Dataset(
            durations=ds.durations,
            events=ds.events,
            covariates=ds.covariates * 4.0,
            covariate_names=ds.covariate_names,
        )
        a, b = fit(ds), fit(scaled)
        assert b.coefficients[0] == pytest.approx(a.coefficients[0] / 4.0, abs=1e-9)

    def test_wald_inference_relationships(self):
        rng = np.random.default_rng(50)
        ds = exponential_trial(rng, 200, beta=0.6)
        result = fit(ds, FitOptions(confidence_level=0.9))
        beta = result.coefficients
        se = result.std_errors
        zq = norm_ppf(0.95)
        assert np.array_equal(result.hazard_ratios, np.exp(beta))
        assert np.allclose(result.ci_lower, np.exp(beta - zq * se), rtol=0, atol=1e-15)
        assert np.allclose(result.ci_upper, np.exp(beta + zq * se), rtol=0, atol=1e-15)
        assert np.array_equal(result.p_values, two_sided_p(beta / se))
        assert np.array_equal(se, np.sqrt(np.diagonal(result.covariance)))

    def test_nonconvergence_returns_flagged_result(self):
        rng = np.random.default_rng(51)
        ds = exponential_trial(rng, 400, beta=1.8)
        result = fit(ds, FitOptions(max_iterations=1))
        assert isinstance(result, CoxFit)
        assert not result.converged
        assert result.iterations == 1
        with pytest.raises(ValidationError):
            predict_survival(result, [0.0], [1.0])

    def test_zero_events_rejected(self):
        ds = make_dataset([1, 2], [0, 0], [1.0, 0.0])
        with pytest.raises(ValidationError, match="zero observed events"):
            fit(ds)

    def test_constant_column_rejected_by_name(self):
        ds = make_dataset([1, 2, 3], [1, 1, 0], [2.5, 2.5, 2.5])
        with pytest.raises(ValidationError, match="'z0'.*constant"):
            fit(ds)

    def test_collinear_columns_raise_singular(self):
        z = np.array([1.0, 0.0, 1.0, 0.0, 1.0])
        ds = make_dataset([1, 2, 3, 4, 5], [1, 1, 1, 0, 0], np.column_stack([z, z]))
        with pytest.raises(SingularHessianError):
            fit(ds)

    def test_perfect_separation_raises_with_name(self):
        # score is 1/(e^b + 1), positive everywhere, so the maximizer sits
        # at infinity and the iterates must march past the divergence bound
        ds = make_dataset([1, 2], [1, 1], [1.0, 0.0])
        with pytest.raises(SeparationError, match="'z0'"):
            fit(ds)

    def test_separation_beats_small_gradient(self):
        # the same monotone likelihood with more weight decays the score
        # faster; a small gradient alone must not read as convergence
        durations = [1, 2, 3, 4, 10, 11, 12, 13]
        events = [1, 1, 1, 1, 0, 0, 0, 0]
        z = [1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]
        with pytest.raises(SeparationError, match="'z0'"):
            fit(make_dataset(durations, events, z))

    def test_options_validated(self):
        with pytest.raises(ValidationError):
            FitOptions(tolerance=0.0)
        with pytest.raises(ValidationError):
            FitOptions(max_iterations=0)
        with pytest.raises(ValidationError):
            FitOptions(tie_method="exact")
        with pytest.raises(ValidationError):
            FitOptions(confidence_level=1.0)

    def test_beta_shape_checked(self):
        ds = make_dataset([1, 2], [1, 1], [1.0, 0.0])
        with pytest.raises(ValidationError):
            partial_log_likelihood(ds, [0.0, 0.0])
        with pytest.raises(ValidationError):
            partial_gradient(ds, [np.inf])


class TestBaseline:
    def baseline_brute_force(self, ds, beta):
        """Breslow increments d_t / sum_{at risk} exp(beta . z), python loops."""
        risk = np.exp(ds.covariates @ beta)
        times = sorted(set(ds.durations[ds.events].tolist()))
        total = 0.0
        out = []
        for t in times:
            at_risk = ds.durations >= t
            deaths = int(np.sum(ds.events & (ds.durations == t)))
            total += deaths / float(risk[at_risk].sum())
            out.append(total)
        return np.array(times), np.array(out)

    def test_baseline_matches_brute_force(self):
        rng = np.random.default_rng(52)
        for method in ("breslow", "efron"):
            for _ in range(15):
                ds = random_dataset(rng, max_n=40, p=2)
                try:
                    result = fit(ds, FitOptions(tie_method=method))
                except (SeparationError, SingularHessianError, ValidationError):
                    continue
                times, h0 = self.baseline_brute_force(ds, result.coefficients)
                assert np.array_equal(result.baseline_times, times)
                assert np.allclose(
                    result.baseline_cumulative_hazard, h0, rtol=1e-10, atol=1e-12
                )

    def test_baseline_lookup_steps(self):
        rng = np.random.default_rng(53)
        ds = exponential_trial(rng, 60, beta=0.4)
        result = fit(ds)
        t0 = result.baseline_times[0]
        looked = baseline_hazard_at(result, [0.0, t0 / 2, t0, result.baseline_times[-1] + 1])
        assert looked[0] == 0.0
        assert looked[1] == 0.0
        assert looked[2] == result.baseline_cumulative_hazard[0]
        assert looked[3] == result.baseline_cumulative_hazard[-1]

    def test_predicted_survival_identity(self):
        rng = np.random.default_rng(54)
        ds = exponential_trial(rng, 120, beta=0.8)
        result = fit(ds)
        grid = np.linspace(0.05, 1.9, 40)
        base = predict_survival(result, [0.0], grid)
        raised = predict_survival(result, [1.0], grid)
        factor = math.exp(result.coefficients[0])
        assert np.allclose(
            raised.survival, base.survival ** factor, rtol=0, atol=1e-12
        )
        assert np.all(np.diff(raised.survival) <= 1e-15)

    def test_hazard_ratio_between_matches_coefficients(self):
        rng = np.random.default_rng(55)
        ds = exponential_trial(rng, 120, beta=0.8)
        result = fit(ds)
        assert hazard_ratio_between(result, [1.0], [0.0]) == pytest.approx(
            float(result.hazard_ratios[0]), abs=1e-15
        )
        assert hazard_ratio_between(result, [1.0], [1.0]) == 1.0


class TestReports:
    def fixture_fit(self):
        rng = np.random.default_rng(56)
        return fit(exponential_trial(rng, 150, beta=0.5))

    def test_json_payload(self):
        result = self.fixture_fit()
        payload = fit_to_json(result)
        assert payload["converged"] is True
        assert payload["tie_method"] == "breslow"
        assert payload["log_likelihood"] == pytest.approx(result.log_likelihood)
        entry = payload["covariates"][0]
        assert entry["name"] == "z0"
        assert entry["hr"] == pytest.approx(float(result.hazard_ratios[0]))
        assert entry["z"] == pytest.approx(
            float(result.coefficients[0] / result.std_errors[0])
        )
        assert 0.0 <= entry["p"] <= 1.0

    def test_text_table_layout(self):
        result = self.fixture_fit()
        text = fit_to_text_table(result)
        lines = text.strip().split("\n")
        assert lines[0].split()[:2] == ["covariate", "HR"]
        assert lines[1].startswith("z0")
        assert "converged yes" in lines[-1]
        assert "ties breslow" in lines[-1]

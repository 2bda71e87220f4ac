"""Proportional-hazards regression by maximum partial likelihood.

The hazard model is h(t, Z) = h0(t) * exp(beta . Z); the baseline h0 drops
out of the partial likelihood, which compares each failing subject's risk
score against the scores of everyone still at risk.  Ties are handled by
the Breslow approximation (tied events share the full risk-set denominator)
or the Efron refinement.  Maximization is Newton-Raphson with step halving,
started at beta = 0, declared converged when the gradient max-norm drops
below the tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import cox_loglik, cox_stats
from ._stats import norm_ppf, two_sided_p
from .data import Dataset, ValidationError, _readonly
from .nonparametric import SurvivalCurve

__all__ = [
    "TIE_METHODS",
    "SeparationError",
    "SingularHessianError",
    "FitOptions",
    "CoxFit",
    "partial_log_likelihood",
    "partial_gradient",
    "partial_hessian",
    "fit",
    "hazard_ratio_between",
    "predict_survival",
    "baseline_hazard_at",
    "fit_to_json",
    "fit_to_text_table",
]

TIE_METHODS = ("breslow", "efron")

# Any coefficient walking past this magnitude during iteration means the
# likelihood is monotone in that direction (perfect separation).
_SEPARATION_BOUND = 20.0
_MAX_HALVINGS = 20
# A small gradient alone does not end the iteration: a monotone likelihood
# also has a vanishing score while the maximizer sits at infinity.  The loop
# stops only when a full Newton step gains less than this (relative) much.
_ASCENT_EPS = 1e-12


class SeparationError(RuntimeError):
    """A coefficient diverged; the partial likelihood has no finite maximum."""


class SingularHessianError(RuntimeError):
    """The Hessian is not invertible, typically from collinear covariates."""


@dataclass(frozen=True)
class FitOptions:
    tolerance: float = 1e-7
    max_iterations: int = 50
    tie_method: str = "breslow"
    confidence_level: float = 0.95

    def __post_init__(self) -> None:
        if not self.tolerance > 0:
            raise ValidationError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be at least 1")
        if self.tie_method not in TIE_METHODS:
            raise ValidationError(
                f"tie_method must be one of {TIE_METHODS}, got {self.tie_method!r}"
            )
        if not 0.0 < self.confidence_level < 1.0:
            raise ValidationError("confidence level must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class CoxFit:
    """Fitted coefficients with Wald inference and the baseline hazard.

    hazard_ratios = exp(coefficients); the confidence bounds are on the
    hazard-ratio scale.  baseline_times / baseline_cumulative_hazard give
    the step cumulative hazard for a subject with all covariates zero.
    """

    covariate_names: tuple[str, ...]
    coefficients: np.ndarray
    std_errors: np.ndarray
    covariance: np.ndarray
    hazard_ratios: np.ndarray
    ci_lower: np.ndarray
    ci_upper: np.ndarray
    p_values: np.ndarray
    log_likelihood: float
    iterations: int
    converged: bool
    tie_method: str
    confidence_level: float
    baseline_times: np.ndarray
    baseline_cumulative_hazard: np.ndarray

    def __post_init__(self) -> None:
        for name in (
            "coefficients",
            "std_errors",
            "hazard_ratios",
            "ci_lower",
            "ci_upper",
            "p_values",
            "covariance",
            "baseline_times",
            "baseline_cumulative_hazard",
        ):
            object.__setattr__(self, name, _readonly(np.asarray(getattr(self, name), dtype=float)))


class _Prepared:
    """Dataset reordered for suffix risk-set accumulation."""

    __slots__ = ("x", "starts", "deaths", "event_times", "n", "p")

    def __init__(self, dataset: Dataset):
        if dataset.n_events == 0:
            raise ValidationError("cannot fit with zero observed events")
        durations = dataset.durations
        events = dataset.events
        # ascending duration, events before censorings at tied times
        order = np.lexsort((~events, durations))
        dur_sorted = durations[order]
        ev_sorted = events[order]
        self.x = dataset.covariates[order]
        self.event_times, self.deaths = np.unique(dur_sorted[ev_sorted], return_counts=True)
        self.starts = np.searchsorted(dur_sorted, self.event_times, side="left").astype(
            np.int64
        )
        self.deaths = self.deaths.astype(np.int64)
        self.n = dataset.n
        self.p = dataset.covariates.shape[1]


def _check_beta(beta, p: int) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (p,):
        raise ValidationError(f"beta must have shape ({p},), got {beta.shape}")
    if not np.all(np.isfinite(beta)):
        raise ValidationError("beta must be finite")
    return beta


def _stats_at(prep: _Prepared, x: np.ndarray, beta: np.ndarray, efron: bool):
    eta = x @ beta
    shift = float(eta.max())
    ll, grad, hess, logdenom = cox_stats(eta - shift, x, prep.starts, prep.deaths, efron)
    return float(ll), grad, hess, logdenom + shift


def _loglik_at(prep: _Prepared, x: np.ndarray, beta: np.ndarray, efron: bool) -> float:
    eta = x @ beta
    shift = float(eta.max())
    return float(cox_loglik(eta - shift, prep.starts, prep.deaths, efron))


def partial_log_likelihood(dataset: Dataset, beta, tie_method: str = "breslow") -> float:
    """Log of the partial likelihood at the given coefficient vector."""
    if tie_method not in TIE_METHODS:
        raise ValidationError(f"tie_method must be one of {TIE_METHODS}")
    prep = _Prepared(dataset)
    beta = _check_beta(beta, prep.p)
    return _loglik_at(prep, prep.x, beta, tie_method == "efron")


def partial_gradient(dataset: Dataset, beta, tie_method: str = "breslow") -> np.ndarray:
    """Score vector of the partial log likelihood."""
    if tie_method not in TIE_METHODS:
        raise ValidationError(f"tie_method must be one of {TIE_METHODS}")
    prep = _Prepared(dataset)
    beta = _check_beta(beta, prep.p)
    return _stats_at(prep, prep.x, beta, tie_method == "efron")[1]


def partial_hessian(dataset: Dataset, beta, tie_method: str = "breslow") -> np.ndarray:
    """Hessian of the partial log likelihood (negative semidefinite)."""
    if tie_method not in TIE_METHODS:
        raise ValidationError(f"tie_method must be one of {TIE_METHODS}")
    prep = _Prepared(dataset)
    beta = _check_beta(beta, prep.p)
    return _stats_at(prep, prep.x, beta, tie_method == "efron")[2]


def _reject_constant_columns(dataset: Dataset, prep: _Prepared) -> None:
    # constancy judged over subjects still at risk at the first event time
    at_risk = dataset.durations >= prep.event_times[0]
    for j, name in enumerate(dataset.covariate_names):
        col = dataset.covariates[at_risk, j]
        if np.ptp(col) == 0.0:
            raise ValidationError(
                f"covariate {name!r} is constant over the risk set; "
                "it carries no information and must be dropped"
            )


def fit(dataset: Dataset, options: FitOptions | None = None) -> CoxFit:
    """Maximize the partial likelihood by damped Newton-Raphson.

    Convergence needs two things: the gradient max-norm under the tolerance
    and a full Newton step that no longer improves the likelihood.  The
    second test is what separates a true maximum from the flat tail of a
    monotone likelihood, where the score also vanishes while the iterates
    keep climbing toward infinite coefficients.

    Raises SeparationError when a coefficient diverges, SingularHessianError
    when the Newton system cannot be solved.  Running out of iterations is
    not an exception; the returned fit carries converged=False.
    """
    options = options or FitOptions()
    efron = options.tie_method == "efron"
    prep = _Prepared(dataset)
    _reject_constant_columns(dataset, prep)

    # centering leaves the maximizer unchanged but keeps exp() tame
    mu = dataset.covariates.mean(axis=0)
    xc = prep.x - mu

    def check_separation(beta: np.ndarray) -> None:
        worst = int(np.argmax(np.abs(beta)))
        if abs(beta[worst]) > _SEPARATION_BOUND:
            raise SeparationError(
                f"coefficient for {dataset.covariate_names[worst]!r} diverged "
                f"(|beta| > {_SEPARATION_BOUND:g}); the likelihood is monotone, "
                "typically from perfect separation or no events on one side"
            )

    beta = np.zeros(prep.p)
    ll, grad, hess, logdenom = _stats_at(prep, xc, beta, efron)
    iterations = 0
    converged = bool(np.max(np.abs(grad)) < options.tolerance)
    while iterations < options.max_iterations:
        try:
            delta = np.linalg.solve(-hess, grad)
        except np.linalg.LinAlgError:
            raise SingularHessianError(
                "Newton step failed: singular Hessian, check covariates for collinearity"
            ) from None
        if not np.all(np.isfinite(delta)):
            raise SingularHessianError(
                "Newton step failed: non-finite direction, check covariates for collinearity"
            )
        alpha = 1.0
        candidate = None
        at_optimum = False
        for attempt in range(_MAX_HALVINGS + 1):
            trial = beta + alpha * delta
            gain = _loglik_at(prep, xc, trial, efron) - ll
            if attempt == 0 and converged and gain <= _ASCENT_EPS * max(1.0, abs(ll)):
                # small gradient and a full step adds nothing: a maximum,
                # not the flat tail of a monotone likelihood
                at_optimum = True
                break
            if gain > 0.0:
                candidate = trial
                break
            alpha *= 0.5
        if at_optimum:
            break
        if candidate is None:
            # Line search found no float-visible ascent.  When the quadratic
            # model predicts a gain below the resolution of the likelihood
            # value itself, the objective is flat at machine precision; take
            # the full Newton step on the model's word and stop after it.
            predicted = 0.5 * float(grad @ delta)
            if predicted > _ASCENT_EPS * max(1.0, abs(ll)):
                break
            beta = beta + delta
            iterations += 1
            check_separation(beta)
            ll, grad, hess, logdenom = _stats_at(prep, xc, beta, efron)
            converged = bool(np.max(np.abs(grad)) < options.tolerance)
            break
        beta = candidate
        iterations += 1
        check_separation(beta)
        ll, grad, hess, logdenom = _stats_at(prep, xc, beta, efron)
        converged = bool(np.max(np.abs(grad)) < options.tolerance)

    try:
        covariance = np.linalg.inv(-hess)
    except np.linalg.LinAlgError:
        raise SingularHessianError(
            "covariance unavailable: singular Hessian at the optimum"
        ) from None
    diag = np.diagonal(covariance)
    if np.any(diag <= 0) or not np.all(np.isfinite(covariance)):
        raise SingularHessianError("covariance unavailable: Hessian not negative definite")
    se = np.sqrt(diag)
    zq = norm_ppf(0.5 + options.confidence_level / 2.0)
    zscores = beta / se
    # baseline denominators were computed on centered covariates; undo the shift
    base_increment = prep.deaths * np.exp(-(logdenom + float(mu @ beta)))
    return CoxFit(
        covariate_names=dataset.covariate_names,
        coefficients=beta,
        std_errors=se,
        covariance=covariance,
        hazard_ratios=np.exp(beta),
        ci_lower=np.exp(beta - zq * se),
        ci_upper=np.exp(beta + zq * se),
        p_values=two_sided_p(zscores),
        log_likelihood=ll,
        iterations=iterations,
        converged=converged,
        tie_method=options.tie_method,
        confidence_level=options.confidence_level,
        baseline_times=prep.event_times,
        baseline_cumulative_hazard=np.cumsum(base_increment),
    )


def hazard_ratio_between(fit_result: CoxFit, z, z_star) -> float:
    """Relative hazard exp(beta . (z - z_star)) between two covariate vectors."""
    p = fit_result.coefficients.size
    z = _check_beta(z, p)
    z_star = _check_beta(z_star, p)
    return float(np.exp(fit_result.coefficients @ (z - z_star)))


def baseline_hazard_at(fit_result: CoxFit, times) -> np.ndarray:
    """Step lookup of the baseline cumulative hazard, 0 before the first event."""
    times = np.asarray(times, dtype=float)
    steps = np.concatenate(([0.0], fit_result.baseline_cumulative_hazard))
    idx = np.searchsorted(fit_result.baseline_times, times, side="right")
    return steps[idx]


def predict_survival(fit_result: CoxFit, z, times, label: str | None = None) -> SurvivalCurve:
    """Survival curve for covariates z: exp(-H0(t) * exp(beta . z))."""
    if not fit_result.converged:
        raise ValidationError("cannot predict from a fit that did not converge")
    p = fit_result.coefficients.size
    z = _check_beta(z, p)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValidationError("times must be a non-empty 1-D array")
    if np.any(times < 0) or np.any(np.diff(times) <= 0):
        raise ValidationError("times must be nonnegative and strictly increasing")
    risk = float(np.exp(fit_result.coefficients @ z))
    survival = np.exp(-baseline_hazard_at(fit_result, times) * risk)
    return SurvivalCurve(
        times=times,
        survival=survival,
        ci_lower=survival.copy(),
        ci_upper=survival.copy(),
        at_risk=np.zeros(times.size, dtype=np.int64),
        confidence_level=fit_result.confidence_level,
        max_time=float(times[-1]),
        label=label,
    )


def fit_to_json(fit_result: CoxFit) -> dict:
    """JSON-ready report, one entry per covariate plus fit diagnostics."""
    covariates = []
    for i, name in enumerate(fit_result.covariate_names):
        se = float(fit_result.std_errors[i])
        coef = float(fit_result.coefficients[i])
        covariates.append(
            {
                "name": name,
                "coef": coef,
                "hr": float(fit_result.hazard_ratios[i]),
                "hr_ci_lower": float(fit_result.ci_lower[i]),
                "hr_ci_upper": float(fit_result.ci_upper[i]),
                "se": se,
                "z": coef / se,
                "p": float(fit_result.p_values[i]),
            }
        )
    return {
        "covariates": covariates,
        "log_likelihood": float(fit_result.log_likelihood),
        "iterations": int(fit_result.iterations),
        "converged": bool(fit_result.converged),
        "tie_method": fit_result.tie_method,
    }


def fit_to_text_table(fit_result: CoxFit) -> str:
    """Aligned text table: covariate, HR, confidence interval, p."""
    level = int(round(fit_result.confidence_level * 100))
    header = ["covariate", "HR", f"{level}% CI", "p"]
    rows = [header]
    for i, name in enumerate(fit_result.covariate_names):
        rows.append(
            [
                name,
                f"{fit_result.hazard_ratios[i]:.6g}",
                f"({fit_result.ci_lower[i]:.6g}, {fit_result.ci_upper[i]:.6g})",
                f"{fit_result.p_values[i]:.6g}",
            ]
        )
    widths = [max(len(r[c]) for r in rows) for c in range(4)]
    lines = []
    for r in rows:
        lines.append(
            "  ".join(
                r[c].ljust(widths[c]) if c in (0, 2) else r[c].rjust(widths[c])
                for c in range(4)
            ).rstrip()
        )
    lines.append("")
    lines.append(
        f"log-likelihood {fit_result.log_likelihood:.6g}  "
        f"iterations {fit_result.iterations}  "
        f"converged {'yes' if fit_result.converged else 'no'}  "
        f"ties {fit_result.tie_method}"
    )
    return "\n".join(lines) + "\n"

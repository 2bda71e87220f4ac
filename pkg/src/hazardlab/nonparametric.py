"""Nonparametric estimators: product-limit survival, cumulative hazard,
and the observed/expected two-group hazard ratio.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._stats import norm_ppf
from .data import Dataset, ValidationError, build_event_table, format_number, _readonly

__all__ = [
    "SurvivalCurve",
    "HazardCurve",
    "TwoGroupHR",
    "kaplan_meier",
    "survival_at",
    "cumulative_hazard",
    "two_group_hazard_ratio",
    "curve_to_csv",
    "curve_to_json",
]


@dataclass(frozen=True, eq=False)
class SurvivalCurve:
    """Step survival estimate with pointwise confidence bands.

    Rows exist only at distinct event times; the estimate is 1 before the
    first row and constant between rows.  Valid up to max_time (the largest
    observed duration), with no extrapolation beyond it.  all_censored
    flags the degenerate no-events case where the curve is identically 1.
    """

    times: np.ndarray
    survival: np.ndarray
    ci_lower: np.ndarray
    ci_upper: np.ndarray
    at_risk: np.ndarray
    confidence_level: float
    max_time: float
    label: str | None = None
    all_censored: bool = False

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        survival = np.asarray(self.survival, dtype=float)
        lower = np.asarray(self.ci_lower, dtype=float)
        upper = np.asarray(self.ci_upper, dtype=float)
        at_risk = np.asarray(self.at_risk, dtype=np.int64)
        if not (times.shape == survival.shape == lower.shape == upper.shape == at_risk.shape):
            raise ValidationError("curve columns must share one length")
        if times.size:
            if np.any(np.diff(times) <= 0):
                raise ValidationError("curve times must be strictly increasing")
            if np.any(survival < 0) or np.any(survival > 1):
                raise ValidationError("survival values must lie in [0, 1]")
            if np.any(np.diff(survival) > 0):
                raise ValidationError("survival must be non-increasing")
            if np.any(lower > survival + 1e-12) or np.any(upper < survival - 1e-12):
                raise ValidationError("confidence band must bracket the estimate")
        if not 0.0 < self.confidence_level < 1.0:
            raise ValidationError("confidence level must lie in (0, 1)")
        for name, arr in (
            ("times", times),
            ("survival", survival),
            ("ci_lower", lower),
            ("ci_upper", upper),
            ("at_risk", at_risk),
        ):
            object.__setattr__(self, name, _readonly(arr))


@dataclass(frozen=True, eq=False)
class HazardCurve:
    """Step cumulative-hazard estimate, +inf where survival reached 0."""

    times: np.ndarray
    cumulative_hazard: np.ndarray
    max_time: float
    label: str | None = None

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        h = np.asarray(self.cumulative_hazard, dtype=float)
        if times.shape != h.shape:
            raise ValidationError("curve columns must share one length")
        if times.size and np.any(np.diff(h) < 0):
            raise ValidationError("cumulative hazard must be non-decreasing")
        object.__setattr__(self, "times", _readonly(times))
        object.__setattr__(self, "cumulative_hazard", _readonly(h))


@dataclass(frozen=True)
class TwoGroupHR:
    """Observed and expected event counts with their hazard-ratio estimate.

    hazard_ratio is None when either group has zero expected events, which
    makes the ratio undefined.
    """

    observed_a: int
    observed_b: int
    expected_a: float
    expected_b: float
    hazard_ratio: float | None


def kaplan_meier(
    dataset: Dataset, confidence_level: float = 0.95, label: str | None = None
) -> SurvivalCurve:
    """Product-limit survival estimate with Greenwood log(-log) bands."""
    if not 0.0 < confidence_level < 1.0:
        raise ValidationError("confidence level must lie in (0, 1)")
    table = build_event_table(dataset)
    max_time = float(dataset.durations.max())
    if table.n_rows == 0:
        empty = np.empty(0)
        return SurvivalCurve(
            times=empty,
            survival=empty.copy(),
            ci_lower=empty.copy(),
            ci_upper=empty.copy(),
            at_risk=np.empty(0, dtype=np.int64),
            confidence_level=confidence_level,
            max_time=max_time,
            label=label,
            all_censored=True,
        )
    n = table.at_risk.astype(float)
    d = table.deaths.astype(float)
    survival = np.cumprod((n - d) / n)
    with np.errstate(divide="ignore"):
        greenwood = np.cumsum(np.where(n > d, d / (n * (n - d)), np.inf))
    z = norm_ppf(0.5 + confidence_level / 2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        # log(-log) band: S ** exp(+-z * sqrt(var)/(-log S))
        widen = np.exp(z * np.sqrt(greenwood) / (-np.log(survival)))
        lower = survival ** widen
        upper = survival ** (1.0 / widen)
    dead_end = survival <= 0.0
    lower = np.where(dead_end, 0.0, lower)
    upper = np.where(dead_end, 0.0, upper)
    return SurvivalCurve(
        times=table.times,
        survival=survival,
        ci_lower=np.clip(lower, 0.0, 1.0),
        ci_upper=np.clip(upper, 0.0, 1.0),
        at_risk=table.at_risk,
        confidence_level=confidence_level,
        max_time=max_time,
        label=label,
    )


def survival_at(curve: SurvivalCurve, t: float) -> float:
    """Step-function lookup, defined for 0 <= t <= curve.max_time."""
    t = float(t)
    if t < 0:
        raise ValidationError("time must be nonnegative")
    if t > curve.max_time:
        raise ValidationError(
            f"no estimate beyond the last observed time {curve.max_time}"
        )
    idx = int(np.searchsorted(curve.times, t, side="right"))
    if idx == 0:
        return 1.0
    return float(curve.survival[idx - 1])


def cumulative_hazard(curve: SurvivalCurve) -> HazardCurve:
    """Transform survival to cumulative hazard, H = -log S."""
    with np.errstate(divide="ignore"):
        h = -np.log(curve.survival)
    return HazardCurve(
        times=curve.times.copy(),
        cumulative_hazard=h,
        max_time=curve.max_time,
        label=curve.label,
    )


def two_group_hazard_ratio(group_a: Dataset, group_b: Dataset) -> TwoGroupHR:
    """Hazard ratio of A over B from observed and expected event counts.

    Expected counts allocate the pooled events at each distinct event time
    in proportion to each group's share of the pooled risk set.
    """
    table_a = build_event_table(group_a)
    table_b = build_event_table(group_b)
    times = np.union1d(table_a.times, table_b.times)
    sorted_a = np.sort(group_a.durations)
    sorted_b = np.sort(group_b.durations)
    n_a = group_a.n - np.searchsorted(sorted_a, times, side="left")
    n_b = group_b.n - np.searchsorted(sorted_b, times, side="left")
    d_a = np.zeros(times.size)
    d_a[np.searchsorted(times, table_a.times)] = table_a.deaths
    d_b = np.zeros(times.size)
    d_b[np.searchsorted(times, table_b.times)] = table_b.deaths
    d = d_a + d_b
    n = (n_a + n_b).astype(float)
    expected_a = float(np.sum(n_a * d / n))
    expected_b = float(np.sum(n_b * d / n))
    observed_a = group_a.n_events
    observed_b = group_b.n_events
    if expected_a == 0.0 or expected_b == 0.0:
        ratio = None
    elif observed_b == 0:
        ratio = float("inf")
    else:
        ratio = (observed_a / expected_a) / (observed_b / expected_b)
    return TwoGroupHR(
        observed_a=observed_a,
        observed_b=observed_b,
        expected_a=expected_a,
        expected_b=expected_b,
        hazard_ratio=ratio,
    )


def curve_to_csv(curve: SurvivalCurve, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(curve_to_csv_text(curve))


def curve_to_csv_text(curve: SurvivalCurve) -> str:
    lines = ["t,survival,ci_lower,ci_upper,at_risk"]
    for i in range(curve.times.size):
        lines.append(
            ",".join(
                (
                    format_number(curve.times[i]),
                    format_number(curve.survival[i]),
                    format_number(curve.ci_lower[i]),
                    format_number(curve.ci_upper[i]),
                    str(int(curve.at_risk[i])),
                )
            )
        )
    return "\n".join(lines) + "\n"


def curve_to_json(curve: SurvivalCurve) -> dict:
    return {
        "t": [float(v) for v in curve.times],
        "survival": [float(v) for v in curve.survival],
        "ci_lower": [float(v) for v in curve.ci_lower],
        "ci_upper": [float(v) for v in curve.ci_upper],
        "at_risk": [int(v) for v in curve.at_risk],
    }

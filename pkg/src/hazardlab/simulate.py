"""Seeded Monte-Carlo generator for right-censored driving campaigns.

A campaign runs a list of (model type, weather) combinations.  Each
combination drives back to back until its minute budget is used up: a drive
ends at its first corner-case event, or is right-censored at the horizon.
Event times are exponential via inverse transform, T = -ln(U) / lambda with
lambda = baseline_rate * exp(beta . Z), so the generated data follow the
proportional-hazards model they are later fitted with.  Every combination
owns its own counter-based random stream (campaign seed XOR combination
index), which makes output reproducible byte for byte for a given seed and
independent of chunking.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .data import (
    COVARIATE_NAMES,
    Dataset,
    ModelType,
    ValidationError,
    _readonly,
)

__all__ = [
    "Weather",
    "CampaignConfig",
    "CombinationCount",
    "SimulatedCampaign",
    "standard_campaign_config",
    "simulate",
    "expected_event_total",
    "calibrate_baseline_rate",
    "with_rate",
    "campaign_summary",
    "DEFAULT_TRUE_HAZARD_RATIOS",
    "DEFAULT_BASELINE_RATE",
]


class Weather(str, enum.Enum):
    CLEAR = "clear"
    RAIN = "rain"
    FOG = "fog"
    NIGHT = "night"


# planted hazard ratios for (rain, fog, night, experts, universal)
DEFAULT_TRUE_HAZARD_RATIOS = (1.01, 1.01, 5.83, 0.02, 0.17)
DEFAULT_BASELINE_RATE = 5e-4

_MAX_EXP_ARG = 700.0
_RAW_DOMAINS = {"rain": (70.0, 100.0), "fog": (50.0, 100.0)}


@dataclass(frozen=True, eq=False)
class CampaignConfig:
    """Everything a campaign needs to be regenerated exactly."""

    combinations: tuple[tuple[ModelType, Weather], ...]
    true_beta: np.ndarray
    baseline_rate_per_s: float = DEFAULT_BASELINE_RATE
    minutes_per_combination: float = 120.0
    horizon_s: float = 600.0
    rain_raw_range: tuple[float, float] = (70.0, 100.0)
    fog_raw_range: tuple[float, float] = (50.0, 100.0)
    seed: int = 0
    weibull_shape: float = 1.0
    max_drives_per_combination: int = 20_000_000

    def __post_init__(self) -> None:
        combos = tuple((ModelType(m), Weather(w)) for m, w in self.combinations)
        if not combos:
            raise ValidationError("campaign needs at least one combination")
        beta = np.asarray(self.true_beta, dtype=float)
        if beta.shape != (len(COVARIATE_NAMES),):
            raise ValidationError(
                f"true_beta must have shape ({len(COVARIATE_NAMES)},), got {beta.shape}"
            )
        if not np.all(np.isfinite(beta)):
            raise ValidationError("true_beta must be finite")
        if not self.baseline_rate_per_s > 0:
            raise ValidationError("baseline_rate_per_s must be positive")
        if not self.minutes_per_combination > 0:
            raise ValidationError("minutes_per_combination must be positive")
        if not self.horizon_s > 0:
            raise ValidationError("horizon_s must be positive")
        for name, rng in (("rain", self.rain_raw_range), ("fog", self.fog_raw_range)):
            lo, hi = float(rng[0]), float(rng[1])
            dlo, dhi = _RAW_DOMAINS[name]
            if not (dlo <= lo <= hi <= dhi):
                raise ValidationError(
                    f"{name} raw range must satisfy {dlo} <= lo <= hi <= {dhi}"
                )
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValidationError("seed must fit in an unsigned 64-bit integer")
        if not self.weibull_shape > 0:
            raise ValidationError("weibull_shape must be positive")
        object.__setattr__(self, "combinations", combos)
        object.__setattr__(self, "true_beta", _readonly(beta))
        object.__setattr__(
            self,
            "rain_raw_range",
            (float(self.rain_raw_range[0]), float(self.rain_raw_range[1])),
        )
        object.__setattr__(
            self,
            "fog_raw_range",
            (float(self.fog_raw_range[0]), float(self.fog_raw_range[1])),
        )
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class CombinationCount:
    model: ModelType
    weather: Weather
    drives: int
    events: int


@dataclass(frozen=True, eq=False)
class SimulatedCampaign:
    """A generated dataset plus its per-combination bookkeeping."""

    dataset: Dataset
    per_combination: tuple[CombinationCount, ...]
    total_drives: int
    total_events: int
    seed: int


def standard_campaign_config(
    seed: int,
    minutes_per_combination: float = 120.0,
    baseline_rate_per_s: float = DEFAULT_BASELINE_RATE,
    horizon_s: float = 600.0,
) -> CampaignConfig:
    """The 11-combination campaign layout with the default planted effects.

    Baseline and universal models drive all four weathers; each specialist
    model drives only the weather it was tuned for.
    """
    m, w = ModelType, Weather
    combinations = (
        (m.BASELINE, w.CLEAR),
        (m.BASELINE, w.RAIN),
        (m.BASELINE, w.FOG),
        (m.BASELINE, w.NIGHT),
        (m.EXPERT, w.RAIN),
        (m.EXPERT, w.FOG),
        (m.EXPERT, w.NIGHT),
        (m.UNIVERSAL, w.CLEAR),
        (m.UNIVERSAL, w.RAIN),
        (m.UNIVERSAL, w.FOG),
        (m.UNIVERSAL, w.NIGHT),
    )
    return CampaignConfig(
        combinations=combinations,
        true_beta=np.log(DEFAULT_TRUE_HAZARD_RATIOS),
        baseline_rate_per_s=baseline_rate_per_s,
        minutes_per_combination=minutes_per_combination,
        horizon_s=horizon_s,
        seed=seed,
    )


def _combination_params(config: CampaignConfig, model: ModelType, weather: Weather):
    """(base_eta, beta_raw, raw_lo, raw_hi) for the drive kernel."""
    beta = config.true_beta
    base_eta = 0.0
    beta_raw = 0.0
    raw_lo = raw_hi = 0.0
    if weather is Weather.RAIN:
        beta_raw = beta[0]
        raw_lo, raw_hi = config.rain_raw_range
    elif weather is Weather.FOG:
        beta_raw = beta[1]
        raw_lo, raw_hi = config.fog_raw_range
    elif weather is Weather.NIGHT:
        base_eta += beta[2]
        # the raw draw is the sun position, negative the whole night
        raw_lo, raw_hi = -90.0, 0.0
    if model is ModelType.EXPERT:
        base_eta += beta[3]
    elif model is ModelType.UNIVERSAL:
        base_eta += beta[4]
    return float(base_eta), float(beta_raw), float(raw_lo), float(raw_hi)


def _check_rate_overflow(config: CampaignConfig) -> None:
    for model, weather in config.combinations:
        base_eta, beta_raw, lo, hi = _combination_params(config, model, weather)
        arg = base_eta + max(beta_raw * lo, beta_raw * hi)
        if arg > _MAX_EXP_ARG:
            raise ValidationError(
                f"hazard overflow for {model.value}/{weather.value}: "
                f"exp argument {arg:.3g} exceeds {_MAX_EXP_ARG:g}"
            )


def simulate(config: CampaignConfig) -> SimulatedCampaign:
    """Generate the campaign deterministically from its config."""
    _check_rate_overflow(config)
    budget_s = config.minutes_per_combination * 60.0
    durations = []
    events = []
    covariates = []
    labels: list[str] = []
    counts = []
    for index, (model, weather) in enumerate(config.combinations):
        base_eta, beta_raw, raw_lo, raw_hi = _combination_params(config, model, weather)
        stream_seed = int(np.uint64(config.seed) ^ np.uint64(index))
        dur, ev, raw = _kernels.sim_combination(
            stream_seed,
            budget_s,
            config.horizon_s,
            config.baseline_rate_per_s,
            base_eta,
            beta_raw,
            raw_lo,
            raw_hi,
            config.weibull_shape,
            config.max_drives_per_combination,
        )
        n = dur.size
        block = np.zeros((n, len(COVARIATE_NAMES)))
        if weather is Weather.RAIN:
            block[:, 0] = raw
        elif weather is Weather.FOG:
            block[:, 1] = raw
        elif weather is Weather.NIGHT:
            block[:, 2] = 1.0
        if model is ModelType.EXPERT:
            block[:, 3] = 1.0
        elif model is ModelType.UNIVERSAL:
            block[:, 4] = 1.0
        durations.append(dur)
        events.append(ev)
        covariates.append(block)
        labels.extend([f"{model.value}/{weather.value}"] * n)
        counts.append(
            CombinationCount(
                model=model,
                weather=weather,
                drives=int(n),
                events=int(np.count_nonzero(ev)),
            )
        )
    dataset = Dataset(
        durations=np.concatenate(durations),
        events=np.concatenate(events),
        covariates=np.vstack(covariates),
        covariate_names=COVARIATE_NAMES,
        labels=tuple(labels),
    )
    return SimulatedCampaign(
        dataset=dataset,
        per_combination=tuple(counts),
        total_drives=dataset.n,
        total_events=dataset.n_events,
        seed=config.seed,
    )


_QUAD_NODES, _QUAD_WEIGHTS = np.polynomial.legendre.leggauss(64)


def expected_event_total(config: CampaignConfig, rate: float | None = None) -> float:
    """Expected number of events for a campaign, without simulating.

    Drives form a renewal process, so a combination's expected event count
    is budget * E[P(event)] / E[drive length], the expectations running over
    the raw weather draw (fixed Gauss-Legendre quadrature).  Half an average
    drive is added to the budget because the drive crossing the budget line
    still completes.
    """
    if rate is None:
        rate = config.baseline_rate_per_s
    if config.weibull_shape != 1.0:
        raise ValidationError("expected-event accounting needs the exponential hazard")
    budget_s = config.minutes_per_combination * 60.0
    h = config.horizon_s
    total = 0.0
    for model, weather in config.combinations:
        base_eta, beta_raw, lo, hi = _combination_params(config, model, weather)
        if lo == hi or beta_raw == 0.0:
            lam = np.array([rate * math.exp(base_eta + beta_raw * lo)])
            weights = np.array([1.0])
        else:
            nodes = 0.5 * (hi - lo) * _QUAD_NODES + 0.5 * (hi + lo)
            lam = rate * np.exp(base_eta + beta_raw * nodes)
            weights = _QUAD_WEIGHTS / 2.0
        # P(event) = 1 - exp(-lam h); E[min(T, h)] = P(event) / lam
        p_event = -np.expm1(-lam * h)
        mean_len = p_event / lam
        e_p = float(weights @ p_event)
        e_len = float(weights @ mean_len)
        total += (budget_s + e_len / 2.0) * e_p / e_len
    return total


def calibrate_baseline_rate(
    target_total_events: float, config: CampaignConfig
) -> float:
    """Rate whose expected campaign event total matches the target.

    Bisection over [1e-6, 1e-1] per second; the expected total is monotone
    in the rate.  Raises when the target lies outside what that bracket can
    produce.
    """
    if not target_total_events > 0:
        raise ValidationError("target event count must be positive")
    lo, hi = 1e-6, 1e-1
    f_lo = expected_event_total(config, lo) - target_total_events
    f_hi = expected_event_total(config, hi) - target_total_events
    if f_lo > 0 or f_hi < 0:
        raise ValidationError(
            f"target {target_total_events:g} events is unreachable for rates "
            f"in [{lo:g}, {hi:g}] with this campaign layout"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if expected_event_total(config, mid) < target_total_events:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * hi:
            break
    rate = 0.5 * (lo + hi)
    achieved = expected_event_total(config, rate)
    if abs(achieved - target_total_events) > 0.1 * target_total_events:
        raise ValidationError(
            f"calibration stalled: expected {achieved:g} events for target "
            f"{target_total_events:g}"
        )
    return rate


def with_rate(config: CampaignConfig, rate: float) -> CampaignConfig:
    return replace(config, baseline_rate_per_s=float(rate))


def campaign_summary(campaign: SimulatedCampaign) -> dict:
    """JSON-ready per-combination counts and totals."""
    return {
        "per_combination": [
            {
                "model": c.model.value,
                "weather": c.weather.value,
                "drives": c.drives,
                "events": c.events,
            }
            for c in campaign.per_combination
        ],
        "total_drives": campaign.total_drives,
        "total_events": campaign.total_events,
        "seed": campaign.seed,
    }

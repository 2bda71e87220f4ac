"""Survival analysis for right-censored driving campaigns."""

from ._kernels import USING_NUMBA
from .coxph import (
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
from .data import (
    COVARIATE_NAMES,
    CensoringKind,
    Dataset,
    EventTable,
    ModelType,
    Observation,
    ValidationError,
    build_event_table,
    encode_campaign_covariates,
    load_csv,
    write_csv,
)
from .nonparametric import (
    HazardCurve,
    SurvivalCurve,
    TwoGroupHR,
    cumulative_hazard,
    curve_to_csv,
    curve_to_json,
    kaplan_meier,
    survival_at,
    two_group_hazard_ratio,
)
from .plot import emit_plot
from .simulate import (
    CampaignConfig,
    CombinationCount,
    SimulatedCampaign,
    Weather,
    calibrate_baseline_rate,
    campaign_summary,
    expected_event_total,
    simulate,
    standard_campaign_config,
    with_rate,
)

__version__ = "0.1.0"

__all__ = [
    "USING_NUMBA",
    "COVARIATE_NAMES",
    "CensoringKind",
    "ModelType",
    "ValidationError",
    "Observation",
    "Dataset",
    "EventTable",
    "build_event_table",
    "encode_campaign_covariates",
    "load_csv",
    "write_csv",
    "SurvivalCurve",
    "HazardCurve",
    "TwoGroupHR",
    "kaplan_meier",
    "survival_at",
    "cumulative_hazard",
    "two_group_hazard_ratio",
    "curve_to_csv",
    "curve_to_json",
    "CoxFit",
    "FitOptions",
    "SeparationError",
    "SingularHessianError",
    "partial_log_likelihood",
    "partial_gradient",
    "partial_hessian",
    "fit",
    "hazard_ratio_between",
    "predict_survival",
    "baseline_hazard_at",
    "fit_to_json",
    "fit_to_text_table",
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
    "emit_plot",
    "__version__",
]

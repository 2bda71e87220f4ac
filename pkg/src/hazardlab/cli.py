"""Command line front end.

Exit codes: 0 success, 1 validation problems (bad files, bad flags,
malformed rows), 2 numerical failures (non-convergence, separation,
singular Hessian).  Numbers print with 6 significant digits; --json
switches machine-readable output on where it applies.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from .coxph import (
    FitOptions,
    SeparationError,
    SingularHessianError,
    fit,
    fit_to_json,
    fit_to_text_table,
    predict_survival,
)
from .data import COVARIATE_NAMES, Dataset, ValidationError, load_csv, write_csv
from .nonparametric import (
    curve_to_json,
    kaplan_meier,
    two_group_hazard_ratio,
)
from .plot import emit_plot
from .simulate import (
    calibrate_baseline_rate,
    campaign_summary,
    simulate,
    standard_campaign_config,
    with_rate,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERIC = 2

_SEED_ENV = "HAZARDLAB_SEED"


def _fmt(v: float) -> str:
    return f"{float(v):.6g}"


def _print_table(rows: list[list[str]], *, left_cols=(0,)) -> None:
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    for r in rows:
        line = "  ".join(
            r[c].ljust(widths[c]) if c in left_cols else r[c].rjust(widths[c])
            for c in range(len(r))
        )
        print(line.rstrip())


def _default_seed() -> int:
    raw = os.environ.get(_SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw, 0)
    except ValueError:
        raise ValidationError(
            f"{_SEED_ENV} must be an integer, got {raw!r}"
        ) from None


def _split_groups(dataset: Dataset, column: str):
    """(label, subset) pairs for --group-by; only boolean splits allowed."""
    if column == "model":
        e = dataset.covariates[:, dataset.covariate_names.index("experts")]
        u = dataset.covariates[:, dataset.covariate_names.index("universal")]
        masks = [
            ("baseline", (e == 0) & (u == 0)),
            ("experts", e == 1),
            ("universal", u == 1),
        ]
    else:
        if column not in dataset.covariate_names:
            raise ValidationError(
                f"unknown covariate {column!r}; choose from "
                f"{', '.join(dataset.covariate_names)} or 'model'"
            )
        col = dataset.covariates[:, dataset.covariate_names.index(column)]
        if not np.all(np.isin(col, (0.0, 1.0))):
            raise ValidationError(
                f"cannot group by {column!r}: grouping needs a boolean column"
            )
        masks = [(f"{column}=0", col == 0), (f"{column}=1", col == 1)]
    groups = [
        (label, dataset.select(mask)) for label, mask in masks if bool(mask.any())
    ]
    if len(groups) < 2:
        raise ValidationError(f"grouping by {column!r} leaves a single group")
    return groups


def _cmd_fit_km(args) -> int:
    dataset = load_csv(args.input)
    if args.group_by:
        groups = _split_groups(dataset, args.group_by)
    else:
        groups = [(None, dataset)]
    curves = [
        kaplan_meier(ds, confidence_level=args.confidence, label=label)
        for label, ds in groups
    ]
    if args.json:
        payload = {
            "confidence_level": args.confidence,
            "curves": [
                {"label": c.label, "all_censored": c.all_censored, **curve_to_json(c)}
                for c in curves
            ],
        }
        print(json.dumps(payload, indent=2))
    else:
        for i, curve in enumerate(curves):
            if i:
                print()
            if curve.label is not None:
                print(f"[{curve.label}]")
            if curve.all_censored:
                print(
                    "all observations censored; survival stays at 1 "
                    f"through t={_fmt(curve.max_time)}"
                )
                continue
            rows = [["t", "at_risk", "survival", "ci_lower", "ci_upper"]]
            for j in range(curve.times.size):
                rows.append(
                    [
                        _fmt(curve.times[j]),
                        str(int(curve.at_risk[j])),
                        _fmt(curve.survival[j]),
                        _fmt(curve.ci_lower[j]),
                        _fmt(curve.ci_upper[j]),
                    ]
                )
            _print_table(rows, left_cols=())
    if args.out:
        svg, csv_out = emit_plot(curves, args.out, style="survival")
        print(f"wrote {svg}", file=sys.stderr)
        print(f"wrote {csv_out}", file=sys.stderr)
    return EXIT_OK


def _cmd_fit_cox(args) -> int:
    dataset = load_csv(args.input)
    options = FitOptions(
        tolerance=args.tolerance,
        max_iterations=args.max_iter,
        tie_method=args.ties,
        confidence_level=args.confidence,
    )
    result = fit(dataset, options)
    if args.json:
        print(json.dumps(fit_to_json(result), indent=2))
    else:
        print(fit_to_text_table(result), end="")
    if not result.converged:
        print(
            f"did not converge in {result.iterations} iterations "
            f"(gradient still above {options.tolerance:g}); "
            "try more iterations or check for near-separation",
            file=sys.stderr,
        )
        return EXIT_NUMERIC
    return EXIT_OK


def _cmd_logrank_hr(args) -> int:
    group_a = load_csv(args.input_a)
    group_b = load_csv(args.input_b)
    result = two_group_hazard_ratio(group_a, group_b)
    if args.json:
        payload = {
            "observed_a": result.observed_a,
            "expected_a": result.expected_a,
            "observed_b": result.observed_b,
            "expected_b": result.expected_b,
            "hazard_ratio": result.hazard_ratio,
        }
        print(json.dumps(payload, indent=2))
        return EXIT_OK
    rows = [
        ["group", "observed", "expected"],
        ["A", str(result.observed_a), _fmt(result.expected_a)],
        ["B", str(result.observed_b), _fmt(result.expected_b)],
    ]
    _print_table(rows)
    if result.hazard_ratio is None:
        print("hazard_ratio undefined: a group has zero expected events")
    else:
        print(f"hazard_ratio {_fmt(result.hazard_ratio)}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    config = standard_campaign_config(
        seed=args.seed if args.seed is not None else _default_seed(),
        minutes_per_combination=args.minutes,
        horizon_s=args.horizon,
    )
    beta = config.true_beta.copy()
    for i, name in enumerate(COVARIATE_NAMES):
        override = getattr(args, f"beta_{name}")
        if override is not None:
            beta[i] = override
    config = replace(config, true_beta=beta)
    if args.calibrate_events is not None:
        config = with_rate(config, calibrate_baseline_rate(args.calibrate_events, config))
    elif args.rate is not None:
        config = with_rate(config, args.rate)
    campaign = simulate(config)
    write_csv(campaign.dataset, args.out)
    summary = campaign_summary(campaign)
    summary["baseline_rate_per_s"] = config.baseline_rate_per_s
    summary["output"] = args.out
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def _cmd_report(args) -> int:
    dataset = load_csv(args.input)
    os.makedirs(args.out_dir, exist_ok=True)
    written = []

    overall = kaplan_meier(dataset, label="all drives")
    written += emit_plot([overall], os.path.join(args.out_dir, "km_survival.svg"))
    written += emit_plot(
        [overall],
        os.path.join(args.out_dir, "km_cumulative_hazard.svg"),
        style="cumulative_hazard",
    )
    try:
        groups = _split_groups(dataset, "model")
    except ValidationError:
        groups = None
    if groups is not None:
        curves = [kaplan_meier(ds, label=label) for label, ds in groups]
        written += emit_plot(curves, os.path.join(args.out_dir, "km_model_types.svg"))

    try:
        result = fit(dataset)
    except (SeparationError, SingularHessianError) as exc:
        for path in written:
            print(f"wrote {path}")
        print(f"regression failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    json_path = os.path.join(args.out_dir, "cox_fit.json")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(fit_to_json(result), fh, indent=2)
        fh.write("\n")
    written.append(json_path)
    txt_path = os.path.join(args.out_dir, "cox_fit.txt")
    with open(txt_path, "w", encoding="utf-8") as fh:
        fh.write(fit_to_text_table(result))
    written.append(txt_path)

    if result.converged:
        grid = np.linspace(0.0, float(dataset.durations.max()), 121)[1:]
        # representative conditions: mid-range rain and fog intensities
        conditions = {
            "clear": (0.0, 0.0, 0.0),
            "rain": (85.0, 0.0, 0.0),
            "fog": (0.0, 75.0, 0.0),
            "night": (0.0, 0.0, 1.0),
        }
        for weather, (rain, fog, night) in conditions.items():
            curves = [
                predict_survival(
                    result, [rain, fog, night, e, u], grid, label=label
                )
                for label, e, u in (
                    ("baseline", 0.0, 0.0),
                    ("experts", 1.0, 0.0),
                    ("universal", 0.0, 1.0),
                )
            ]
            written += emit_plot(
                curves, os.path.join(args.out_dir, f"predicted_{weather}.svg")
            )
    for path in written:
        print(f"wrote {path}")
    if not result.converged:
        print("regression did not converge; predicted curves skipped", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hazardlab",
        description="Survival analysis for right-censored driving campaigns.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    km = sub.add_parser("fit-km", help="Kaplan-Meier estimate from a drives CSV")
    km.add_argument("input", help="drives CSV")
    km.add_argument("--confidence", type=float, default=0.95)
    km.add_argument(
        "--group-by",
        default=None,
        help="boolean covariate column, or 'model' for baseline/experts/universal",
    )
    km.add_argument("--out", default=None, help="write an SVG plot (plus sibling CSV)")
    km.add_argument("--json", action="store_true")
    km.set_defaults(handler=_cmd_fit_km)

    cox = sub.add_parser("fit-cox", help="proportional-hazards regression")
    cox.add_argument("input", help="drives CSV")
    cox.add_argument("--ties", choices=("breslow", "efron"), default="breslow")
    cox.add_argument("--tolerance", type=float, default=1e-7)
    cox.add_argument("--max-iter", type=int, default=50)
    cox.add_argument("--confidence", type=float, default=0.95)
    cox.add_argument("--json", action="store_true")
    cox.set_defaults(handler=_cmd_fit_cox)

    lr = sub.add_parser(
        "logrank-hr", help="observed/expected hazard ratio between two files"
    )
    lr.add_argument("input_a", help="group A drives CSV")
    lr.add_argument("input_b", help="group B drives CSV")
    lr.add_argument("--json", action="store_true")
    lr.set_defaults(handler=_cmd_logrank_hr)

    sim = sub.add_parser("simulate", help="generate a synthetic campaign CSV")
    sim.add_argument(
        "--seed",
        type=lambda s: int(s, 0),
        default=None,
        help=f"campaign seed (default: ${_SEED_ENV} or 0)",
    )
    sim.add_argument("--minutes", type=float, default=120.0, help="minutes per combination")
    sim.add_argument("--horizon", type=float, default=600.0, help="censoring horizon [s]")
    for name in COVARIATE_NAMES:
        sim.add_argument(
            f"--beta-{name}",
            type=float,
            default=None,
            dest=f"beta_{name}",
            help=f"override the planted log hazard ratio for {name}",
        )
    rate_group = sim.add_mutually_exclusive_group()
    rate_group.add_argument("--rate", type=float, default=None, help="baseline rate per second")
    rate_group.add_argument(
        "--calibrate-events",
        type=float,
        default=None,
        help="choose the rate whose expected event total matches this",
    )
    sim.add_argument("--out", required=True, help="output drives CSV")
    sim.set_defaults(handler=_cmd_simulate)

    rep = sub.add_parser("report", help="plots plus regression report for a CSV")
    rep.add_argument("input", help="drives CSV")
    rep.add_argument("--out-dir", default="report", help="output directory")
    rep.set_defaults(handler=_cmd_report)

    return parser


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse prints its own message; fold usage errors into exit 1
        return EXIT_OK if (exc.code or 0) == 0 else EXIT_VALIDATION
    try:
        return args.handler(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SeparationError, SingularHessianError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

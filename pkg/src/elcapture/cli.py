"""Command-line interface: fit, test, simulate, qq.

Exit codes: 0 success, 2 data/validation problems, 3 optimization or
conditioning failures. Results are written as versioned JSON; ``fit`` and
``test`` also print a compact table of point estimates and intervals.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from .asymptotics import ConditioningError, estimate_w, wald_interval_lognu
from .fit import FitError, MELEFitter, fit_complete_case
from .io import ingest_csv
from .model import DataError, make_family
from .simulate import MetricsReport, qq_export, run_study, scenario_config

SCHEMA_VERSION = 1


@dataclass
class RunConfig:
    """Validated command-line request; no computation happens before this."""

    subcommand: str
    data: str | None = None
    model: str = "base"
    k: int | None = None
    levels: tuple = (0.95,)
    always_observed: str | None = None
    scenario: str | None = None
    nu0: int | None = None
    reps: int = 1000
    seed: int = 0
    out: str | None = None
    qq_out: str | None = None
    report: str | None = None
    complete_case: bool = False
    wald: bool = False
    workers: int | None = None
    verbose: bool = False

    def validate(self):
        if self.subcommand in ("fit", "test"):
            if not self.data:
                raise DataError(f"{self.subcommand} requires --data")
            if self.subcommand == "test" and not self.always_observed:
                raise DataError("test requires --always-observed (extended model)")
        if self.subcommand == "simulate":
            if not self.scenario or self.nu0 is None:
                raise DataError("simulate requires --scenario and --nu0")
        if self.subcommand == "qq" and not self.report:
            raise DataError("qq requires --report")
        for lv in self.levels:
            if not (0.0 < lv < 1.0):
                raise DataError("confidence levels must lie in (0, 1)")


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def _fit_payload(fit, intervals, beta_names):
    return {
        "nu_hat": fit.nu_hat,
        "nu_hat_rounded": fit.nu_hat_rounded,
        "beta_hat": list(fit.beta_hat),
        "beta_names": list(beta_names),
        "alpha_hat": list(fit.alpha_hat),
        "loglik": fit.loglik_max,
        "ci": [
            {"level": iv.level, "lower": iv.lower, "upper": iv.upper,
             "upper_capped": iv.upper_capped}
            for iv in intervals
        ],
        "diagnostics": {
            "n": fit.n,
            "m": fit.m,
            "converged_inner": fit.converged_inner,
            "converged_middle": fit.converged_middle,
            "converged_outer": fit.converged_outer,
            "grad_norm": fit.grad_norm,
            "middle_iterations": fit.middle_iterations,
            "outer_iterations": fit.outer_iterations,
            "nu_capped": fit.nu_capped,
            "active_cells": fit.mask,
        },
    }


def _format_beta(beta):
    return "(" + ", ".join(f"{b:.4f}" for b in beta) + ")"


def _print_fit_table(payload, cc_payload, lrt, out=None):
    out = out if out is not None else sys.stdout

    def ci_str(entry):
        up = entry["upper"]
        up_s = "inf" if up in (None, "inf") or (isinstance(up, float) and math.isinf(up)) \
            else f"{up:.0f}"
        return f"[{entry['lower']:.0f}, {up_s}] @{entry['level']:g}"

    rows = [("Proposed", payload)]
    if cc_payload is not None:
        rows.append(("CC", cc_payload))
    print(f"{'Method':<10}{'nu':>8}  {'CI of nu':<24}beta "
          f"({', '.join(payload['beta_names'])})", file=out)
    for name, pl in rows:
        cis = "; ".join(ci_str(e) for e in pl["ci"]) if pl["ci"] else "-"
        print(f"{name:<10}{pl['nu_hat_rounded']:>8}  {cis:<24}"
              f"{_format_beta(pl['beta_hat'])}", file=out)
    if lrt is not None:
        print(f"LRT for '{lrt['coefficient']}' = 0: statistic {lrt['statistic']:.4f}, "
              f"p-value {lrt['p_value']:.4g}", file=out)


def _run_fit(config: RunConfig) -> dict:
    dataset = ingest_csv(config.data, config.model, config.k,
                         always_observed=config.always_observed)
    family = make_family(config.model, dataset.k)
    fitter = MELEFitter(dataset, family)
    fit = fitter.fit()
    intervals = [fitter.confidence_interval(lv, fit) for lv in config.levels]
    beta_names = ("intercept",) + dataset.covariate_names
    payload = _fit_payload(fit, intervals, beta_names)

    document = {
        "schema_version": SCHEMA_VERSION,
        "command": config.subcommand,
        "family": config.model,
        "k": dataset.k,
        **payload,
    }

    cc_payload = None
    if config.complete_case:
        cc_fit = fit_complete_case(dataset, family)
        cc_fitter = MELEFitter(dataset.complete_case(), family)
        cc_intervals = [cc_fitter.confidence_interval(lv, cc_fit)
                        for lv in config.levels]
        cc_payload = _fit_payload(cc_fit, cc_intervals, beta_names)
        document["complete_case"] = cc_payload

    if config.wald:
        blocks = estimate_w(fit, dataset, family)
        document["wald"] = {
            "var_log_nu": blocks.var_log_nu,
            "condition_number": blocks.condition_number,
            "ill_conditioned": blocks.ill_conditioned,
            "intervals": [
                dict(zip(("lower", "upper"), wald_interval_lognu(fit, blocks, lv)),
                     level=lv)
                for lv in config.levels
            ],
        }

    lrt = None
    if config.subcommand == "test":
        coef_index = 1 + dataset.covariate_names.index(config.always_observed)
        stat, pval = fitter.lrt_coefficient(coef_index, fit)
        lrt = {"coefficient": config.always_observed,
               "statistic": stat, "p_value": pval}
        document["lrt"] = lrt

    _print_fit_table(payload, cc_payload, lrt)
    return document


def _run_simulate(config: RunConfig) -> dict:
    study = scenario_config(config.scenario, nu0=config.nu0, reps=config.reps,
                            seed=config.seed, levels=config.levels)
    report = run_study(study, workers=config.workers,
                       include_complete_case=config.complete_case,
                       compute_w=config.wald)
    document = {
        "schema_version": SCHEMA_VERSION,
        "command": "simulate",
        "config": {
            "scenario": study.scenario, "nu0": study.nu0, "k": study.k,
            "reps": study.reps, "seed": study.seed, "levels": list(study.levels),
        },
        **report.to_dict(),
    }
    if config.qq_out:
        qq_export(report, config.qq_out)
    print(f"scenario {study.scenario} nu0={study.nu0}: bias={report.bias:.3f} "
          f"rmse={report.rmse:.3f} failures={report.failures}")
    return document


def _run_qq(config: RunConfig) -> dict:
    with open(config.report, encoding="utf-8") as fh:
        data = json.load(fh)
    sample = data.get("rprime_sample")
    if not sample:
        raise DataError("report carries no ratio sample")
    report = MetricsReport(
        scenario=data.get("scenario", "?"), nu0=data.get("nu0", 0),
        reps_requested=0, reps_used=len(sample), failures=0,
        bias=float("nan"), rmse=float("nan"), coverage={},
        rprime_sample=sample,
    )
    path = config.qq_out or "qq.csv"
    rows = qq_export(report, path)
    print(f"wrote {len(rows)} QQ rows to {path}")
    return {"schema_version": SCHEMA_VERSION, "command": "qq",
            "rows": len(rows), "path": path}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elcapture",
        description="Empirical-likelihood abundance estimation from "
                    "capture-recapture data with covariates missing at random.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(sp):
        sp.add_argument("--level", action="append", type=float, default=None,
                        help="confidence level, repeatable (default 0.95)")
        sp.add_argument("--out", help="write the JSON document here")
        sp.add_argument("--verbose", "-v", action="store_true")

    for name in ("fit", "test"):
        sp = sub.add_parser(name, help=f"{name} a model on CSV data")
        sp.add_argument("--data", required=True, help="input CSV path")
        sp.add_argument("--model", choices=("base", "extended"),
                        default="extended" if name == "test" else "base")
        sp.add_argument("--k", type=int, help="number of capture occasions")
        sp.add_argument("--always-observed", dest="always_observed",
                        help="name of the always-observed binary column")
        sp.add_argument("--complete-case", dest="complete_case",
                        action="store_true", help="add the complete-case baseline")
        sp.add_argument("--wald", action="store_true",
                        help="add the diagnostic log-scale normal interval")
        add_common(sp)

    sp = sub.add_parser("simulate", help="run a Monte Carlo study")
    sp.add_argument("--scenario", choices=("A", "B", "C", "D"), required=True)
    sp.add_argument("--nu0", type=int, required=True)
    sp.add_argument("--reps", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=None,
                    help="process count (default: ELCAPTURE_WORKERS or all cores)")
    sp.add_argument("--complete-case", dest="complete_case", action="store_true")
    sp.add_argument("--wald", action="store_true",
                    help="collect covariance diagnostics per replication")
    sp.add_argument("--qq-out", dest="qq_out", help="write the QQ table CSV here")
    add_common(sp)

    sp = sub.add_parser("qq", help="export a QQ table from a simulate report")
    sp.add_argument("--report", required=True, help="simulate JSON document")
    sp.add_argument("--qq-out", dest="qq_out", help="output CSV (default qq.csv)")
    add_common(sp)
    return parser


def run(config: RunConfig) -> int:
    """Execute a validated request; returns the process exit code."""
    try:
        config.validate()
        if config.subcommand in ("fit", "test"):
            document = _run_fit(config)
        elif config.subcommand == "simulate":
            document = _run_simulate(config)
        else:
            document = _run_qq(config)
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FitError, ConditioningError, np.linalg.LinAlgError) as exc:
        print(f"optimization failed: {exc}", file=sys.stderr)
        return 3
    if config.out:
        with open(config.out, "w", encoding="utf-8") as fh:
            json.dump(_jsonify(document), fh, indent=2)
            fh.write("\n")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    levels = tuple(args.level) if getattr(args, "level", None) else (0.95,)
    config = RunConfig(
        subcommand=args.subcommand,
        data=getattr(args, "data", None),
        model=getattr(args, "model", "base"),
        k=getattr(args, "k", None),
        levels=levels,
        always_observed=getattr(args, "always_observed", None),
        scenario=getattr(args, "scenario", None),
        nu0=getattr(args, "nu0", None),
        reps=getattr(args, "reps", 1000),
        seed=getattr(args, "seed", 0),
        out=getattr(args, "out", None),
        qq_out=getattr(args, "qq_out", None),
        report=getattr(args, "report", None),
        complete_case=getattr(args, "complete_case", False),
        wald=getattr(args, "wald", False),
        workers=getattr(args, "workers", None),
        verbose=getattr(args, "verbose", False),
    )
    return run(config)


if __name__ == "__main__":
    sys.exit(main())

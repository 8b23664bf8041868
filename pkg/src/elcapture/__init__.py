"""Empirical-likelihood abundance estimation from capture-recapture data
with covariates missing at random."""

from .model import (
    BaseFamily,
    CaptureDataset,
    CellCounts,
    DataError,
    ExtendedFamily,
    capture_prob,
    cell_prob,
    constraint_vector,
    make_family,
    summarize,
)
from .el import (
    ELWeights,
    LambdaSolution,
    el_weights,
    profile_loglik,
    solve_lambda,
)
from .fit import (
    FitError,
    FitOptions,
    FitResult,
    IntervalResult,
    MELEFitter,
    confidence_interval,
    fit_complete_case,
    fit_mele,
    lrt_coefficient,
    ratio_full,
    ratio_profile,
)
from .asymptotics import (
    ConditioningError,
    WBlocks,
    estimate_h,
    estimate_w,
    wald_interval_lognu,
)
from .simulate import (
    MetricsReport,
    ScenarioConfig,
    generate,
    qq_export,
    run_study,
    scenario_config,
)
from .io import dataset_to_csv, ingest_csv

__all__ = [
    "BaseFamily",
    "CaptureDataset",
    "CellCounts",
    "ConditioningError",
    "DataError",
    "ELWeights",
    "ExtendedFamily",
    "FitError",
    "FitOptions",
    "FitResult",
    "IntervalResult",
    "LambdaSolution",
    "MELEFitter",
    "MetricsReport",
    "ScenarioConfig",
    "WBlocks",
    "capture_prob",
    "cell_prob",
    "confidence_interval",
    "constraint_vector",
    "dataset_to_csv",
    "el_weights",
    "estimate_h",
    "estimate_w",
    "fit_complete_case",
    "fit_mele",
    "generate",
    "ingest_csv",
    "lrt_coefficient",
    "make_family",
    "profile_loglik",
    "qq_export",
    "ratio_full",
    "ratio_profile",
    "run_study",
    "scenario_config",
    "solve_lambda",
    "summarize",
    "wald_interval_lognu",
]

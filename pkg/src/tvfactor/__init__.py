"""Time-varying Fama-French factor loadings via penalized GLS.

Estimates random-walk coefficient paths for FF3/FF5/FF6 regressions on the
25 Size x Book-to-Market portfolios, with residual-bootstrap confidence
bands, ADF pre-tests and Kenneth French data-library ingestion.
"""

__version__ = "0.1.0"

from .adf import AdfResult, LagSelection, adf_test, df_critical_value
from .bootstrap import BandSet, BootstrapConfig, bootstrap_bands, flag_significance
from .french import DatasetId, Kind, RawSection, Region, fetch, parse_french_csv, to_panel
from .models import Model, ModelSpec, StaticFit, regressor_row, static_ols
from .panel import MonthStamp, ReturnPanel, SummaryStats, align, describe, excess_returns
from .tv import (
    StateLayout,
    TvProblem,
    TvSolution,
    build_problem,
    kalman_smoother,
    select_lambda,
    solve_tv,
)

__all__ = [
    "AdfResult",
    "BandSet",
    "BootstrapConfig",
    "DatasetId",
    "Kind",
    "LagSelection",
    "Model",
    "ModelSpec",
    "MonthStamp",
    "RawSection",
    "Region",
    "ReturnPanel",
    "StateLayout",
    "StaticFit",
    "SummaryStats",
    "TvProblem",
    "TvSolution",
    "adf_test",
    "align",
    "bootstrap_bands",
    "build_problem",
    "describe",
    "df_critical_value",
    "excess_returns",
    "fetch",
    "flag_significance",
    "kalman_smoother",
    "parse_french_csv",
    "regressor_row",
    "select_lambda",
    "solve_tv",
    "static_ols",
    "to_panel",
]

"""Fama-French model specifications and static (constant-coefficient) OLS.

The static fit is both the constant-loading baseline and the residual
source for the bootstrap bands.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, Singular
from .panel import ReturnPanel


class Model(enum.Enum):
    FF3 = "ff3"
    FF5 = "ff5"
    FF6 = "ff6"


_FACTOR_ORDER = ("Mkt-RF", "SMB", "HML", "RMW", "CMA", "WML")
_FACTOR_COUNT = {Model.FF3: 3, Model.FF5: 5, Model.FF6: 6}


@dataclass(frozen=True)
class ModelSpec:
    """Which factors enter the regression; coefficient order is fixed."""

    model: Model

    @property
    def factor_labels(self) -> tuple[str, ...]:
        return _FACTOR_ORDER[: _FACTOR_COUNT[self.model]]

    @property
    def p(self) -> int:
        """Number of risk factors."""
        return _FACTOR_COUNT[self.model]

    @property
    def m(self) -> int:
        """Coefficients per portfolio (intercept first)."""
        return self.p + 1

    @property
    def coef_names(self) -> tuple[str, ...]:
        return ("alpha",) + tuple(f"beta_{f}" for f in self.factor_labels)


@dataclass(frozen=True)
class StaticFit:
    """Per-portfolio least-squares coefficients and residuals."""

    coef: np.ndarray       # k x m, intercept first
    residuals: np.ndarray  # T x k
    rss: np.ndarray        # k


def regressor_row(spec: ModelSpec, factors_at_t: np.ndarray) -> np.ndarray:
    """[1, f_1, ..., f_p] for one date."""
    f = np.asarray(factors_at_t, dtype=float).ravel()
    if f.size != spec.p:
        raise ShapeError(f"expected {spec.p} factors, got {f.size}")
    return np.concatenate(([1.0], f))


def design_matrix(spec: ModelSpec, factors: ReturnPanel) -> np.ndarray:
    """T x m design with intercept column, factors in canonical order."""
    cols = [factors.column(label) for label in spec.factor_labels]
    X = np.column_stack([np.ones(factors.n_rows)] + cols)
    if not np.all(np.isfinite(X)):
        raise ShapeError("factor panel has missing cells")
    return X


def static_ols(spec: ModelSpec, excess: ReturnPanel, factors: ReturnPanel) -> StaticFit:
    """Equation-by-equation OLS of each portfolio on the shared regressors.

    QR-based for conditioning; identical across portfolios since the
    design matrix is shared.
    """
    if excess.dates != factors.dates:
        raise ShapeError("excess and factor panels are not date-aligned")
    X = design_matrix(spec, factors)
    Y = excess.values
    if not np.all(np.isfinite(Y)):
        raise ShapeError("excess-return panel has missing cells")
    T, m = X.shape
    if T <= m:
        raise ShapeError(f"T={T} too short for {m} coefficients")

    Q, R = np.linalg.qr(X)
    if np.min(np.abs(np.diag(R))) <= 1e-12 * np.max(np.abs(np.diag(R))):
        raise Singular("regressor matrix is rank deficient")
    coef = np.linalg.solve(R, Q.T @ Y)       # m x k
    residuals = Y - X @ coef
    rss = np.einsum("tk,tk->k", residuals, residuals)
    return StaticFit(coef=coef.T, residuals=residuals, rss=rss)

"""Augmented Dickey-Fuller unit-root test with BIC lag selection.

Specification: constant, no trend. The augmentation order is chosen by
BIC over a common estimation sample (rows lost to the largest candidate
lag), then the statistic is re-estimated on the full sample available for
the chosen lag.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, Singular, TooShort

# MacKinnon (2010) response-surface constants for the constant-only case:
# cv(n) = b0 + b1/n + b2/n^2 + b3/n^3.
_CV_CONSTANTS = {
    0.01: (-3.43035, -6.5393, -16.786, -79.433),
    0.05: (-2.86154, -2.8903, -4.234, -40.040),
    0.10: (-2.56677, -1.5384, -2.809, 0.0),
}


@dataclass(frozen=True)
class LagSelection:
    """BIC search bound; None defers to the Schwert rule 12*(T/100)^0.25."""

    max_lag: int | None = None

    def resolve(self, n: int) -> int:
        if self.max_lag is not None:
            if self.max_lag < 0:
                raise ConfigError(f"max_lag must be >= 0, got {self.max_lag}")
            return self.max_lag
        return int(np.floor(12.0 * (n / 100.0) ** 0.25))


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    lag: int
    n_obs: int
    reject_1pct: bool


def df_critical_value(level: float, n_obs: int) -> float:
    """Finite-sample Dickey-Fuller critical value (constant, no trend)."""
    if level not in _CV_CONSTANTS:
        raise ConfigError(f"unsupported level {level}; use 0.01, 0.05 or 0.10")
    b0, b1, b2, b3 = _CV_CONSTANTS[level]
    n = float(n_obs)
    return b0 + b1 / n + b2 / n**2 + b3 / n**3


def _adf_regression(y: np.ndarray, lag: int, start: int):
    """OLS of dy_s on [1, y_{s}, dy_{s-1}..dy_{s-lag}] for s >= start.

    Indices are in differenced-series coordinates: dy[s] = y[s+1] - y[s].
    Returns (t-ratio on the lagged level, SSR, effective n).
    """
    dy = np.diff(y)
    n_dy = dy.size
    rows = np.arange(start, n_dy)
    n = rows.size
    cols = [np.ones(n), y[rows]]
    for j in range(1, lag + 1):
        cols.append(dy[rows - j])
    X = np.column_stack(cols)
    target = dy[rows]

    Q, R = np.linalg.qr(X)
    diag = np.abs(np.diag(R))
    if diag.min() <= 1e-12 * diag.max():
        raise Singular("ADF regression design is rank deficient")
    beta = np.linalg.solve(R, Q.T @ target)
    resid = target - X @ beta
    ssr = float(resid @ resid)
    dof = n - X.shape[1]
    if dof <= 0:
        raise TooShort("no degrees of freedom in ADF regression")
    sigma2 = ssr / dof
    r_inv = np.linalg.inv(R)
    se_rho = np.sqrt(sigma2 * np.sum(r_inv[1] ** 2))
    return float(beta[1] / se_rho), ssr, n


def adf_test(series: np.ndarray, selection: LagSelection = LagSelection()) -> AdfResult:
    y = np.asarray(series, dtype=float).ravel()
    if not np.all(np.isfinite(y)):
        raise TooShort("series contains non-finite values")
    T = y.size
    max_lag = selection.resolve(T)
    if T < max_lag + 10:
        raise TooShort(f"series length {T} < max_lag + 10 = {max_lag + 10}")

    # BIC sweep on the common sample defined by the largest candidate lag.
    best_lag, best_bic = 0, np.inf
    for lag in range(max_lag + 1):
        _, ssr, n = _adf_regression(y, lag, start=max_lag)
        bic = n * np.log(ssr / n) + (lag + 2) * np.log(n)
        if bic < best_bic:
            best_lag, best_bic = lag, bic

    stat, _, n_obs = _adf_regression(y, best_lag, start=best_lag)
    return AdfResult(
        statistic=stat,
        lag=best_lag,
        n_obs=n_obs,
        reject_1pct=stat < df_critical_value(0.01, n_obs),
    )

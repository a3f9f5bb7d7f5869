"""Residual-based bootstrap confidence bands under the zero-coefficient null.

Steps: (1) take the static-fit residual matrix, (2) resample whole residual
rows with replacement (or independently per portfolio behind a flag),
(3) treat each resample as the null data (all coefficients zero), (4) re-run
the time-varying solve with the same regressors and lambda and a zero
anchor, (5) form pointwise per-coefficient order-statistic quantiles.

Randomness comes from a counter-based generator (Philox) with one jumped
substream per replicate, so serial and parallel execution agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ReplicateFailed, ShapeError
from .models import ModelSpec, StaticFit, design_matrix
from .panel import ReturnPanel
from .tv import (
    StateLayout,
    TvSolution,
    _banded_normal_factor,
    _portfolio_rhs,
    _solve_paths,
)


@dataclass(frozen=True)
class BootstrapConfig:
    n_reps: int
    level: float = 0.95
    seed: int = 0
    lam: float = 1.0
    joint_resampling: bool = True

    def __post_init__(self):
        if self.n_reps < 2:
            raise ConfigError(f"n_reps must be >= 2, got {self.n_reps}")
        if not 0.0 < self.level < 1.0:
            raise ConfigError(f"level must be in (0, 1), got {self.level}")
        if self.lam <= 0:
            raise ConfigError(f"lambda must be positive, got {self.lam}")


@dataclass(frozen=True)
class BandSet:
    lower: np.ndarray        # T x d
    upper: np.ndarray        # T x d
    level: float
    n_reps: int
    significant: np.ndarray  # T x d, null-anchored point estimate outside band


def order_statistic(sorted_axis0: np.ndarray, q: float, n: int) -> np.ndarray:
    """Empirical quantile as the ceil(q*n)-th order statistic (1-based)."""
    idx = max(int(np.ceil(q * n)), 1) - 1
    return sorted_axis0[idx]


def _replicate_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed).jumped(rep))


def bootstrap_bands(
    spec: ModelSpec,
    excess: ReturnPanel,
    factors: ReturnPanel,
    fit: StaticFit,
    config: BootstrapConfig,
) -> BandSet:
    resid = fit.residuals
    T, k = resid.shape
    m = spec.m
    layout = StateLayout(k=k, m=m, T=T)
    d = layout.d
    x_rows = design_matrix(spec, factors)
    if x_rows.shape[0] != T:
        raise ShapeError("factor panel length does not match residual matrix")

    # Resample indices per replicate substream, then solve every replicate
    # for a portfolio in one multi-RHS banded back-substitution.
    n = config.n_reps
    if config.joint_resampling:
        idx = np.empty((n, T), dtype=np.intp)
        for r in range(n):
            idx[r] = _replicate_rng(config.seed, r).integers(0, T, size=T)
        y_rep = resid[idx]                       # n x T x k
    else:
        idx = np.empty((n, T, k), dtype=np.intp)
        for r in range(n):
            idx[r] = _replicate_rng(config.seed, r).integers(0, T, size=(T, k))
        y_rep = np.take_along_axis(resid[None, :, :], idx, axis=1)

    factor = _banded_normal_factor(x_rows, config.lam)
    zeros_m = np.zeros(m)
    gammas = np.empty((n, T, d))
    for i in range(k):
        rhs = _portfolio_rhs(x_rows, y_rep[:, :, i].T, config.lam, zeros_m)
        sol = _solve_paths(factor, rhs)          # (T*m) x n
        gammas[:, :, i * m : (i + 1) * m] = sol.T.reshape(n, T, m)

    bad = ~np.isfinite(gammas).all(axis=(1, 2))
    if bad.any():
        raise ReplicateFailed(int(np.argmax(bad)))

    gammas.sort(axis=0)
    q_lo = (1.0 - config.level) / 2.0
    lower = order_statistic(gammas, q_lo, n)
    upper = order_statistic(gammas, 1.0 - q_lo, n)

    # Point estimate under the same null conventions (zero anchor) used by
    # the replicates, so flags are exchangeable under the null.
    point = np.empty((T, d))
    for i in range(k):
        rhs = _portfolio_rhs(x_rows, excess.values[:, i], config.lam, zeros_m)
        point[:, i * m : (i + 1) * m] = _solve_paths(factor, rhs).reshape(T, m)
    significant = (point < lower) | (point > upper)

    return BandSet(
        lower=lower,
        upper=upper,
        level=config.level,
        n_reps=n,
        significant=significant,
    )


def flag_significance(solution: TvSolution, bands: BandSet) -> np.ndarray:
    """True where the estimate falls outside the closed band interval."""
    if solution.gamma.shape != bands.lower.shape:
        raise ShapeError(
            f"solution shape {solution.gamma.shape} != band shape {bands.lower.shape}"
        )
    return (solution.gamma < bands.lower) | (solution.gamma > bands.upper)

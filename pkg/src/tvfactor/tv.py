"""Time-varying coefficient estimation for random-walk loadings.

The coefficient paths minimize

    sum_t ||y_t - X_t g_t||^2 + lam*||g_1 - g_0||^2 + lam*sum_{t>=2} ||g_t - g_{t-1}||^2

which is the stacked-GLS form of the state-space model with random-walk
coefficients (observation variance 1, state variance 1/lam). Because each
portfolio's coefficients enter only its own observation row and the
penalty is coordinate-wise, the normal equations decouple by portfolio
into symmetric block-tridiagonal systems with m x m blocks; those are
solved by a banded Cholesky sweep, linear in T. A fixed-interval (RTS)
Kalman smoother over the full stacked state is provided as an independent
route to the same solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .errors import SelectionFailed, ShapeError, Singular
from .models import ModelSpec, design_matrix
from .panel import ReturnPanel

DEFAULT_LAMBDA_GRID = np.logspace(-2.0, 6.0, 17)


@dataclass(frozen=True)
class StateLayout:
    """Flat indexing of the stacked coefficient vector."""

    k: int  # portfolios
    m: int  # coefficients per portfolio
    T: int  # time length

    @property
    def d(self) -> int:
        return self.k * self.m

    def flat_index(self, portfolio: int, coef: int) -> int:
        if not (0 <= portfolio < self.k and 0 <= coef < self.m):
            raise ShapeError(f"index ({portfolio}, {coef}) outside {self.k}x{self.m}")
        return portfolio * self.m + coef


@dataclass(frozen=True)
class TvProblem:
    """Assembled estimation problem.

    ``x_rows`` holds the per-date regressor row shared by all portfolios;
    the full observation matrix X_t is block-diagonal with that row as
    every portfolio's block (see ``dense_X``).
    """

    layout: StateLayout
    x_rows: np.ndarray  # T x m
    y: np.ndarray       # T x k
    gamma0: np.ndarray  # d
    lam: float

    def __post_init__(self):
        if self.lam <= 0:
            raise Singular(f"lambda must be positive, got {self.lam}")
        T, m, k, d = self.layout.T, self.layout.m, self.layout.k, self.layout.d
        if self.x_rows.shape != (T, m):
            raise ShapeError(f"x_rows shape {self.x_rows.shape} != ({T}, {m})")
        if self.y.shape != (T, k):
            raise ShapeError(f"y shape {self.y.shape} != ({T}, {k})")
        if self.gamma0.shape != (d,):
            raise ShapeError(f"gamma0 shape {self.gamma0.shape} != ({d},)")

    def dense_X(self, t: int) -> np.ndarray:
        """k x d observation matrix at date t (block-diagonal)."""
        k, m, d = self.layout.k, self.layout.m, self.layout.d
        X = np.zeros((k, d))
        for i in range(k):
            X[i, i * m : (i + 1) * m] = self.x_rows[t]
        return X


@dataclass(frozen=True)
class TvSolution:
    gamma: np.ndarray       # T x d
    obs_resid: np.ndarray   # T x k
    state_resid: np.ndarray # T x d, first row relative to gamma0
    loglik: float
    lambda_used: float


def build_problem(
    spec: ModelSpec,
    excess: ReturnPanel,
    factors: ReturnPanel,
    gamma0: np.ndarray | None = None,
    lam: float = 1.0,
) -> TvProblem:
    if excess.dates != factors.dates:
        raise ShapeError("excess and factor panels are not date-aligned")
    x_rows = design_matrix(spec, factors)
    y = excess.values
    if not np.all(np.isfinite(y)):
        raise ShapeError("excess-return panel has missing cells")
    layout = StateLayout(k=y.shape[1], m=spec.m, T=y.shape[0])
    if gamma0 is None:
        gamma0 = np.zeros(layout.d)
    return TvProblem(
        layout=layout,
        x_rows=x_rows,
        y=np.asarray(y, dtype=float),
        gamma0=np.asarray(gamma0, dtype=float),
        lam=float(lam),
    )


def _banded_normal_factor(x_rows: np.ndarray, lam: float) -> np.ndarray:
    """Cholesky factor (scipy lower-banded form) of one portfolio's
    block-tridiagonal normal-equation matrix."""
    T, m = x_rows.shape
    n = T * m
    outer = x_rows[:, :, None] * x_rows[:, None, :]  # T x m x m

    ab = np.zeros((m + 1, n))
    for r in range(m):
        band = ab[r].reshape(T, m)
        for b in range(m - r):
            band[:, b] = outer[:, b + r, b]
    diag = ab[0].reshape(T, m)
    diag += lam  # prior (t=0) or backward difference (t>0)
    if T > 1:
        diag[: T - 1] += lam  # forward difference
        ab[m].reshape(T, m)[: T - 1, :] = -lam
    try:
        return cholesky_banded(ab, lower=True)
    except np.linalg.LinAlgError as exc:
        raise Singular(f"normal equations not positive definite: {exc}") from exc


def _portfolio_rhs(
    x_rows: np.ndarray, y_i: np.ndarray, lam: float, gamma0_i: np.ndarray
) -> np.ndarray:
    """Stacked right-hand side(s); y_i may be (T,) or (T, nrhs)."""
    T, m = x_rows.shape
    y_i = np.asarray(y_i, dtype=float)
    squeeze = y_i.ndim == 1
    if squeeze:
        y_i = y_i[:, None]
    rhs = (x_rows[:, :, None] * y_i[:, None, :]).reshape(T * m, -1)
    rhs[:m] += lam * gamma0_i[:, None]
    return rhs[:, 0] if squeeze else rhs


def _solve_paths(factor: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return cho_solve_banded((factor, True), rhs)


def solve_tv(problem: TvProblem) -> TvSolution:
    """Penalized least-squares coefficient paths via banded Cholesky."""
    T, k, m, d = (
        problem.layout.T,
        problem.layout.k,
        problem.layout.m,
        problem.layout.d,
    )
    factor = _banded_normal_factor(problem.x_rows, problem.lam)
    gamma = np.empty((T, d))
    for i in range(k):
        rhs = _portfolio_rhs(
            problem.x_rows,
            problem.y[:, i],
            problem.lam,
            problem.gamma0[i * m : (i + 1) * m],
        )
        gamma[:, i * m : (i + 1) * m] = _solve_paths(factor, rhs).reshape(T, m)

    fitted = np.einsum("tm,tim->ti", problem.x_rows, gamma.reshape(T, k, m))
    obs_resid = problem.y - fitted
    state_resid = np.diff(np.vstack([problem.gamma0[None, :], gamma]), axis=0)
    ll, _ = filter_loglik(problem)
    return TvSolution(
        gamma=gamma,
        obs_resid=obs_resid,
        state_resid=state_resid,
        loglik=ll,
        lambda_used=problem.lam,
    )


def filter_loglik(problem: TvProblem) -> tuple[float, float]:
    """Kalman-filter Gaussian log-likelihood of the problem's data.

    Returns ``(raw, concentrated)``: raw fixes the observation variance at
    1 and the state variance at 1/lam; concentrated profiles out a common
    scale on both (only the ratio lam matters), which is what the lambda
    search maximizes.
    """
    T, k, m = problem.layout.T, problem.layout.k, problem.layout.m
    q = 1.0 / problem.lam
    a = problem.gamma0.reshape(k, m).copy()
    P = np.broadcast_to(q * np.eye(m), (k, m, m)).copy()
    eye = np.eye(m)

    sum_log_s = 0.0
    sum_ess = 0.0
    for t in range(T):
        if t > 0:
            P += q * eye
        x = problem.x_rows[t]
        Px = P @ x                                  # k x m
        S = Px @ x + 1.0                            # k
        e = problem.y[t] - a @ x                    # k
        sum_log_s += float(np.sum(np.log(S)))
        sum_ess += float(np.sum(e * e / S))
        K = Px / S[:, None]
        a += K * e[:, None]
        P -= K[:, :, None] * Px[:, None, :]

    n = T * k
    raw = -0.5 * (n * np.log(2.0 * np.pi) + sum_log_s + sum_ess)
    sigma2 = sum_ess / n
    concentrated = -0.5 * (n * (np.log(2.0 * np.pi * sigma2) + 1.0) + sum_log_s)
    return raw, concentrated


def kalman_smoother(problem: TvProblem) -> TvSolution:
    """Fixed-interval (RTS) smoother over the full stacked state.

    Independent route to the penalized least-squares solution; O(T d^3),
    intended for verification and moderate problem sizes.
    """
    T, k, d = problem.layout.T, problem.layout.k, problem.layout.d
    q = 1.0 / problem.lam
    Q = q * np.eye(d)

    a_pred = np.empty((T, d))
    P_pred = np.empty((T, d, d))
    a_filt = np.empty((T, d))
    P_filt = np.empty((T, d, d))

    a_pred[0] = problem.gamma0
    P_pred[0] = Q
    loglik = 0.0
    for t in range(T):
        H = problem.dense_X(t)
        e = problem.y[t] - H @ a_pred[t]
        S = H @ P_pred[t] @ H.T + np.eye(k)
        try:
            S_inv_e = np.linalg.solve(S, e)
            K = P_pred[t] @ H.T @ np.linalg.inv(S)
        except np.linalg.LinAlgError as exc:
            raise Singular(f"innovation covariance singular at t={t}") from exc
        sign, logdet = np.linalg.slogdet(S)
        if sign <= 0:
            raise Singular(f"innovation covariance not positive definite at t={t}")
        loglik += -0.5 * (k * np.log(2.0 * np.pi) + logdet + e @ S_inv_e)
        a_filt[t] = a_pred[t] + K @ e
        P_filt[t] = (np.eye(d) - K @ H) @ P_pred[t]
        if t + 1 < T:
            a_pred[t + 1] = a_filt[t]
            P_pred[t + 1] = P_filt[t] + Q

    gamma = np.empty((T, d))
    gamma[T - 1] = a_filt[T - 1]
    for t in range(T - 2, -1, -1):
        J = np.linalg.solve(P_pred[t + 1].T, P_filt[t].T).T
        gamma[t] = a_filt[t] + J @ (gamma[t + 1] - a_pred[t + 1])

    fitted = np.einsum(
        "tm,tim->ti", problem.x_rows, gamma.reshape(T, k, problem.layout.m)
    )
    obs_resid = problem.y - fitted
    state_resid = np.diff(np.vstack([problem.gamma0[None, :], gamma]), axis=0)
    return TvSolution(
        gamma=gamma,
        obs_resid=obs_resid,
        state_resid=state_resid,
        loglik=loglik,
        lambda_used=problem.lam,
    )


def penalized_objective(problem: TvProblem, gamma: np.ndarray) -> float:
    """Value of the criterion solve_tv minimizes, at an arbitrary path."""
    T, k, m = problem.layout.T, problem.layout.k, problem.layout.m
    fitted = np.einsum("tm,tim->ti", problem.x_rows, gamma.reshape(T, k, m))
    obs = float(np.sum((problem.y - fitted) ** 2))
    diffs = np.diff(np.vstack([problem.gamma0[None, :], gamma]), axis=0)
    return obs + problem.lam * float(np.sum(diffs**2))


def objective_gradient(problem: TvProblem, gamma: np.ndarray) -> np.ndarray:
    """Gradient of the penalized criterion; zero at the solution."""
    T, k, m = problem.layout.T, problem.layout.k, problem.layout.m
    g3 = gamma.reshape(T, k, m)
    fitted = np.einsum("tm,tim->ti", problem.x_rows, g3)
    resid = problem.y - fitted
    grad = -2.0 * resid[:, :, None] * problem.x_rows[:, None, :]
    diffs = np.diff(np.vstack([problem.gamma0[None, :], gamma]), axis=0)
    grad = grad.reshape(T, -1)
    grad += 2.0 * problem.lam * diffs
    grad[:-1] -= 2.0 * problem.lam * diffs[1:]
    return grad


def select_lambda(
    spec: ModelSpec,
    excess: ReturnPanel,
    factors: ReturnPanel,
    gamma0: np.ndarray | None = None,
    grid: np.ndarray = DEFAULT_LAMBDA_GRID,
) -> tuple[float, np.ndarray]:
    """Pick the smoothness ratio maximizing the concentrated likelihood."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0):
        raise SelectionFailed("grid must be non-empty and positive")
    profile = np.full(grid.size, -np.inf)
    for i, lam in enumerate(grid):
        problem = build_problem(spec, excess, factors, gamma0=gamma0, lam=lam)
        _, conc = filter_loglik(problem)
        if np.isfinite(conc):
            profile[i] = conc
    if not np.any(np.isfinite(profile)):
        raise SelectionFailed("likelihood non-finite on every grid point")
    return float(grid[int(np.argmax(profile))]), profile

import numpy as np
import pytest

from tvfactor.bootstrap import (
    BandSet,
    BootstrapConfig,
    bootstrap_bands,
    flag_significance,
    order_statistic,
)
from tvfactor.errors import ConfigError, ShapeError
from tvfactor.models import Model, ModelSpec, static_ols
from tvfactor.tv import StateLayout, TvProblem, build_problem, kalman_smoother, solve_tv

from .test_models import make_panels

FF3 = ModelSpec(Model.FF3)


def small_setup(seed=0, T=30, k=1, noise=0.02):
    rng = np.random.default_rng(seed)
    excess, factors, _ = make_panels(rng, T, k, FF3, noise=noise)
    fit = static_ols(FF3, excess, factors)
    return excess, factors, fit


class TestConfig:
    def test_n_reps_too_small(self):
        with pytest.raises(ConfigError):
            BootstrapConfig(n_reps=1)

    def test_level_out_of_range(self):
        with pytest.raises(ConfigError):
            BootstrapConfig(n_reps=10, level=1.0)

    def test_bad_lambda(self):
        with pytest.raises(ConfigError):
            BootstrapConfig(n_reps=10, lam=0.0)


class TestBands:
    def test_determinism(self):
        excess, factors, fit = small_setup()
        config = BootstrapConfig(n_reps=25, seed=123, lam=5.0)
        a = bootstrap_bands(FF3, excess, factors, fit, config)
        b = bootstrap_bands(FF3, excess, factors, fit, config)
        assert np.array_equal(a.lower, b.lower)
        assert np.array_equal(a.upper, b.upper)
        assert np.array_equal(a.significant, b.significant)

    def test_two_replicates_give_min_max(self):
        excess, factors, fit = small_setup(seed=1)
        config = BootstrapConfig(n_reps=2, seed=7, lam=2.0)
        bands = bootstrap_bands(FF3, excess, factors, fit, config)
        reps = _replicate_paths(FF3, excess, factors, fit, config)
        np.testing.assert_allclose(bands.lower, reps.min(axis=0), atol=1e-12)
        np.testing.assert_allclose(bands.upper, reps.max(axis=0), atol=1e-12)

    def test_quantiles_match_order_statistics(self):
        # Independent oracle: regenerate every replicate path with the
        # smoother route and index the sorted replicate matrix directly.
        excess, factors, fit = small_setup(seed=2, T=30, k=1)
        config = BootstrapConfig(n_reps=25, seed=99, lam=3.0)
        bands = bootstrap_bands(FF3, excess, factors, fit, config)
        reps = np.sort(_replicate_paths(FF3, excess, factors, fit, config), axis=0)
        n = config.n_reps
        lo_idx = int(np.ceil(0.025 * n)) - 1
        hi_idx = int(np.ceil(0.975 * n)) - 1
        np.testing.assert_allclose(bands.lower, reps[lo_idx], atol=1e-8)
        np.testing.assert_allclose(bands.upper, reps[hi_idx], atol=1e-8)

    def test_wider_level_contains_narrower(self):
        excess, factors, fit = small_setup(seed=3, k=2)
        wide = bootstrap_bands(FF3, excess, factors, fit,
                               BootstrapConfig(n_reps=50, level=0.99, seed=5, lam=2.0))
        narrow = bootstrap_bands(FF3, excess, factors, fit,
                                 BootstrapConfig(n_reps=50, level=0.90, seed=5, lam=2.0))
        assert np.all(wide.lower <= narrow.lower + 1e-12)
        assert np.all(wide.upper >= narrow.upper - 1e-12)

    def test_lower_never_exceeds_upper(self):
        excess, factors, fit = small_setup(seed=4, k=3)
        bands = bootstrap_bands(FF3, excess, factors, fit,
                                BootstrapConfig(n_reps=20, seed=11, lam=1.0))
        assert np.all(bands.lower <= bands.upper)

    def test_independent_resampling_differs_from_joint(self):
        excess, factors, fit = small_setup(seed=5, k=3)
        joint = bootstrap_bands(FF3, excess, factors, fit,
                                BootstrapConfig(n_reps=20, seed=1, lam=1.0))
        indep = bootstrap_bands(
            FF3, excess, factors, fit,
            BootstrapConfig(n_reps=20, seed=1, lam=1.0, joint_resampling=False),
        )
        assert not np.array_equal(joint.lower, indep.lower)

    def test_resampling_preserves_cross_section_covariance(self):
        rng = np.random.default_rng(6)
        T, k = 400, 4
        cov = np.array([[1.0, 0.6, 0.3, 0.1],
                        [0.6, 1.0, 0.5, 0.2],
                        [0.3, 0.5, 1.0, 0.4],
                        [0.1, 0.2, 0.4, 1.0]]) * 0.02**2
        resid = rng.multivariate_normal(np.zeros(k), cov, size=T)
        sample_cov = np.cov(resid, rowvar=False)
        idx = rng.integers(0, T, size=20 * T)
        resampled_cov = np.cov(resid[idx], rowvar=False)
        rel = (np.linalg.norm(resampled_cov - sample_cov)
               / np.linalg.norm(sample_cov))
        assert rel <= 0.10


class TestFlags:
    def test_boundary_estimate_not_significant(self):
        gamma = np.zeros((4, 2))
        bands = BandSet(lower=np.zeros((4, 2)), upper=np.ones((4, 2)),
                        level=0.95, n_reps=10,
                        significant=np.zeros((4, 2), dtype=bool))
        sol = _solution_with_gamma(gamma)
        assert not flag_significance(sol, bands).any()

    def test_infinite_bands_never_flag(self):
        rng = np.random.default_rng(7)
        gamma = rng.normal(size=(6, 3))
        bands = BandSet(lower=np.full((6, 3), -np.inf),
                        upper=np.full((6, 3), np.inf),
                        level=0.95, n_reps=10,
                        significant=np.zeros((6, 3), dtype=bool))
        assert not flag_significance(_solution_with_gamma(gamma), bands).any()

    def test_matches_scalar_comparison_loop(self):
        rng = np.random.default_rng(8)
        gamma = rng.normal(size=(5, 4))
        lower = gamma - rng.uniform(0.0, 0.5, gamma.shape)
        upper = gamma + rng.uniform(0.0, 0.5, gamma.shape)
        lower[1, 2] = gamma[1, 2] + 0.1  # force one flag below
        upper[3, 0] = gamma[3, 0] - 0.1  # and one above
        bands = BandSet(lower=lower, upper=upper, level=0.95, n_reps=10,
                        significant=np.zeros_like(gamma, dtype=bool))
        flags = flag_significance(_solution_with_gamma(gamma), bands)
        for t in range(5):
            for j in range(4):
                expected = gamma[t, j] < lower[t, j] or gamma[t, j] > upper[t, j]
                assert flags[t, j] == expected

    def test_shape_mismatch(self):
        bands = BandSet(lower=np.zeros((4, 2)), upper=np.ones((4, 2)),
                        level=0.95, n_reps=10,
                        significant=np.zeros((4, 2), dtype=bool))
        with pytest.raises(ShapeError):
            flag_significance(_solution_with_gamma(np.zeros((3, 2))), bands)


class TestOrderStatistic:
    def test_indexing_convention(self):
        data = np.arange(1, 11, dtype=float)[:, None]
        assert order_statistic(data, 0.5, 10)[0] == 5.0   # ceil(5) = 5th
        assert order_statistic(data, 0.05, 10)[0] == 1.0
        assert order_statistic(data, 1.0, 10)[0] == 10.0


def _solution_with_gamma(gamma):
    from tvfactor.tv import TvSolution

    T, d = gamma.shape
    return TvSolution(gamma=gamma, obs_resid=np.zeros((T, 1)),
                      state_resid=np.zeros((T, d)), loglik=0.0, lambda_used=1.0)


def _replicate_paths(spec, excess, factors, fit, config):
    """Re-create the replicate coefficient paths independently of
    bootstrap_bands, solving each with the Kalman smoother."""
    resid = fit.residuals
    T, k = resid.shape
    layout = StateLayout(k=k, m=spec.m, T=T)
    problem = build_problem(spec, excess, factors, lam=config.lam)
    paths = np.empty((config.n_reps, T, layout.d))
    for r in range(config.n_reps):
        rng = np.random.Generator(np.random.Philox(key=config.seed).jumped(r))
        idx = rng.integers(0, T, size=T)
        rep_problem = TvProblem(layout=layout, x_rows=problem.x_rows,
                                y=resid[idx], gamma0=np.zeros(layout.d),
                                lam=config.lam)
        paths[r] = kalman_smoother(rep_problem).gamma
    return paths

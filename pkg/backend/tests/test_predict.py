"""Tests for predictive moments, MSPE, DIC and the surface grid"""
import numpy as np
import pytest

from app.covariance import gram_matrix, wendland2_taper
from app.exceptions import NumericalError, UsageError
from app.lowrank import densify
from app.model import CovarianceModel, log_likelihood
from app.models import (
    ApproxSettings, Chain, CovForm, KernelFamily, KernelSpec, Locations, Params, RegressionData, chain_columns,
)
from app.predict import (
    dic,
    grid_design,
    grid_points,
    mspe,
    posterior_mean_params,
    predictive_draw,
    predictive_moments,
    predictive_samples,
    summarize,
    surface_grid,
)


def constant_chain(params: Params, draws: int = 5) -> Chain:
    vector = params.as_vector()
    return Chain(
        draws=np.tile(vector, (draws, 1)),
        columns=chain_columns(params.beta.size, len(params.theta)),
        acceptance_rates={"tau2": 0.4, "sigma2": 0.4},
        proposal_sds=(0.1, 0.1),
        seed=0,
        burnin=0,
        p=params.beta.size,
    )


@pytest.fixture
def fitted(make_regression, exp_kernel):
    data = make_regression(30, seed=2)
    params = Params(np.array([1.0, -0.5]), 0.5, 1.5, (3.0,))
    return data, params


class TestPredictiveMoments:

    def test_exact_interpolation_without_nugget(self, fitted, exp_kernel):
        data, params = fitted
        params = params.replace(tau2=0.0)
        model = CovarianceModel(data.locations, exp_kernel, ApproxSettings(CovForm.EXACT))
        cov = model.build_params(params)
        mean, var = predictive_moments(data.locations.coords[:4], data.X[:4], params, data, cov, model)
        np.testing.assert_allclose(mean, data.Y[:4], atol=1e-8)
        np.testing.assert_allclose(var, 0.0, atol=1e-8)

    def test_far_point_reverts_to_regression(self, fitted, exp_kernel):
        data, params = fitted
        model = CovarianceModel(data.locations, exp_kernel, ApproxSettings(CovForm.EXACT))
        cov = model.build_params(params)
        x0 = np.array([[1.0, 2.0]])
        mean, var = predictive_moments(np.array([[1e4, 1e4]]), x0, params, data, cov, model)
        assert mean[0] == pytest.approx(float(x0 @ params.beta))
        assert var[0] == pytest.approx(params.sigma2 + params.tau2)

    def test_mlp_matches_dense_formula(self, fitted, exp_kernel):
        data, params = fitted
        approx = ApproxSettings(CovForm.MLP, eps=1.0, r=4, gamma=2.5)
        model = CovarianceModel(data.locations, exp_kernel, approx, atoms=((3.0,),), seed=6)
        cov = model.build_params(params)
        points = np.array([[2.0, 3.0], [7.5, 1.0]])
        X0 = np.array([[1.0, 0.3], [1.0, -1.2]])
        mean, var = predictive_moments(points, X0, params, data, cov, model)

        sigma = params.sigma2 * gram_matrix(data.locations, exp_kernel.with_sigma2(1.0))
        phi = model.projector(params.theta).phi
        h0 = np.linalg.norm(points[:, None, :] - data.locations.coords[None, :, :], axis=2)
        c_w = params.sigma2 * np.exp(-np.sqrt(2.0) * h0 / 3.0)
        c_approx = c_w @ phi.T @ np.linalg.solve(phi @ sigma @ phi.T, phi @ sigma)
        c = c_approx + wendland2_taper(h0, 2.5) * (c_w - c_approx)
        dense = densify(cov, include_nugget=True)
        resid = data.Y - data.X @ params.beta
        np.testing.assert_allclose(mean, X0 @ params.beta + c @ np.linalg.solve(dense, resid), rtol=1e-8)
        expected_var = params.sigma2 + params.tau2 - np.einsum("ij,ji->i", c, np.linalg.solve(dense, c.T))
        np.testing.assert_allclose(var, expected_var, rtol=1e-8)

    def test_negative_variance_is_an_error(self, fitted, exp_kernel, monkeypatch):
        data, params = fitted
        model = CovarianceModel(data.locations, exp_kernel, ApproxSettings(CovForm.EXACT))
        cov = model.build_params(params)
        monkeypatch.setattr(model, "cross_covariance", lambda points, sigma2, theta: 100.0 * np.ones((1, data.n)))
        with pytest.raises(NumericalError, match="predictive variance"):
            predictive_moments(np.array([[1.0, 1.0]]), np.array([[1.0, 0.0]]), params, data, cov, model)

    def test_covariate_shape(self, fitted, exp_kernel):
        data, params = fitted
        model = CovarianceModel(data.locations, exp_kernel, ApproxSettings(CovForm.EXACT))
        with pytest.raises(UsageError, match="covariates"):
            predictive_moments(np.zeros((2, 2)), np.ones((2, 3)), params, data, model.build_params(params), model)

    def test_single_draw(self, fitted, exp_kernel):
        data, params = fitted
        model = CovarianceModel(data.locations, exp_kernel, ApproxSettings(CovForm.EXACT))
        cov = model.build_params(params)
        s0, x0 = np.array([5.0, 5.0]), np.array([1.0, 0.2])
        mean, var = predictive_moments(s0[None, :], x0[None, :], params, data, cov, model)
        value = predictive_draw(s0, x0, params, data, cov, model, np.random.default_rng(4))
        z = np.random.default_rng(4).standard_normal()
        assert value == pytest.approx(mean[0] + np.sqrt(var[0]) * z)

        at_site = predictive_draw(data.locations.coords[0], data.X[0], params.replace(tau2=0.0), data,
                                  model.build_params(params.replace(tau2=0.0)), model, np.random.default_rng(4))
        assert at_site == pytest.approx(data.Y[0], abs=1e-6)


class TestPredictiveSamples:

    def test_reproducible_and_thread_independent(self, fitted, exp_kernel):
        data, params = fitted
        model = CovarianceModel(data.locations, exp_kernel, ApproxSettings(CovForm.EXACT))
        chain = constant_chain(params, 6)
        points = np.array([[1.0, 1.0], [4.0, 4.0], [9.0, 2.0]])
        X0 = np.column_stack([np.ones(3), np.zeros(3)])
        a = predictive_samples(points, X0, chain, data, model, seed=11, threads=1)
        b = predictive_samples(points, X0, chain, data, model, seed=11, threads=3)
        assert a.shape == (6, 3)
        np.testing.assert_array_equal(a, b)

    def test_means_only(self, fitted, exp_kernel):
        data, params = fitted
        model = CovarianceModel(data.locations, exp_kernel, ApproxSettings(CovForm.EXACT))
        chain = constant_chain(params, 4)
        points = np.array([[5.0, 5.0]])
        X0 = np.array([[1.0, 0.0]])
        means = predictive_samples(points, X0, chain, data, model, seed=1, means_only=True)
        expected, _ = predictive_moments(points, X0, params, data, model.build_params(params), model)
        np.testing.assert_allclose(means, np.tile(expected, (4, 1)))

    def test_thinning(self, fitted, exp_kernel):
        data, params = fitted
        model = CovarianceModel(data.locations, exp_kernel, ApproxSettings(CovForm.EXACT))
        samples = predictive_samples(np.array([[5.0, 5.0]]), np.array([[1.0, 0.0]]), constant_chain(params, 10),
                                     data, model, seed=1, max_draws=3)
        assert samples.shape == (3, 1)

    def test_summary_quantiles_ordered(self):
        samples = np.random.default_rng(0).standard_normal((200, 4))
        summary = summarize(np.zeros((4, 2)), samples)
        assert np.all(summary.q05 <= summary.mean) and np.all(summary.mean <= summary.q95)
        assert list(summary.to_frame().columns) == ["x", "y", "mean", "q05", "q95"]

    def test_empty_chain(self, fitted, exp_kernel):
        data, params = fitted
        model = CovarianceModel(data.locations, exp_kernel, ApproxSettings(CovForm.EXACT))
        empty = constant_chain(params, 0)
        with pytest.raises(UsageError, match="no draws"):
            predictive_samples(np.zeros((1, 2)), np.ones((1, 2)), empty, data, model)


class TestMSPE:

    def test_zero_when_predictions_exact(self):
        rng = np.random.default_rng(4)
        kernel = KernelSpec(KernelFamily.MATERN, sigma2=1.0, nu=0.5, lam=1e-6)
        train = RegressionData(np.ones((10, 1)), rng.standard_normal(10), Locations(100.0 * rng.random((10, 2))))
        test_locs = Locations(100.0 * rng.random((5, 2)) + 200.0)
        params = Params(np.array([2.5]), 1.0, 1.0, (1e-6,))
        test = RegressionData(np.ones((5, 1)), np.full(5, 2.5), test_locs)
        model = CovarianceModel(train.locations, kernel, ApproxSettings(CovForm.EXACT))
        score = mspe(test, constant_chain(params), train, model, seed=0, means_only=True)
        assert score == pytest.approx(0.0, abs=1e-20)

    def test_positive_for_noisy_samples(self, fitted, exp_kernel):
        data, params = fitted
        train, test = data.subset(np.arange(20)), data.subset(np.arange(20, 30))
        model = CovarianceModel(train.locations, exp_kernel, ApproxSettings(CovForm.EXACT))
        assert mspe(test, constant_chain(params), train, model, seed=3) > 0


class TestDIC:

    def test_single_draw_has_no_penalty(self, fitted, exp_kernel, vague_prior):
        data, params = fitted
        model = CovarianceModel(data.locations, exp_kernel, ApproxSettings(CovForm.EXACT))
        value, p_d = dic(constant_chain(params, 1), data, vague_prior, model)
        assert p_d == pytest.approx(0.0, abs=1e-9)
        assert value == pytest.approx(-2.0 * log_likelihood(data, params, model.build_params(params)))

    def test_penalty_positive_for_spread_draws(self, fitted, exp_kernel, vague_prior):
        data, params = fitted
        model = CovarianceModel(data.locations, exp_kernel, ApproxSettings(CovForm.EXACT))
        rng = np.random.default_rng(8)
        rows = []
        for _ in range(30):
            rows.append(params.replace(beta=params.beta + 0.2 * rng.standard_normal(2)).as_vector())
        chain = constant_chain(params, 1)
        chain.draws = np.vstack(rows)
        _, p_d = dic(chain, data, vague_prior, model, threads=2)
        assert p_d > 0

    def test_mean_range_snaps_to_atom(self, vague_prior):
        rows = [Params(np.zeros(2), 1.0, 1.0, (lam,)).as_vector() for lam in (1.5, 3.0, 6.0)]
        chain = constant_chain(Params(np.zeros(2), 1.0, 1.0, (1.5,)), 1)
        chain.draws = np.vstack(rows)
        assert posterior_mean_params(chain, vague_prior).theta == (3.0,)


class TestSurfaceGrid:

    def test_corner_grid(self):
        points = grid_points((0.0, 1.0, 0.0, 1.0), 2)
        np.testing.assert_array_equal(points, [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])

    def test_resolution_too_small(self):
        with pytest.raises(UsageError):
            grid_points((0.0, 1.0, 0.0, 1.0), 1)

    def test_surface_shapes(self, fitted, exp_kernel):
        data, params = fitted
        model = CovarianceModel(data.locations, exp_kernel, ApproxSettings(CovForm.CT, gamma=3.0), atoms=((3.0,),))
        summary = surface_grid((0.0, 10.0, 0.0, 10.0), 4, constant_chain(params, 8), data, model,
                               covariates=[0.0], seed=5)
        assert summary.points.shape == (16, 2)
        assert summary.draws == 8
        assert np.all(summary.q05 <= summary.q95)

    def test_surface_follows_varying_covariate(self, fitted, exp_kernel):
        data, params = fitted
        model = CovarianceModel(data.locations, exp_kernel, ApproxSettings(CovForm.EXACT))
        chain = constant_chain(params, 6)
        bounds = (0.0, 10.0, 0.0, 10.0)
        points = grid_points(bounds, 3)
        # distance to the domain centre, one value per grid point
        distance = np.linalg.norm(points - 5.0, axis=1)
        flat = surface_grid(bounds, 3, chain, data, model, covariates=[0.0], seed=9)
        varying = surface_grid(bounds, 3, chain, data, model, covariates=distance[:, None], seed=9)
        np.testing.assert_allclose(varying.mean - flat.mean, params.beta[1] * distance, atol=1e-10)
        np.testing.assert_allclose(varying.q95 - flat.q95, params.beta[1] * distance, atol=1e-10)

        X0 = grid_design(points, distance[:, None])
        np.testing.assert_array_equal(X0[:, 0], 1.0)
        np.testing.assert_array_equal(X0[:, 1], distance)

    def test_covariate_rows_must_match_grid(self):
        with pytest.raises(UsageError, match="grid points"):
            grid_design(grid_points((0.0, 1.0, 0.0, 1.0), 2), np.ones((3, 1)))

"""
Structural guarantees of the approximations on random designs: positive
definiteness, the Woodbury inner matrix, error ordering across taper ranges
and the KL bound
"""
import numpy as np
import pytest

from app.covariance import gram_matrix, taper_matrix
from app.lowrank import adaptive_range_finder, build_lp, build_mlp, densify, frobenius_error, kl_bound, kl_gaussian
from app.models import KernelFamily, KernelSpec, Locations, TaperKind, TaperSpec


def random_instance(seed: int, n: int, size: float = 20.0):
    rng = np.random.default_rng(seed)
    locs = Locations(size * rng.random((n, 2)))
    kernel = KernelSpec(KernelFamily.MATERN, sigma2=rng.uniform(0.5, 2.0), nu=float(rng.choice([0.5, 1.5])),
                        lam=rng.uniform(2.0, 8.0))
    return locs, gram_matrix(locs, kernel), rng


class TestPositiveDefinite:
    """Every approximation stays a valid covariance"""

    @pytest.mark.parametrize("seed", range(50))
    def test_eigenvalues(self, seed):
        locs, sigma, rng = random_instance(seed, 80)
        projector = adaptive_range_finder(sigma, rng.uniform(0.5, 5.0), 4, seed=seed)
        tm = taper_matrix(locs, TaperSpec(TaperKind.WENDLAND2, rng.uniform(1.0, 6.0)))
        low_rank = build_lp(sigma, projector, 0.0)
        v_part = densify(low_rank, include_core=False)
        mlp = build_mlp(sigma, projector, tm, 0.0)
        scale = np.abs(sigma).max()
        assert np.linalg.eigvalsh(v_part).min() >= -1e-10 * scale
        assert np.linalg.eigvalsh(mlp.core.toarray()).min() >= -1e-10 * scale
        assert np.linalg.eigvalsh(densify(mlp)).min() >= -1e-10 * scale
        assert np.linalg.eigvalsh(densify(mlp.with_nugget(0.1), include_nugget=True)).min() > 0


class TestProjectedCovariance:
    """M = Phi Sigma Phi' is positive definite with eigenvalues interlaced by those of Sigma"""

    @pytest.mark.parametrize("seed", range(10))
    def test_eigenvalues_interlace(self, seed):
        locs, sigma, rng = random_instance(300 + seed, 60)
        phi = adaptive_range_finder(sigma, rng.uniform(0.5, 3.0), 4, seed=seed).phi
        m = phi.shape[0]
        inner = np.linalg.eigvalsh(phi @ sigma @ phi.T)[::-1]
        outer = np.linalg.eigvalsh(sigma)[::-1]
        tol = 1e-10 * outer[0]
        assert inner.min() > 0
        assert np.all(inner <= outer[:m] + tol)
        assert np.all(inner >= outer[sigma.shape[0] - m:] - tol)


class TestWoodburyInnerMatrix:
    """M + U'(core + tau2 I)^-1 U is positive definite and gives the dense inverse"""

    @pytest.mark.parametrize("seed", range(10))
    def test_inverse_identity(self, seed):
        locs, sigma, rng = random_instance(400 + seed, 60)
        tau2 = rng.uniform(0.1, 1.0)
        projector = adaptive_range_finder(sigma, rng.uniform(0.5, 3.0), 4, seed=seed)
        tm = taper_matrix(locs, TaperSpec(TaperKind.WENDLAND2, rng.uniform(1.0, 5.0)))
        mlp = build_mlp(sigma, projector, tm, tau2)
        phi = projector.phi

        u = sigma @ phi.T
        m = phi @ u
        a = mlp.core.toarray() + tau2 * np.eye(60)
        a_inv_u = np.linalg.solve(a, u)
        inner = m + u.T @ a_inv_u
        assert np.linalg.eigvalsh(inner).min() > 0

        a_inv = np.linalg.inv(a)
        woodbury = a_inv - a_inv_u @ np.linalg.solve(inner, a_inv_u.T)
        dense = densify(mlp, include_nugget=True)
        np.testing.assert_allclose(woodbury, np.linalg.inv(dense), rtol=1e-7, atol=1e-8)


class TestErrorOrdering:
    """For a fixed projector, a longer taper range never increases the Frobenius error"""

    @pytest.mark.parametrize("seed", range(20))
    def test_lp_dominates_mlp(self, seed):
        locs, sigma, rng = random_instance(100 + seed, 300, size=60.0)
        projector = adaptive_range_finder(sigma, 5.0, 4, seed=seed)
        lp = frobenius_error(sigma, build_lp(sigma, projector, 0.0))
        errors = [lp]
        for gamma in (2.0, 4.0, 8.0):
            tm = taper_matrix(locs, TaperSpec(TaperKind.WENDLAND2, gamma))
            errors.append(frobenius_error(sigma, build_mlp(sigma, projector, tm, 0.0)))
        approx_only = frobenius_error(sigma, build_lp(sigma, projector, 0.0), include_core=False)
        assert approx_only >= errors[0] - 1e-10
        assert all(a >= b - 1e-10 for a, b in zip(errors, errors[1:]))


class TestKLBound:
    """Inside its regime the closed-form bound dominates the exact divergence"""

    @pytest.mark.parametrize("seed", range(20))
    def test_bound_holds(self, seed):
        locs, sigma, rng = random_instance(200 + seed, 50)
        projector = adaptive_range_finder(sigma, rng.uniform(0.5, 3.0), 4, seed=seed)
        tm = taper_matrix(locs, TaperSpec(TaperKind.WENDLAND2, rng.uniform(1.0, 5.0)))
        approx = build_mlp(sigma, projector, tm, 0.0)
        error = frobenius_error(sigma, approx)
        tau2 = max(1.0, 2.0 * error)
        kl = kl_gaussian(None, sigma + tau2 * np.eye(50), densify(approx.with_nugget(tau2), include_nugget=True))
        assert kl <= kl_bound(50, error, tau2) + 1e-12

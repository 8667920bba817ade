"""
Shared fixtures: random designs, kernels and small regression problems
"""
import numpy as np
import pytest

from app.config import settings
from app.models import InverseGamma, KernelFamily, KernelSpec, Locations, PriorSpec, RegressionData
from app.simdata import simulate_gp


@pytest.fixture
def make_locations():
    """Factory for n uniform points in [0, size]^dim"""
    def factory(n: int, seed: int = 0, size: float = 10.0, dim: int = 2) -> Locations:
        rng = np.random.default_rng(seed)
        return Locations(size * rng.random((n, dim)))
    return factory


@pytest.fixture
def exp_kernel():
    """Exponential kernel, sigma2 = 1.5 and lambda = 3"""
    return KernelSpec(KernelFamily.MATERN, sigma2=1.5, nu=0.5, lam=3.0)


@pytest.fixture
def make_regression(make_locations, exp_kernel):
    """Factory for a simulated problem with an intercept and one N(0, 1) covariate"""
    def factory(n: int = 30, seed: int = 0, kernel: KernelSpec = None, tau2: float = 0.5,
                beta=(1.0, -0.5)) -> RegressionData:
        kernel = kernel or exp_kernel
        locs = make_locations(n, seed)
        rng = np.random.default_rng(seed + 1)
        X = np.column_stack([np.ones(n), rng.standard_normal(n)])[:, :len(beta)]
        y = simulate_gp(locs, kernel, tau2, np.asarray(beta), X, rng)
        return RegressionData(X, y, locs)
    return factory


@pytest.fixture
def vague_prior():
    """Two coefficients, IG(2, 1) variances and three range atoms"""
    return PriorSpec(np.zeros(2), 100.0 * np.eye(2), InverseGamma(2.0, 1.0), InverseGamma(2.0, 1.0),
                     ((1.5, 3.0, 6.0),))


@pytest.fixture
def superlu(monkeypatch):
    """Force the SuperLU sparse path even when CHOLMOD is installed"""
    monkeypatch.setattr(settings, "USE_CHOLMOD", False)

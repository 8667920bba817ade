"""
Spatial linear regression Y = X beta + W + eps: likelihood, prior and the
covariance model that builds StructuredCov handles for any (sigma2, theta, tau2)
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as la

from . import solver
from .config import settings
from .covariance import (
    correlation_matrix, cross_covariance, pair_correlations, pairwise_distances,
    taper_matrix, taper_weight,
)
from .exceptions import UsageError
from .lowrank import adaptive_range_finder, build_ct, build_exact, build_lp, build_mlp, low_rank_basis
from .models import (
    ApproxSettings, CovForm, KernelSpec, Locations, Params, PriorSpec, Projector,
    RegressionData, StructuredCov, TaperSpec, FactorCache,
)
from .rng import child_seed

logger = logging.getLogger(__name__)

LOG_2PI = float(np.log(2.0 * np.pi))

Theta = Tuple[float, ...]


def log_likelihood(data: RegressionData, params: Params, cov: StructuredCov) -> float:
    """log N(Y; X beta, cov); the nugget is already inside cov"""
    if cov.n != data.n:
        raise UsageError(f"covariance is {cov.n} x {cov.n} but there are {data.n} observations")
    if params.beta.size != data.p:
        raise UsageError(f"beta has {params.beta.size} entries but X has {data.p} columns")
    resid = data.Y - data.X @ params.beta
    return -0.5 * data.n * LOG_2PI - 0.5 * solver.log_det(cov) - 0.5 * solver.quad_form(cov, resid)


def log_prior(params: Params, prior: PriorSpec) -> float:
    """Unnormalized log prior; -inf outside the support"""
    if not params.in_support:
        return -np.inf
    total = prior.log_beta(params.beta) + prior.tau2.log_density(params.tau2) + prior.sigma2.log_density(params.sigma2)
    for component, value in enumerate(params.theta):
        if component >= len(prior.atoms):
            break
        if prior.atom_index(component, value) is None:
            return -np.inf
        total -= np.log(len(prior.atoms[component]))
    return float(total)


def log_posterior(data: RegressionData, params: Params, cov: StructuredCov, prior: PriorSpec) -> float:
    lp = log_prior(params, prior)
    if not np.isfinite(lp):
        return lp
    return log_likelihood(data, params, cov) + lp


def theta_key(theta) -> Theta:
    return tuple(float(t) for t in theta)


def _theta_seed(seed: Optional[int], theta: Theta):
    """Per-atom stream keyed by the bit pattern of theta"""
    return child_seed(seed, *(int(np.float64(t).view(np.int64)) for t in theta))


@dataclass(frozen=True)
class AtomBasis:
    """Correlation-scale pieces for one theta: Sigma_W = sigma2 * cov"""
    cov: StructuredCov
    projector: Optional[Projector] = None
    v: Optional[np.ndarray] = None


class CovarianceModel:
    """
    Builds the configured covariance form for any (sigma2, theta, tau2).

    Everything that depends on theta alone (Phi, U, chol(M), the tapered
    residual) is computed at correlation scale once per theta atom, so a
    sigma2 or tau2 change is a rescale rather than a rebuild.
    """

    def __init__(
        self,
        locations: Locations,
        kernel: KernelSpec,
        approx: ApproxSettings,
        atoms: Sequence[Sequence[float]] = (),
        seed: Optional[int] = None,
        threads: Optional[int] = None,
    ):
        self.locations = locations
        self.kernel = kernel
        self.approx = approx
        self.seed = seed
        self.threads = threads or settings.THREADS
        self.form = approx.method
        self.taper = None
        self.timings: Dict[str, float] = {}
        if self.form in (CovForm.CT, CovForm.MLP):
            started = time.perf_counter()
            self.taper = taper_matrix(locations, TaperSpec(approx.taper, approx.gamma))
            self.timings["taper"] = time.perf_counter() - started
            logger.info("taper pattern: %d pairs, sparsity %.2f%%", self.taper.rows.size, self.taper.sparsity)
        self._distances = None
        if self.form != CovForm.CT:
            self._distances = pairwise_distances(locations.coords)
        self._table: Dict[Theta, AtomBasis] = {}
        self._extra = FactorCache()
        self._exact = lru_cache(maxsize=2)(self._make_basis)
        grid = [theta_key(t) for t in product(*atoms)] if atoms else []
        if grid and self.form != CovForm.EXACT:
            self._build_table(grid)

    def _build_table(self, grid) -> None:
        started = time.perf_counter()
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            for theta, basis in zip(grid, pool.map(self._make_basis, grid)):
                self._table[theta] = basis
        self.timings["projectors"] = time.perf_counter() - started
        logger.info("built %s bases for %d theta atoms in %.2fs", self.form.value, len(grid), self.timings["projectors"])

    def _make_basis(self, theta: Theta) -> AtomBasis:
        spec = self.kernel.with_theta(theta).with_sigma2(1.0)
        if self.form == CovForm.CT:
            t = self.taper
            values = pair_correlations(self.locations, spec, t.rows, t.cols, t.dist)
            core = t.hadamard(values, np.ones(t.n))
            return AtomBasis(StructuredCov(CovForm.CT, core, 0.0))
        corr = correlation_matrix(self.locations, spec, self._distances)
        if self.form == CovForm.EXACT:
            return AtomBasis(build_exact(corr, 0.0))
        projector = adaptive_range_finder(corr, self.approx.eps, self.approx.r, _theta_seed(self.seed, theta))
        if self.form == CovForm.LP:
            cov = build_lp(corr, projector, 0.0)
        else:
            cov = build_mlp(corr, projector, self.taper, 0.0)
        logger.debug("theta=%s: rank %d", theta, projector.achieved_rank)
        return AtomBasis(cov, projector, low_rank_basis(cov))

    def basis(self, theta) -> AtomBasis:
        theta = theta_key(theta)
        if self.form == CovForm.EXACT:
            return self._exact(theta)
        found = self._table.get(theta)
        if found is not None:
            return found
        return self._extra.get(theta, lambda: self._make_basis(theta))

    def build(self, sigma2: float, tau2: float, theta) -> StructuredCov:
        return self.basis(theta).cov.rescaled(sigma2).with_nugget(tau2)

    def build_params(self, params: Params) -> StructuredCov:
        return self.build(params.sigma2, params.tau2, params.theta)

    def projector(self, theta) -> Optional[Projector]:
        return self.basis(theta).projector

    @property
    def projector_ranks(self) -> Dict[Theta, int]:
        return {theta: b.projector.achieved_rank for theta, b in self._table.items() if b.projector is not None}

    def cross_covariance(self, points0: np.ndarray, sigma2: float, theta) -> np.ndarray:
        """
        Covariance between points0 (rows) and the sampling locations under the
        configured approximation: C_W for exact, C_W K_gamma for CT and
        C_approx + w (C_W - C_approx) with w = delta (LP) or K_gamma (MLP).
        """
        points0 = np.atleast_2d(np.asarray(points0, dtype=float))
        if points0.shape[1] != self.locations.dim:
            raise UsageError(f"prediction points have {points0.shape[1]} coordinates, expected {self.locations.dim}")
        spec = self.kernel.with_theta(theta).with_sigma2(1.0)
        r0 = cross_covariance(points0, self.locations, spec)
        if self.form == CovForm.EXACT:
            return sigma2 * r0
        h = pairwise_distances(points0, self.locations.coords)
        if self.form == CovForm.CT:
            return sigma2 * r0 * taper_weight(h, self.taper.taper)
        basis = self.basis(theta)
        a = la.solve_triangular(basis.cov.m_chol, basis.projector.phi @ r0.T, lower=True, check_finite=False)
        approx = a.T @ basis.v.T
        if self.form == CovForm.LP:
            w = (h == 0.0).astype(float)
        else:
            w = taper_weight(h, self.taper.taper)
        return sigma2 * (approx + w * (r0 - approx))

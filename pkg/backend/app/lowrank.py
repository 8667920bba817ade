"""
Adaptive range finder and the LP / CT / MLP covariance structures

All builders share one representation: with U = Sigma_W Phi', M = Phi U and
M = L L', the low-rank part is V V' where V = U L^-T, so entry (i, j) of
Sigma_approx is the dot product of rows i and j of V. Residuals are only
ever evaluated on the taper's nonzero pattern.
"""
import logging
import time
from collections import deque
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .config import settings
from .covariance import correlation_matrix, taper_matrix, TaperMatrix
from .exceptions import ConfigurationError, OutOfRegimeError, UsageError
from .models import (
    ApproxSettings, CovForm, KernelSpec, Locations, Projector, StructuredCov, TaperSpec,
)
from .rng import SeedLike, child_seed, make_rng
from .schemas import ApproxErrorRow
from .solver import cholesky_lower

logger = logging.getLogger(__name__)

STOPPING_FACTOR = np.sqrt(np.pi / 2.0) / 10.0


def _check_square(sigma_w: np.ndarray) -> np.ndarray:
    sigma_w = np.asarray(sigma_w, dtype=float)
    if sigma_w.ndim != 2 or sigma_w.shape[0] != sigma_w.shape[1]:
        raise UsageError(f"covariance must be a square matrix, got shape {sigma_w.shape}")
    return sigma_w


def adaptive_range_finder(sigma_w: np.ndarray, eps: float, r: int, seed: SeedLike = None) -> Projector:
    """
    Grow an orthonormal Phi one row at a time until the r most recent
    lookahead vectors all have norm below sqrt(pi/2) eps / 10, which gives
    ||Sigma_W - Phi' Phi Sigma_W||_F < eps with probability at least 1 - n / 10^r.
    """
    if not eps > 0:
        raise ConfigurationError(f"target error eps must be positive, got {eps}")
    if int(r) != r or r < 1:
        raise ConfigurationError(f"probability parameter r must be an integer >= 1, got {r}")
    r = int(r)
    sigma_w = _check_square(sigma_w)
    n = sigma_w.shape[0]
    rng = make_rng(seed)
    threshold = STOPPING_FACTOR * eps

    def draw() -> np.ndarray:
        return sigma_w @ rng.standard_normal(n)

    # Steps 1-3
    pending = deque(draw() for _ in range(r))
    first = pending[0].copy()
    basis = np.empty((min(n, max(2 * r, 16)), n))
    m = 0
    full_rank = False

    # Step 4
    while max(np.linalg.norm(k) for k in pending) >= threshold:
        if m == n:
            full_rank = True
            break
        kappa = pending.popleft()
        before = np.linalg.norm(kappa)
        # Step 5
        if m:
            active = basis[:m]
            kappa = kappa - active.T @ (active @ kappa)
            if np.linalg.norm(kappa) < 0.5 * before:
                kappa = kappa - active.T @ (active @ kappa)
        norm = np.linalg.norm(kappa)
        # Steps 6-7; a vector already inside the span adds nothing
        if norm > np.finfo(float).eps * max(before, 1.0):
            if m == basis.shape[0]:
                grown = np.empty((min(n, 2 * basis.shape[0]), n))
                grown[:m] = basis[:m]
                basis = grown
            phi = kappa / norm
            basis[m] = phi
            m += 1
            # Step 9
            for i in range(len(pending)):
                pending[i] = pending[i] - phi * (phi @ pending[i])
        # Step 8
        fresh = draw()
        if m:
            active = basis[:m]
            fresh = fresh - active.T @ (active @ fresh)
        pending.append(fresh)

    degenerate = False
    if m == 0:
        # Step 11
        norm = np.linalg.norm(first)
        if norm > 0:
            phi = (first / norm)[None, :]
        else:
            phi = np.zeros((1, n))
            phi[0, 0] = 1.0
            degenerate = True
    else:
        phi = basis[:m].copy()

    if full_rank:
        logger.warning("range finder reached m = n = %d before meeting eps=%g", n, eps)
    logger.debug("range finder: eps=%g r=%d -> m=%d", eps, r, phi.shape[0])
    return Projector(
        phi=phi,
        target_eps=float(eps),
        prob_param=r,
        seed=seed if isinstance(seed, (int, np.integer)) else None,
        degenerate=degenerate,
        full_rank=full_rank,
    )


def optimal_projector(sigma_w: np.ndarray, m: int) -> Projector:
    """Leading m eigenvectors; the best rank-m Phi in Frobenius norm"""
    sigma_w = _check_square(sigma_w)
    n = sigma_w.shape[0]
    if not 1 <= m <= n:
        raise UsageError(f"rank m must be in [1, {n}], got {m}")
    values, vectors = la.eigh(sigma_w)
    order = np.argsort(values)[::-1]
    phi = vectors[:, order[:m]].T.copy()
    tail = np.clip(values[order[m:]], 0.0, None)
    return Projector(phi=phi, target_eps=float(np.sqrt(np.sum(tail * tail))), prob_param=0)


def _low_rank_factors(sigma_w: np.ndarray, projector: Projector) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """U = Sigma_W Phi', chol(M) and V = U L^-T"""
    if projector.n != sigma_w.shape[0]:
        raise UsageError(f"projector has {projector.n} columns but the covariance is {sigma_w.shape[0]} x {sigma_w.shape[0]}")
    u = sigma_w @ projector.phi.T
    m = projector.phi @ u
    m_chol = cholesky_lower(0.5 * (m + m.T), "Phi Sigma_W Phi'")
    v = la.solve_triangular(m_chol, u.T, lower=True, check_finite=False).T
    return u, m_chol, v


def _residual_diagonal(diagonal: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, int]:
    """diag(Sigma_W - Sigma_approx) clamped at zero, with the number of clamped entries"""
    resid = diagonal - np.einsum("ij,ij->i", v, v)
    negative = resid < 0
    clamped = int(negative.sum())
    if clamped:
        worst = float(resid.min())
        scale = float(np.max(np.abs(diagonal))) or 1.0
        log = logger.warning if worst < -settings.NEGATIVE_VARIANCE_TOL * scale else logger.debug
        log("clamped %d negative residual variances (smallest %.3e)", clamped, worst)
        resid = np.where(negative, 0.0, resid)
    return resid, clamped


def build_exact(sigma_w: np.ndarray, tau2: float) -> StructuredCov:
    sigma_w = _check_square(sigma_w)
    return StructuredCov(CovForm.EXACT, sigma_w.copy(), float(tau2))


def build_lp(sigma_w: np.ndarray, projector: Projector, tau2: float) -> StructuredCov:
    """Sigma_approx plus the diagonal correction that restores the exact variances"""
    sigma_w = _check_square(sigma_w)
    u, m_chol, v = _low_rank_factors(sigma_w, projector)
    resid, clamped = _residual_diagonal(np.diag(sigma_w), v)
    core = sp.diags(resid, format="csr")
    return StructuredCov(CovForm.LP, core, float(tau2), u=u, m_chol=m_chol, clamped=clamped)


def build_ct(sigma_w: np.ndarray, taper_m: TaperMatrix, tau2: float) -> StructuredCov:
    """Sigma_W o Sigma_taper, evaluated on the taper pattern only"""
    sigma_w = _check_square(sigma_w)
    if taper_m.n != sigma_w.shape[0]:
        raise UsageError("taper matrix and covariance sizes differ")
    core = taper_m.hadamard(sigma_w[taper_m.rows, taper_m.cols], np.diag(sigma_w).copy())
    return StructuredCov(CovForm.CT, core, float(tau2))


def build_mlp(sigma_w: np.ndarray, projector: Projector, taper_m: TaperMatrix, tau2: float) -> StructuredCov:
    """Sigma_approx plus (Sigma_W - Sigma_approx) o Sigma_taper"""
    sigma_w = _check_square(sigma_w)
    if taper_m.n != sigma_w.shape[0]:
        raise UsageError("taper matrix and covariance sizes differ")
    u, m_chol, v = _low_rank_factors(sigma_w, projector)
    rows, cols = taper_m.rows, taper_m.cols
    off = sigma_w[rows, cols] - np.einsum("ij,ij->i", v[rows], v[cols])
    resid, clamped = _residual_diagonal(np.diag(sigma_w), v)
    core = taper_m.hadamard(off, resid)
    return StructuredCov(CovForm.MLP, core, float(tau2), u=u, m_chol=m_chol, clamped=clamped)


def low_rank_basis(cov: StructuredCov) -> np.ndarray:
    """V with V V' = U M^-1 U'"""
    if not cov.has_low_rank:
        return np.zeros((cov.n, 0))
    return la.solve_triangular(cov.m_chol, cov.u.T, lower=True, check_finite=False).T


def densify(cov: StructuredCov, include_nugget: bool = False, include_core: bool = True,
            cap: Optional[int] = None) -> np.ndarray:
    """Dense matrix of the operator; diagnostics only"""
    cap = settings.DENSIFY_CAP if cap is None else cap
    n = cov.n
    if n > cap:
        raise UsageError(f"refusing to densify a {n} x {n} covariance (cap {cap})")
    dense = np.zeros((n, n))
    if include_core:
        dense += cov.core if isinstance(cov.core, np.ndarray) else cov.core.toarray()
    if cov.has_low_rank:
        v = low_rank_basis(cov)
        dense += v @ v.T
    if include_nugget:
        dense[np.diag_indices(n)] += cov.nugget
    return dense


def frobenius_error(sigma_w: np.ndarray, approx: StructuredCov, include_core: bool = True) -> float:
    """||Sigma_W - approx||_F without the nugget; include_core=False measures Sigma_approx alone"""
    sigma_w = _check_square(sigma_w)
    return float(np.linalg.norm(sigma_w - densify(approx, include_core=include_core), "fro"))


def kl_bound(n: int, eps: float, tau2: float) -> float:
    """(n/2) {eps/tau2 - log(1 - eps/tau2)}, valid for 0 < eps < tau2"""
    if not eps > 0:
        raise ConfigurationError(f"target error eps must be positive, got {eps}")
    if not tau2 > 0:
        raise OutOfRegimeError(f"tau2 must be positive, got {tau2}")
    if not eps < tau2:
        raise OutOfRegimeError(f"KL bound needs eps < tau2, got eps={eps}, tau2={tau2}")
    x = eps / tau2
    return float(0.5 * n * (x - np.log1p(-x)))


def kl_gaussian(mean: Optional[np.ndarray], cov_f: np.ndarray, cov_fstar: np.ndarray) -> float:
    """
    KL(f || f*) for f = N(mean, cov_f) and f* = N(mean, cov_fstar).

    The means are shared so no mean term appears; `mean` only fixes the dimension.
    """
    cov_f = _check_square(cov_f)
    cov_fstar = _check_square(cov_fstar)
    n = cov_f.shape[0]
    if cov_fstar.shape[0] != n or (mean is not None and np.size(mean) != n):
        raise UsageError("mean and covariances must share one dimension")
    chol_f = cholesky_lower(cov_f, "cov_f")
    chol_star = cholesky_lower(cov_fstar, "cov_fstar")
    z = la.solve_triangular(chol_star, chol_f, lower=True, check_finite=False)
    trace = float(np.sum(z * z))
    logdet_ratio = 2.0 * float(np.sum(np.log(np.diag(chol_star))) - np.sum(np.log(np.diag(chol_f))))
    return max(0.0, 0.5 * (trace - n + logdet_ratio))


def _projector_key(settings_: ApproxSettings) -> Tuple[float, int]:
    return (float(settings_.eps), int(settings_.r))


def approximation_report(
    locs: Locations,
    kernel: KernelSpec,
    tau2: float,
    methods: Sequence[ApproxSettings],
    seed: Optional[int] = None,
    include_optimal: bool = False,
    cap: Optional[int] = None,
) -> List[ApproxErrorRow]:
    """
    One row per method: achieved rank, taper sparsity, Frobenius error,
    KL divergence from the exact model and the KL bound where it applies.

    Phi is fitted to the correlation matrix and shared by every LP/MLP row with
    the same (eps, r), so rows for one projector are directly comparable.
    """
    cap = settings.DENSIFY_CAP if cap is None else cap
    if locs.n > cap:
        raise UsageError(f"approximation report densifies {locs.n} x {locs.n} matrices (cap {cap})")
    corr = correlation_matrix(locs, kernel)
    sigma_w = kernel.sigma2 * corr
    exact = sigma_w + tau2 * np.eye(locs.n)
    projectors: Dict[Tuple[float, int], Projector] = {}
    tapers: Dict[Tuple[str, float], TaperMatrix] = {}

    def projector_for(item: ApproxSettings) -> Projector:
        key = _projector_key(item)
        if key not in projectors:
            projectors[key] = adaptive_range_finder(corr, key[0], key[1], child_seed(seed, len(projectors)))
        return projectors[key]

    def taper_for(item: ApproxSettings) -> TaperMatrix:
        key = (item.taper.value, float(item.gamma))
        if key not in tapers:
            tapers[key] = taper_matrix(locs, TaperSpec(item.taper, item.gamma))
        return tapers[key]

    def row(name: str, item: ApproxSettings, cov: StructuredCov, rank: int, sparsity: float, started: float) -> ApproxErrorRow:
        frob = frobenius_error(sigma_w, cov)
        kl = kl_gaussian(None, exact, densify(cov, include_nugget=True, cap=cap))
        bound = None
        if cov.form in (CovForm.LP, CovForm.MLP) and 0 < frob < tau2:
            bound = kl_bound(locs.n, frob, tau2)
        return ApproxErrorRow(
            method=name,
            eps=item.eps if cov.form in (CovForm.LP, CovForm.MLP) else None,
            gamma=item.gamma if cov.form in (CovForm.CT, CovForm.MLP) else None,
            rank=rank,
            sparsity=sparsity,
            frobenius=frob,
            kl=kl,
            kl_bound=bound,
            seconds=time.perf_counter() - started,
        )

    rows: List[ApproxErrorRow] = []
    for item in methods:
        started = time.perf_counter()
        if item.method == CovForm.EXACT:
            rows.append(row("exact", item, build_exact(sigma_w, tau2), locs.n, 100.0, started))
        elif item.method == CovForm.LP:
            projector = projector_for(item)
            cov = build_lp(sigma_w, projector, tau2)
            rows.append(row("lp", item, cov, projector.achieved_rank, 0.0, started))
            if include_optimal:
                started = time.perf_counter()
                best = optimal_projector(corr, projector.achieved_rank)
                cov = build_lp(sigma_w, best, tau2)
                rows.append(row("lp-optimal", item, cov, best.achieved_rank, 0.0, started))
        elif item.method == CovForm.CT:
            taper_m = taper_for(item)
            rows.append(row("ct", item, build_ct(sigma_w, taper_m, tau2), 0, taper_m.sparsity, started))
        else:
            projector = projector_for(item)
            taper_m = taper_for(item)
            cov = build_mlp(sigma_w, projector, taper_m, tau2)
            rows.append(row("mlp", item, cov, projector.achieved_rank, taper_m.sparsity, started))
        logger.info("approx-error %s: frobenius %.4f", item.label, rows[-1].frobenius)
    return rows

"""
Inverse and log-determinant of U M^-1 U' + core + nugget * I

The low-rank part is removed with the Woodbury-type expansion

    (A + U M^-1 U')^-1 = A^-1 - A^-1 U (M + U' A^-1 U)^-1 U' A^-1
    |A + U M^-1 U|      = |A| |M|^-1 |M + U' A^-1 U|

with A = core + nugget * I factored once (diagonal, sparse or dense Cholesky)
and cached on the StructuredCov handle.
"""
import logging

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.linalg import lapack
from scipy.sparse.linalg import splu

from .config import settings
from .exceptions import FactorizationError, SolverError
from .models import CovForm, StructuredCov

logger = logging.getLogger(__name__)

try:
    from sksparse.cholmod import cholesky as cholmod_cholesky, CholmodNotPositiveDefiniteError
except ImportError:  # pragma: no cover - optional backend
    cholmod_cholesky = None
    CholmodNotPositiveDefiniteError = None


def cholesky_lower(a: np.ndarray, what: str = "matrix", error=FactorizationError) -> np.ndarray:
    """Dense lower Cholesky factor; a failing pivot is an error, never jittered"""
    a = np.asarray(a, dtype=float)
    c, info = lapack.dpotrf(a, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        pivot = info - 1
        partial = np.diag(c)[:pivot]
        smallest = float(partial.min() ** 2) if partial.size else float(a[0, 0])
        raise error(f"{what} is not positive definite; smallest accepted pivot {smallest:.3e}",
                    pivot=pivot, pivot_value=float(a[pivot, pivot]))
    if info < 0:
        raise error(f"invalid input to Cholesky of {what}")
    return c


class _DiagonalFactor:
    def __init__(self, diag: np.ndarray):
        bad = np.flatnonzero(~(diag > 0))
        if bad.size:
            raise SolverError("diagonal core plus nugget is not positive definite",
                              pivot=int(bad[0]), pivot_value=float(diag[bad[0]]))
        self.diag = diag
        self.logdet = float(np.sum(np.log(diag)))

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return rhs / self.diag[:, None] if rhs.ndim == 2 else rhs / self.diag


class _DenseFactor:
    def __init__(self, a: np.ndarray):
        self.chol = cholesky_lower(a, "core plus nugget", error=SolverError)
        self.logdet = float(2.0 * np.sum(np.log(np.diag(self.chol))))

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return la.cho_solve((self.chol, True), rhs, check_finite=False)


class _CholmodFactor:
    """Supernodal sparse Cholesky with AMD ordering"""

    def __init__(self, a: sp.csc_matrix):
        try:
            self.factor = cholmod_cholesky(a, ordering_method="amd")
        except CholmodNotPositiveDefiniteError as exc:
            raise SolverError(f"sparse core plus nugget is not positive definite: {exc}")
        self.logdet = float(self.factor.logdet())

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return self.factor(rhs)


class _SuperLUFactor:
    """
    Symmetric-mode SuperLU with a minimum-degree ordering of A'+A and no
    off-diagonal pivoting, i.e. an LDL' factorization in disguise: the
    pivots are the D entries and must all be positive.
    """

    def __init__(self, a: sp.csc_matrix):
        try:
            self.lu = splu(a, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                           options={"SymmetricMode": True})
        except RuntimeError as exc:
            raise SolverError(f"sparse core plus nugget is singular: {exc}")
        pivots = self.lu.U.diagonal()
        bad = np.flatnonzero(~(pivots > 0))
        if bad.size:
            raise SolverError("sparse core plus nugget is not positive definite",
                              pivot=int(self.lu.perm_c[bad[0]]), pivot_value=float(pivots[bad[0]]))
        self.logdet = float(np.sum(np.log(pivots)))

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return self.lu.solve(rhs)


def _factor_core(cov: StructuredCov):
    core = cov.core
    n = cov.n
    if isinstance(core, np.ndarray):
        a = core + cov.nugget * np.eye(n)
        return _DenseFactor(a)
    if cov.form == CovForm.LP:
        return _DiagonalFactor(np.asarray(core.diagonal(), dtype=float) + cov.nugget)
    a = (core + cov.nugget * sp.identity(n, format="csr")).tocsc()
    if a.nnz == n:
        return _DiagonalFactor(np.asarray(a.diagonal(), dtype=float))
    if cholmod_cholesky is not None and settings.USE_CHOLMOD:
        return _CholmodFactor(a)
    return _SuperLUFactor(a)


class _LowRankFactor:
    """A^-1 U and the Cholesky factor of M + U' A^-1 U"""

    def __init__(self, cov: StructuredCov, core):
        self.a_inv_u = core.solve(cov.u)
        inner = _m_matrix(cov) + cov.u.T @ self.a_inv_u
        inner = 0.5 * (inner + inner.T)
        self.inner_chol = cholesky_lower(inner, "inner m x m matrix", error=SolverError)
        self.inner_logdet = float(2.0 * np.sum(np.log(np.diag(self.inner_chol))))
        self.m_logdet = float(2.0 * np.sum(np.log(np.diag(cov.m_chol))))


def _m_matrix(cov: StructuredCov) -> np.ndarray:
    return cov.m_chol @ cov.m_chol.T


def core_factor(cov: StructuredCov):
    return cov.factors.get("core", lambda: _factor_core(cov))


def low_rank_factor(cov: StructuredCov) -> _LowRankFactor:
    return cov.factors.get("low_rank", lambda: _LowRankFactor(cov, core_factor(cov)))


def solve(cov: StructuredCov, rhs: np.ndarray) -> np.ndarray:
    """(U M^-1 U' + core + nugget I)^-1 rhs"""
    rhs = np.asarray(rhs, dtype=float)
    vector = rhs.ndim == 1
    b = rhs[:, None] if vector else rhs
    core = core_factor(cov)
    x = core.solve(b)
    if x.ndim == 1:
        x = x[:, None]
    if cov.has_low_rank:
        lr = low_rank_factor(cov)
        t = la.cho_solve((lr.inner_chol, True), cov.u.T @ x, check_finite=False)
        x = x - lr.a_inv_u @ t
    return x[:, 0] if vector else x


def log_det(cov: StructuredCov) -> float:
    """log|U M^-1 U' + core + nugget I| from the three factor log-diagonals"""
    core = core_factor(cov)
    if not cov.has_low_rank:
        return core.logdet
    lr = low_rank_factor(cov)
    return core.logdet - lr.m_logdet + lr.inner_logdet


def quad_form(cov: StructuredCov, v: np.ndarray) -> float:
    """v' (cov)^-1 v"""
    v = np.asarray(v, dtype=float).ravel()
    return float(v @ solve(cov, v))


def warm(cov: StructuredCov) -> StructuredCov:
    """Factor now rather than on first solve"""
    core_factor(cov)
    if cov.has_low_rank:
        low_rank_factor(cov)
    return cov


if cholmod_cholesky is None and settings.USE_CHOLMOD:
    logger.debug("scikit-sparse not installed; sparse cores use SuperLU in symmetric mode")

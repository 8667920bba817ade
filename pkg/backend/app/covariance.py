"""
Correlation kernels, taper functions and Gram-matrix builders
"""
import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist, pdist, squareform

from .exceptions import ConfigurationError, UsageError
from .models import KernelFamily, KernelSpec, Locations, SUPPORTED_NU, TaperKind, TaperSpec

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def _check_nu(nu: float) -> None:
    if nu not in SUPPORTED_NU:
        raise ConfigurationError(f"smoothness nu={nu} is not supported; choose one of {SUPPORTED_NU}")


def _matern_from_argument(a: np.ndarray, nu: float) -> np.ndarray:
    """Half-integer Matern closed forms in the scaled argument a = 2 sqrt(nu) h / lambda"""
    if nu == 0.5:
        return np.exp(-a)
    if nu == 1.5:
        return (1.0 + a) * np.exp(-a)
    return (1.0 + a + a * a / 3.0) * np.exp(-a)


def matern_corr(h: ArrayLike, nu: float, lam: float) -> ArrayLike:
    """
    Matern correlation with argument 2 nu^(1/2) h / lambda.

    nu = 0.5 gives exp(-sqrt(2) h / lambda).
    """
    _check_nu(nu)
    if not lam > 0:
        raise ConfigurationError(f"range lambda must be positive, got {lam}")
    h = np.asarray(h, dtype=float)
    if np.any(h < 0):
        raise UsageError("distances must be nonnegative")
    rho = _matern_from_argument(2.0 * np.sqrt(nu) * h / lam, nu)
    return float(rho) if rho.ndim == 0 else rho


def _check_gamma(gamma: float) -> None:
    if not gamma > 0:
        raise ConfigurationError(f"taper range gamma must be positive, got {gamma}")


def spherical_taper(x: ArrayLike, gamma: float) -> ArrayLike:
    """(1 - x/gamma)_+^2 (1 + x/(2 gamma))"""
    _check_gamma(gamma)
    x = np.asarray(x, dtype=float)
    t = x / gamma
    w = np.where(t < 1.0, (1.0 - np.minimum(t, 1.0)) ** 2 * (1.0 + 0.5 * t), 0.0)
    return float(w) if w.ndim == 0 else w


def wendland2_taper(x: ArrayLike, gamma: float) -> ArrayLike:
    """(1 - x/gamma)_+^6 (1 + 6 x/gamma + 35 x^2 / (3 gamma^2))"""
    _check_gamma(gamma)
    x = np.asarray(x, dtype=float)
    t = x / gamma
    w = np.where(t < 1.0, (1.0 - np.minimum(t, 1.0)) ** 6 * (1.0 + 6.0 * t + 35.0 * t * t / 3.0), 0.0)
    return float(w) if w.ndim == 0 else w


def taper_weight(x: ArrayLike, taper: TaperSpec) -> ArrayLike:
    if taper.kind == TaperKind.SPHERICAL:
        return spherical_taper(x, taper.gamma)
    return wendland2_taper(x, taper.gamma)


def _region_ranges(coords: np.ndarray, spec: KernelSpec) -> np.ndarray:
    labels = spec.region.labels(coords)
    return np.where(labels == 1, spec.lam, spec.lam2)


def _nonstationary_corr(h: np.ndarray, lam_a: np.ndarray, lam_b: np.ndarray, nu: float, dim: int) -> np.ndarray:
    """Paciorek-Schervish form with Sigma_D(s) = lambda_D(s)^2 I"""
    mean_sq = 0.5 * (lam_a * lam_a + lam_b * lam_b)
    prefactor = (lam_a * lam_b / mean_sq) ** (dim / 2.0)
    q = h * h / mean_sq
    return prefactor * _matern_from_argument(2.0 * np.sqrt(nu * q), nu)


def nonstationary_cov(s: np.ndarray, s_star: np.ndarray, spec: KernelSpec) -> float:
    if spec.family != KernelFamily.NONSTATIONARY:
        raise ConfigurationError("nonstationary_cov needs a nonstationary kernel spec")
    _check_nu(spec.nu)
    s = np.atleast_2d(np.asarray(s, dtype=float))
    s_star = np.atleast_2d(np.asarray(s_star, dtype=float))
    h = float(np.linalg.norm(s[0] - s_star[0]))
    lam_a = _region_ranges(s, spec)[0]
    lam_b = _region_ranges(s_star, spec)[0]
    return float(spec.sigma2 * _nonstationary_corr(np.asarray(h), lam_a, lam_b, spec.nu, s.shape[1]))


def pairwise_distances(a: np.ndarray, b: Optional[np.ndarray] = None) -> np.ndarray:
    """Euclidean distances; the square self case is symmetric by construction"""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if b is None:
        if a.shape[0] == 1:
            return np.zeros((1, 1))
        return squareform(pdist(a))
    return cdist(a, np.atleast_2d(np.asarray(b, dtype=float)))


def correlation_matrix(locs: Locations, spec: KernelSpec, distances: Optional[np.ndarray] = None) -> np.ndarray:
    """sigma2-free correlation matrix R with Sigma_W = sigma2 R"""
    h = pairwise_distances(locs.coords) if distances is None else distances
    if spec.family == KernelFamily.MATERN:
        return _matern_from_argument(2.0 * np.sqrt(spec.nu) * h / spec.lam, spec.nu)
    lam = _region_ranges(locs.coords, spec)
    return _nonstationary_corr(h, lam[:, None], lam[None, :], spec.nu, locs.dim)


def pair_correlations(locs: Locations, spec: KernelSpec, rows: np.ndarray, cols: np.ndarray, dist: np.ndarray) -> np.ndarray:
    """Entries R[rows, cols] from precomputed pair distances, without forming R"""
    if spec.family == KernelFamily.MATERN:
        return _matern_from_argument(2.0 * np.sqrt(spec.nu) * dist / spec.lam, spec.nu)
    lam = _region_ranges(locs.coords, spec)
    return _nonstationary_corr(dist, lam[rows], lam[cols], spec.nu, locs.dim)


def gram_matrix(locs: Locations, spec: KernelSpec, distances: Optional[np.ndarray] = None) -> np.ndarray:
    """(Sigma_W)_ij = sigma2 rho_W(s_i, s_j)"""
    if locs.n < 1:
        raise UsageError("gram_matrix needs at least one location")
    return spec.sigma2 * correlation_matrix(locs, spec, distances)


def cross_covariance(points0: np.ndarray, locs: Locations, spec: KernelSpec) -> np.ndarray:
    """C_W between prediction points (rows) and sampling locations (columns)"""
    points0 = np.atleast_2d(np.asarray(points0, dtype=float))
    h = pairwise_distances(points0, locs.coords)
    if spec.family == KernelFamily.MATERN:
        rho = _matern_from_argument(2.0 * np.sqrt(spec.nu) * h / spec.lam, spec.nu)
    else:
        lam0 = _region_ranges(points0, spec)
        lam = _region_ranges(locs.coords, spec)
        rho = _nonstationary_corr(h, lam0[:, None], lam[None, :], spec.nu, locs.dim)
    return spec.sigma2 * rho


def effective_range(nu: float, lam: float, level: float = 0.05) -> float:
    """Distance at which the Matern correlation drops to `level`"""
    _check_nu(nu)
    if nu == 0.5:
        return float(lam * np.log(1.0 / level) / np.sqrt(2.0))
    upper = lam
    while matern_corr(upper, nu, lam) > level:
        upper *= 2.0
    return float(brentq(lambda h: matern_corr(h, nu, lam) - level, 0.0, upper))


@dataclass(frozen=True)
class TaperMatrix:
    """
    Sparse Sigma_taper with unit diagonal.

    `rows`/`cols` list the strictly upper pairs with distance < gamma and
    `dist` their distances, in the same order as `weights`.
    """
    matrix: sp.csr_matrix
    rows: np.ndarray
    cols: np.ndarray
    dist: np.ndarray
    weights: np.ndarray
    taper: TaperSpec

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def sparsity(self) -> float:
        """Percentage of nonzero off-diagonal entries"""
        if self.n < 2:
            return 0.0
        return 100.0 * 2 * self.rows.size / (self.n * (self.n - 1))

    def hadamard(self, values: np.ndarray, diagonal: np.ndarray) -> sp.csr_matrix:
        """Symmetric sparse matrix with weights * values on the pattern and `diagonal` on the diagonal"""
        off = self.weights * values
        n = self.n
        idx = np.arange(n)
        rows = np.concatenate([self.rows, self.cols, idx])
        cols = np.concatenate([self.cols, self.rows, idx])
        data = np.concatenate([off, off, diagonal])
        return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


def _close_pairs(coords: np.ndarray, gamma: float):
    n = coords.shape[0]
    if np.isinf(gamma):
        rows, cols = np.triu_indices(n, k=1)
    else:
        pairs = cKDTree(coords).query_pairs(r=gamma, output_type="ndarray")
        if pairs.size == 0:
            return np.empty(0, dtype=int), np.empty(0, dtype=int), np.empty(0)
        pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
        rows, cols = pairs[:, 0], pairs[:, 1]
    dist = np.linalg.norm(coords[rows] - coords[cols], axis=1)
    keep = dist < gamma
    return rows[keep], cols[keep], dist[keep]


def taper_matrix(locs: Locations, taper: TaperSpec) -> TaperMatrix:
    """(Sigma_taper)_ij = K_gamma(||s_i - s_j||), stored only where the distance is below gamma"""
    if locs.n < 1:
        raise UsageError("taper_matrix needs at least one location")
    _check_gamma(taper.gamma)
    rows, cols, dist = _close_pairs(locs.coords, taper.gamma)
    weights = np.asarray(taper_weight(dist, taper), dtype=float)
    n = locs.n
    idx = np.arange(n)
    matrix = sp.csr_matrix(
        (np.concatenate([weights, weights, np.ones(n)]),
         (np.concatenate([rows, cols, idx]), np.concatenate([cols, rows, idx]))),
        shape=(n, n),
    )
    result = TaperMatrix(matrix, rows, cols, dist, weights, taper)
    logger.debug("taper %s gamma=%g: %d pairs, sparsity %.2f%%", taper.kind.value, taper.gamma, rows.size, result.sparsity)
    return result

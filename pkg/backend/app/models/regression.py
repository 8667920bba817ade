"""
Regression data, parameter vector and prior specification
"""
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np
import scipy.linalg as la

from ..exceptions import ConfigurationError, UsageError
from .spatial import Locations


@dataclass(frozen=True)
class RegressionData:
    X: np.ndarray
    Y: np.ndarray
    locations: Locations
    check_rank: bool = True

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        Y = np.asarray(self.Y, dtype=float).ravel()
        if X.shape[0] != Y.shape[0] or X.shape[0] != self.locations.n:
            raise UsageError(
                f"row counts disagree: X {X.shape[0]}, Y {Y.shape[0]}, locations {self.locations.n}"
            )
        if X.shape[1] < 1:
            raise UsageError("X needs at least one column")
        if self.check_rank:
            rank = _numerical_rank(X)
            if rank < X.shape[1]:
                raise UsageError(f"X is rank deficient ({rank} < {X.shape[1]} columns)")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def subset(self, index) -> "RegressionData":
        index = np.asarray(index)
        return RegressionData(self.X[index], self.Y[index], self.locations.subset(index), self.check_rank)

    def permuted(self, order) -> "RegressionData":
        return self.subset(order)


def _numerical_rank(X: np.ndarray) -> int:
    """Rank from a column-pivoted QR"""
    if not np.any(X):
        return 0
    _, r, _ = la.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = diag.max() * max(X.shape) * np.finfo(float).eps
    return int(np.sum(diag > tol))


@dataclass(frozen=True)
class Params:
    """Omega = (beta, tau2, sigma2, theta)"""
    beta: np.ndarray
    tau2: float
    sigma2: float
    theta: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "beta", np.atleast_1d(np.asarray(self.beta, dtype=float)))
        object.__setattr__(self, "theta", tuple(float(t) for t in self.theta))

    def replace(self, **changes) -> "Params":
        return replace(self, **changes)

    @property
    def in_support(self) -> bool:
        return self.tau2 > 0 and self.sigma2 > 0 and all(t > 0 for t in self.theta)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.beta, [self.tau2, self.sigma2], self.theta])


@dataclass(frozen=True)
class InverseGamma:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ConfigurationError(f"inverse gamma needs a, b > 0, got ({self.a}, {self.b})")

    def log_density(self, x: float) -> float:
        """Unnormalized: -(a + 1) log x - b / x"""
        if not x > 0:
            return -np.inf
        return -(self.a + 1.0) * np.log(x) - self.b / x


@dataclass(frozen=True)
class PriorSpec:
    """
    beta ~ N(mu_beta, Sigma_beta), tau2 ~ IG(a1, b1), sigma2 ~ IG(a2, b2),
    each range parameter discrete uniform over its atoms.
    """
    mu_beta: np.ndarray
    sigma_beta: np.ndarray
    tau2: InverseGamma
    sigma2: InverseGamma
    atoms: Tuple[Tuple[float, ...], ...] = field(default_factory=tuple)

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu_beta, dtype=float))
        cov = np.atleast_2d(np.asarray(self.sigma_beta, dtype=float))
        if cov.shape != (mu.size, mu.size):
            raise ConfigurationError(f"Sigma_beta shape {cov.shape} does not match mu_beta ({mu.size})")
        try:
            chol = la.cholesky(cov, lower=True)
        except la.LinAlgError:
            raise ConfigurationError("Sigma_beta must be positive definite")
        atoms = tuple(tuple(float(c) for c in component) for component in self.atoms)
        for component in atoms:
            if any(c <= 0 for c in component):
                raise ConfigurationError("range atoms must be positive")
            if len(set(component)) != len(component):
                raise ConfigurationError("range atoms must be distinct")
        object.__setattr__(self, "mu_beta", mu)
        object.__setattr__(self, "sigma_beta", cov)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "_beta_chol", chol)

    @property
    def p(self) -> int:
        return self.mu_beta.size

    @property
    def beta_precision(self) -> np.ndarray:
        return la.cho_solve((self._beta_chol, True), np.eye(self.p))

    def log_beta(self, beta: np.ndarray) -> float:
        z = la.solve_triangular(self._beta_chol, np.asarray(beta) - self.mu_beta, lower=True)
        return -0.5 * float(z @ z)

    def atom_index(self, component: int, value: float) -> Optional[int]:
        atoms = np.asarray(self.atoms[component])
        hits = np.flatnonzero(np.isclose(atoms, value, rtol=1e-12, atol=0.0))
        return int(hits[0]) if hits.size else None

    def nearest_atom(self, component: int, value: float) -> float:
        atoms = np.asarray(self.atoms[component])
        return float(atoms[np.argmin(np.abs(atoms - value))])

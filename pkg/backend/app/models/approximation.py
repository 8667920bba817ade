"""
Projector and structured covariance handles
"""
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Hashable, Optional, Union

import numpy as np
import scipy.sparse as sp


class CovForm(str, Enum):
    EXACT = "exact"
    LP = "lp"
    CT = "ct"
    MLP = "mlp"


@dataclass(frozen=True)
class Projector:
    """m x n matrix with orthonormal rows plus how it was obtained"""
    phi: np.ndarray
    target_eps: float
    prob_param: int
    seed: Optional[int] = None
    degenerate: bool = False   # zero operator, canonical e1 returned
    full_rank: bool = False    # m reached n before the stopping rule held

    @property
    def achieved_rank(self) -> int:
        return self.phi.shape[0]

    @property
    def n(self) -> int:
        return self.phi.shape[1]


class FactorCache:
    """Compute-once store; concurrent first use of a key is serialized"""

    def __init__(self):
        self._values: Dict[Hashable, Any] = {}
        self._lock = threading.RLock()

    def get(self, key: Hashable, build: Callable[[], Any]) -> Any:
        value = self._values.get(key)
        if value is not None:
            return value
        with self._lock:
            value = self._values.get(key)
            if value is None:
                value = build()
                self._values[key] = value
        return value

    def __contains__(self, key: Hashable) -> bool:
        return key in self._values


Core = Union[sp.spmatrix, np.ndarray]


@dataclass(frozen=True, eq=False)
class StructuredCov:
    """
    Covariance operator U M^-1 U' + core + nugget * I.

    `u` and `m_chol` (lower Cholesky factor of M = Phi Sigma_W Phi') are None
    for the exact and tapered forms. `core` is dense for the exact form, a
    diagonal sparse matrix for LP and a symmetric sparse matrix otherwise.
    """
    form: CovForm
    core: Core
    nugget: float
    u: Optional[np.ndarray] = None
    m_chol: Optional[np.ndarray] = None
    clamped: int = 0
    factors: FactorCache = field(default_factory=FactorCache, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.core.shape[0]

    @property
    def rank(self) -> int:
        return 0 if self.u is None else self.u.shape[1]

    @property
    def has_low_rank(self) -> bool:
        return self.u is not None and self.u.shape[1] > 0

    def with_nugget(self, tau2: float) -> "StructuredCov":
        return StructuredCov(self.form, self.core, float(tau2), self.u, self.m_chol, self.clamped)

    def rescaled(self, ratio: float) -> "StructuredCov":
        """Covariance for sigma2 * ratio; Phi is scale-invariant so only the pieces scale"""
        u = None if self.u is None else self.u * ratio
        m_chol = None if self.m_chol is None else self.m_chol * np.sqrt(ratio)
        return StructuredCov(self.form, self.core * ratio, self.nugget, u, m_chol, self.clamped)

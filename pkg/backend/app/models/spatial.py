"""
Spatial domain types: locations, kernel and taper specifications
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from ..exceptions import ConfigurationError, UsageError

SUPPORTED_NU = (0.5, 1.5, 2.5)


class KernelFamily(str, Enum):
    MATERN = "matern"
    NONSTATIONARY = "nonstationary"


class TaperKind(str, Enum):
    SPHERICAL = "spherical"
    WENDLAND2 = "wendland2"


@dataclass(frozen=True)
class Locations:
    """n sampling points in d dimensions"""
    coords: np.ndarray

    def __post_init__(self):
        coords = np.atleast_2d(np.asarray(self.coords, dtype=float))
        if coords.ndim != 2:
            raise UsageError("coordinates must be an (n, d) array")
        if np.isnan(coords).any():
            raise UsageError("coordinates contain NaN")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def __len__(self) -> int:
        return self.n

    def subset(self, index: np.ndarray) -> "Locations":
        return Locations(self.coords[np.asarray(index)])


@dataclass(frozen=True)
class RegionRule:
    """Points with coords[axis] <= threshold belong to subregion 1, the rest to 2"""
    axis: int = 0
    threshold: float = 250.0

    def labels(self, coords: np.ndarray) -> np.ndarray:
        coords = np.atleast_2d(coords)
        return np.where(coords[:, self.axis] <= self.threshold, 1, 2)


@dataclass(frozen=True)
class KernelSpec:
    """
    Covariance model C_W = sigma2 * rho_W.

    Matern uses a single range `lam`; the nonstationary family uses `lam` for
    subregion 1 and `lam2` for subregion 2 under `region`.
    """
    family: KernelFamily = KernelFamily.MATERN
    sigma2: float = 1.0
    nu: float = 0.5
    lam: float = 1.0
    lam2: Optional[float] = None
    region: RegionRule = field(default_factory=RegionRule)

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily(self.family))
        if not self.sigma2 >= 0:
            raise ConfigurationError(f"sigma2 must be nonnegative, got {self.sigma2}")
        if self.nu not in SUPPORTED_NU:
            raise ConfigurationError(
                f"smoothness nu={self.nu} is not supported; choose one of {SUPPORTED_NU}"
            )
        if not self.lam > 0:
            raise ConfigurationError(f"range lambda must be positive, got {self.lam}")
        if self.family == KernelFamily.NONSTATIONARY:
            if self.lam2 is None or not self.lam2 > 0:
                raise ConfigurationError("nonstationary kernel needs a positive lambda2")

    @property
    def theta(self) -> Tuple[float, ...]:
        if self.family == KernelFamily.NONSTATIONARY:
            return (self.lam, self.lam2)
        return (self.lam,)

    def with_theta(self, theta) -> "KernelSpec":
        theta = tuple(float(t) for t in theta)
        if self.family == KernelFamily.NONSTATIONARY:
            return KernelSpec(self.family, self.sigma2, self.nu, theta[0], theta[1], self.region)
        return KernelSpec(self.family, self.sigma2, self.nu, theta[0], None, self.region)

    def with_sigma2(self, sigma2: float) -> "KernelSpec":
        return KernelSpec(self.family, sigma2, self.nu, self.lam, self.lam2, self.region)


@dataclass(frozen=True)
class TaperSpec:
    kind: TaperKind = TaperKind.WENDLAND2
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", TaperKind(self.kind))
        if not self.gamma > 0:
            raise ConfigurationError(f"taper range gamma must be positive, got {self.gamma}")

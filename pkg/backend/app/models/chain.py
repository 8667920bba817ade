"""
Sampler configuration and posterior chains
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from ..exceptions import ConfigurationError
from .approximation import CovForm
from .regression import Params
from .spatial import TaperKind


@dataclass(frozen=True)
class ApproxSettings:
    method: CovForm = CovForm.EXACT
    eps: Optional[float] = None
    r: Optional[int] = None
    gamma: Optional[float] = None
    taper: TaperKind = TaperKind.WENDLAND2

    def __post_init__(self):
        object.__setattr__(self, "method", CovForm(self.method))
        object.__setattr__(self, "taper", TaperKind(self.taper))
        if self.method in (CovForm.LP, CovForm.MLP):
            if self.eps is None or not self.eps > 0:
                raise ConfigurationError(f"{self.method.value} needs a positive eps")
            if self.r is None or self.r < 1:
                raise ConfigurationError(f"{self.method.value} needs r >= 1")
        if self.method in (CovForm.CT, CovForm.MLP):
            if self.gamma is None or not self.gamma > 0:
                raise ConfigurationError(f"{self.method.value} needs a positive gamma")

    @property
    def label(self) -> str:
        parts = [self.method.value.upper()]
        if self.eps is not None and self.method in (CovForm.LP, CovForm.MLP):
            parts.append(f"eps={self.eps:g}")
        if self.gamma is not None and self.method in (CovForm.CT, CovForm.MLP):
            parts.append(f"gamma={self.gamma:g}")
        return " ".join(parts)


@dataclass(frozen=True)
class SamplerConfig:
    iterations: int
    burnin: int = 500
    proposal_sd: Tuple[float, float] = (0.1, 0.1)
    target_acceptance: float = 0.40
    adapt: bool = True
    adapt_interval: int = 50
    update_beta: bool = True
    update_tau2: bool = True
    update_sigma2: bool = True
    update_theta: bool = True
    approx: ApproxSettings = field(default_factory=ApproxSettings)

    def __post_init__(self):
        if not self.iterations > self.burnin >= 0:
            raise ConfigurationError(
                f"need iterations > burnin >= 0, got {self.iterations} and {self.burnin}"
            )
        if any(sd < 0 for sd in self.proposal_sd):
            raise ConfigurationError("proposal sds must be nonnegative")
        if self.adapt_interval < 1:
            raise ConfigurationError("adapt_interval must be >= 1")


@dataclass
class Chain:
    """Post burn-in draws of (beta, tau2, sigma2, theta) plus run metadata"""
    draws: np.ndarray
    columns: List[str]
    acceptance_rates: Dict[str, float]
    proposal_sds: Tuple[float, float]
    seed: Optional[int]
    burnin: int
    p: int
    projector_ranks: Dict[Tuple[float, ...], int] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)

    def __len__(self) -> int:
        return self.draws.shape[0]

    @property
    def n_theta(self) -> int:
        return self.draws.shape[1] - self.p - 2

    def column(self, name: str) -> np.ndarray:
        return self.draws[:, self.columns.index(name)]

    def beta(self, l: int) -> np.ndarray:
        return self.draws[l, :self.p]

    def tau2(self, l: int) -> float:
        return float(self.draws[l, self.p])

    def sigma2(self, l: int) -> float:
        return float(self.draws[l, self.p + 1])

    def theta(self, l: int) -> Tuple[float, ...]:
        return tuple(float(t) for t in self.draws[l, self.p + 2:])

    def params(self, l: int) -> Params:
        return Params(self.beta(l), self.tau2(l), self.sigma2(l), self.theta(l))

    def thinned(self, max_draws: Optional[int]) -> np.ndarray:
        """Evenly spaced draw indices, at most max_draws of them"""
        total = len(self)
        if max_draws is None or max_draws >= total:
            return np.arange(total)
        return np.unique(np.linspace(0, total - 1, max_draws).round().astype(int))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.draws, columns=self.columns)


def chain_columns(p: int, n_theta: int) -> List[str]:
    names = [f"beta{i + 1}" for i in range(p)] + ["tau2", "sigma2"]
    if n_theta == 1:
        names.append("lambda")
    else:
        names += [f"lambda{i + 1}" for i in range(n_theta)]
    return names

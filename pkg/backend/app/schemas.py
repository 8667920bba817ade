"""
Pydantic schemas for experiment configuration and report rows
"""
import os
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
import yaml
from pydantic import BaseModel, field_validator, model_validator

from .exceptions import ConfigurationError
from .models import (
    ApproxSettings, CovForm, InverseGamma, KernelFamily, KernelSpec, PriorSpec,
    RegionRule, SamplerConfig, TaperKind,
)

Bounds = Tuple[float, float, float, float]


# Input blocks
class DataConfig(BaseModel):
    train: str
    test: Optional[str] = None
    intercept: bool = True

    class Config:
        extra = "forbid"

    @field_validator("train", "test")
    @classmethod
    def file_exists(cls, value):
        if value is not None and not os.path.isfile(value):
            raise ValueError(f"file not found: {value}")
        return value


class SimulationConfig(BaseModel):
    design: Literal["simulation_one", "simulation_two"] = "simulation_one"
    correlation: Literal["strong", "weak"] = "strong"  # simulation_one only
    n: Optional[int] = None
    n_train: Optional[int] = None

    class Config:
        extra = "forbid"

    @model_validator(mode="after")
    def split_sizes(self):
        if self.n is not None and self.n < 2:
            raise ValueError("n must be at least 2")
        if self.n is not None and self.n_train is not None and not 1 <= self.n_train < self.n:
            raise ValueError(f"n_train must be in [1, {self.n - 1}]")
        return self


# Model blocks
class RegionConfig(BaseModel):
    axis: int = 0
    threshold: float = 250.0

    class Config:
        extra = "forbid"


class KernelConfig(BaseModel):
    family: KernelFamily = KernelFamily.MATERN
    nu: float = 0.5
    sigma2: float = 1.0
    lam: float = 1.0
    lam2: Optional[float] = None
    region: RegionConfig = RegionConfig()

    class Config:
        extra = "forbid"

    def to_spec(self) -> KernelSpec:
        return KernelSpec(self.family, self.sigma2, self.nu, self.lam, self.lam2,
                          RegionRule(self.region.axis, self.region.threshold))


class AtomRule(BaseModel):
    """c_i = 1 / (k i), i = 1..count"""
    k: float
    count: int

    class Config:
        extra = "forbid"

    def values(self) -> Tuple[float, ...]:
        if not (self.k > 0 and self.count >= 1):
            raise ConfigurationError("atom rule needs k > 0 and count >= 1")
        return tuple(1.0 / (self.k * i) for i in range(1, self.count + 1))


class PriorConfig(BaseModel):
    mu_beta: Optional[List[float]] = None
    sigma_beta: Union[float, List[List[float]]] = 1000.0
    a1: float = 1.0
    b1: float = 0.1
    a2: float = 0.8
    b2: float = 0.1
    atoms: Optional[List[List[float]]] = None
    atom_rule: Optional[AtomRule] = None

    class Config:
        extra = "forbid"

    @model_validator(mode="after")
    def one_atom_source(self):
        if self.atoms is not None and self.atom_rule is not None:
            raise ValueError("give either atoms or atom_rule, not both")
        return self

    def to_prior(self, p: int, kernel: KernelSpec) -> PriorSpec:
        mu = np.zeros(p) if self.mu_beta is None else np.asarray(self.mu_beta, dtype=float)
        if isinstance(self.sigma_beta, (int, float)):
            cov = float(self.sigma_beta) * np.eye(mu.size)
        else:
            cov = np.asarray(self.sigma_beta, dtype=float)
        n_theta = len(kernel.theta)
        if self.atoms is not None:
            atoms = tuple(tuple(component) for component in self.atoms)
        elif self.atom_rule is not None:
            atoms = tuple(self.atom_rule.values() for _ in range(n_theta))
        else:
            atoms = tuple((value,) for value in kernel.theta)
        if len(atoms) != n_theta:
            raise ConfigurationError(f"kernel has {n_theta} range parameters but {len(atoms)} atom lists were given")
        return PriorSpec(mu, cov, InverseGamma(self.a1, self.b1), InverseGamma(self.a2, self.b2), atoms)


class ApproxConfig(BaseModel):
    method: CovForm = CovForm.EXACT
    eps: Optional[float] = None
    r: Optional[int] = None
    gamma: Optional[float] = None
    taper: TaperKind = TaperKind.WENDLAND2

    class Config:
        extra = "forbid"

    @model_validator(mode="after")
    def method_fields(self):
        if self.method in (CovForm.LP, CovForm.MLP) and (self.eps is None or self.r is None):
            raise ValueError(f"method {self.method.value} needs eps and r")
        if self.method in (CovForm.CT, CovForm.MLP) and self.gamma is None:
            raise ValueError(f"method {self.method.value} needs gamma")
        return self

    def to_settings(self) -> ApproxSettings:
        return ApproxSettings(self.method, self.eps, self.r, self.gamma, self.taper)


class InitialConfig(BaseModel):
    beta: Optional[List[float]] = None
    tau2: Optional[float] = None
    sigma2: Optional[float] = None
    theta: Optional[List[float]] = None

    class Config:
        extra = "forbid"


class MCMCConfig(BaseModel):
    iterations: int = 5000
    burnin: int = 500
    proposal_sd: Tuple[float, float] = (0.1, 0.1)
    adapt: bool = True
    update_beta: bool = True
    update_tau2: bool = True
    update_sigma2: bool = True
    update_theta: bool = True
    chains: int = 1
    initial: InitialConfig = InitialConfig()

    class Config:
        extra = "forbid"

    def to_sampler(self, approx: ApproxSettings, adapt_interval: int, target: float) -> SamplerConfig:
        return SamplerConfig(
            iterations=self.iterations,
            burnin=self.burnin,
            proposal_sd=tuple(self.proposal_sd),
            target_acceptance=target,
            adapt=self.adapt,
            adapt_interval=adapt_interval,
            update_beta=self.update_beta,
            update_tau2=self.update_tau2,
            update_sigma2=self.update_sigma2,
            update_theta=self.update_theta,
            approx=approx,
        )


class GridConfig(BaseModel):
    bounds: Bounds
    resolution: int = 31
    covariates: List[float] = []  # held fixed over the grid, intercept excluded
    covariate_file: Optional[str] = None  # x, y, x1..xp per grid point

    class Config:
        extra = "forbid"

    @field_validator("resolution")
    @classmethod
    def at_least_two(cls, value):
        if value < 2:
            raise ValueError("grid resolution must be >= 2")
        return value

    @field_validator("covariate_file")
    @classmethod
    def file_exists(cls, value):
        if value is not None and not os.path.isfile(value):
            raise ValueError(f"file not found: {value}")
        return value

    @model_validator(mode="after")
    def one_covariate_source(self):
        if self.covariates and self.covariate_file is not None:
            raise ValueError("give either covariates or covariate_file, not both")
        return self


class PredictConfig(BaseModel):
    max_draws: Optional[int] = None
    grid: Optional[GridConfig] = None

    class Config:
        extra = "forbid"


class ApproxErrorConfig(BaseModel):
    tau2: float = 1.0
    methods: List[ApproxConfig] = []
    include_optimal: bool = False

    class Config:
        extra = "forbid"


class OutputConfig(BaseModel):
    dir: str = "out"
    formats: List[Literal["csv", "xlsx", "pdf"]] = ["csv"]

    class Config:
        extra = "forbid"


class ExperimentConfig(BaseModel):
    seed: Optional[int] = None
    threads: Optional[int] = None
    data: Optional[DataConfig] = None
    simulation: Optional[SimulationConfig] = None
    kernel: KernelConfig = KernelConfig()
    prior: PriorConfig = PriorConfig()
    approx: ApproxConfig = ApproxConfig()
    mcmc: MCMCConfig = MCMCConfig()
    predict: PredictConfig = PredictConfig()
    approx_error: ApproxErrorConfig = ApproxErrorConfig()
    output: OutputConfig = OutputConfig()

    class Config:
        extra = "forbid"

    @classmethod
    def from_yaml(cls, path: str) -> "ExperimentConfig":
        with open(path) as handle:
            document = yaml.safe_load(handle) or {}
        return cls.model_validate(document)

    def echo(self) -> dict:
        """Resolved configuration as plain data for metadata sidecars"""
        return self.model_dump(mode="json")


# Report rows
class ApproxErrorRow(BaseModel):
    method: str
    eps: Optional[float] = None
    gamma: Optional[float] = None
    rank: int
    sparsity: float
    frobenius: float
    kl: float
    kl_bound: Optional[float] = None
    seconds: float


class PredictionRow(BaseModel):
    method: str
    mspe: Optional[float] = None
    dic: float
    p_d: float
    seconds: float


class SummaryRow(BaseModel):
    parameter: str
    mean: float
    sd: float
    q025: float
    q975: float
    inefficiency: Optional[float] = None
    acceptance: Optional[float] = None

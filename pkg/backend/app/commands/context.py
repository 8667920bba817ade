"""
Shared plumbing for the subcommands: data, model and output resolution
"""
import logging
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np
import yaml

from ..config import settings
from ..exceptions import UsageError
from ..model import CovarianceModel
from ..models import KernelSpec, PriorSpec, RegressionData
from ..schemas import ExperimentConfig
from ..simdata import Simulation, read_dataset, simulation_one, simulation_two

logger = logging.getLogger(__name__)

CHAIN_FILE = "chain.csv"


@dataclass
class Inputs:
    train: RegressionData
    test: Optional[RegressionData]
    kernel: KernelSpec
    prior: PriorSpec
    intercept: bool
    simulation: Optional[Simulation] = None


def simulate(config: ExperimentConfig) -> Simulation:
    block = config.simulation
    if block is None:
        raise UsageError("config has no simulation block")
    if block.design == "simulation_one":
        kwargs = {k: v for k, v in (("n", block.n), ("n_train", block.n_train)) if v is not None}
        return simulation_one(block.correlation, seed=config.seed, **kwargs)
    kwargs = {}
    if block.n is not None:
        kwargs["n_per_region"] = block.n // 2
    if block.n_train is not None:
        kwargs["n_train_per_region"] = block.n_train // 2
    return simulation_two(seed=config.seed, **kwargs)


def load_inputs(config: ExperimentConfig) -> Inputs:
    """
    CSV data use the kernel and prior blocks of the config; a simulation
    block brings its own kernel and prior.
    """
    if config.data is not None:
        train = read_dataset(config.data.train, config.data.intercept)
        test = read_dataset(config.data.test, config.data.intercept) if config.data.test else None
        kernel = config.kernel.to_spec()
        prior = config.prior.to_prior(train.p, kernel)
        return Inputs(train, test, kernel, prior, config.data.intercept)
    if config.simulation is not None:
        sim = simulate(config)
        return Inputs(sim.train, sim.test, sim.kernel, sim.prior, True, sim)
    raise UsageError("config needs a data block or a simulation block")


def threads(config: ExperimentConfig) -> int:
    return config.threads or settings.THREADS


def build_model(config: ExperimentConfig, inputs: Inputs) -> CovarianceModel:
    return CovarianceModel(
        inputs.train.locations,
        inputs.kernel,
        config.approx.to_settings(),
        atoms=inputs.prior.atoms,
        seed=config.seed,
        threads=threads(config),
    )


def output_dir(config: ExperimentConfig) -> str:
    os.makedirs(config.output.dir, exist_ok=True)
    return config.output.dir


def chain_path(config: ExperimentConfig, override: Optional[str] = None) -> str:
    return override or os.path.join(config.output.dir, CHAIN_FILE)


def write_metadata(path: str, config: ExperimentConfig, **extra) -> str:
    """YAML sidecar echoing the resolved configuration"""
    document = {"seed": config.seed, **{k: _plain(v) for k, v in extra.items()}, "config": config.echo()}
    with open(path, "w") as handle:
        yaml.safe_dump(document, handle, sort_keys=False)
    return path


def _plain(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value

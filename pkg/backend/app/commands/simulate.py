"""
simulate: write the simulated dataset and its train/test split
"""
import logging
import os

from ..schemas import ExperimentConfig
from ..simdata import write_dataset
from .context import output_dir, simulate, write_metadata

logger = logging.getLogger(__name__)


def run(config: ExperimentConfig, chain: str = None) -> int:
    sim = simulate(config)
    out = output_dir(config)
    write_dataset(os.path.join(out, "dataset.csv"), sim.data)
    write_dataset(os.path.join(out, "train.csv"), sim.train)
    write_dataset(os.path.join(out, "test.csv"), sim.test)
    write_metadata(
        os.path.join(out, "dataset.yaml"),
        config,
        n=sim.data.n,
        n_train=sim.train.n,
        truth={
            "beta": sim.truth.beta,
            "tau2": sim.truth.tau2,
            "sigma2": sim.truth.sigma2,
            "theta": list(sim.truth.theta),
        },
    )
    logger.info("simulated %d points (%d train, %d test) into %s", sim.data.n, sim.train.n, sim.test.n, out)
    return 0

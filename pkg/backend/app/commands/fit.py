"""
fit: run the sampler and write the chain, its metadata and a posterior summary
"""
import logging
import os

import numpy as np

from ..config import settings
from ..export import SUMMARY_COLUMNS, write_report
from ..mcmc import initial_params, posterior_summary, run_chains, save_chain
from ..schemas import ExperimentConfig
from .context import build_model, chain_path, load_inputs, output_dir, threads

logger = logging.getLogger(__name__)


def chain_seeds(seed, count: int):
    if count == 1:
        return [seed]
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(count)]


def run(config: ExperimentConfig, chain: str = None) -> int:
    inputs = load_inputs(config)
    model = build_model(config, inputs)
    sampler = config.mcmc.to_sampler(config.approx.to_settings(), settings.ADAPT_INTERVAL, settings.TARGET_ACCEPTANCE)

    init = config.mcmc.initial
    beta = init.beta
    theta = init.theta
    if inputs.simulation is not None:
        # frozen stages of a simulation study sit at the true values
        truth = inputs.simulation.truth
        if beta is None and not sampler.update_beta:
            beta = truth.beta
        if theta is None and not sampler.update_theta:
            theta = truth.theta
    initial = initial_params(
        inputs.train, inputs.prior, inputs.kernel.theta,
        beta=None if beta is None else np.asarray(beta, dtype=float),
        tau2=init.tau2,
        sigma2=init.sigma2,
        theta=None if theta is None else tuple(theta),
    )

    output_dir(config)
    seeds = chain_seeds(config.seed, config.mcmc.chains)
    chains = run_chains(inputs.train, inputs.prior, sampler, model, seeds, threads(config), initial)

    base = chain_path(config, chain)
    for k, (seed, result) in enumerate(chains.items()):
        path = base if k == 0 else os.path.splitext(base)[0] + f"_{k + 1}.csv"
        save_chain(result, path, config.echo())
        write_report(
            posterior_summary(result), SUMMARY_COLUMNS, f"Posterior summary ({config.approx.method.value})",
            os.path.splitext(path)[0] + "_summary", config.output.formats,
        )
        logger.info("chain %d (seed %s): %d draws -> %s", k + 1, seed, len(result), path)
    return 0

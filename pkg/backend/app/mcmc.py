"""
Metropolis-within-Gibbs sampler for (beta, tau2, sigma2, theta)

Stage order per sweep: beta (Gibbs), tau2 (random-walk MH), sigma2
(random-walk MH), then each range parameter in turn (Gibbs over its atoms).
"""
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.linalg as la
import yaml
from scipy.special import logsumexp

from .config import settings
from .exceptions import ConfigurationError, SamplerError, SpatialModelError, UsageError
from .model import CovarianceModel, log_likelihood
from .models import Chain, Params, PriorSpec, RegressionData, SamplerConfig, StructuredCov, chain_columns
from .rng import SeedLike, make_rng
from .schemas import SummaryRow
from .solver import cholesky_lower
from . import solver

logger = logging.getLogger(__name__)


class MHResult(NamedTuple):
    value: float
    accepted: bool
    cov: StructuredCov


# Initial values
def initial_params(data: RegressionData, prior: PriorSpec, kernel_theta: Sequence[float], **overrides) -> Params:
    """
    beta from least squares, tau2 and sigma2 splitting the residual variance
    evenly, each range parameter at its median atom. Keyword overrides win.
    """
    beta, *_ = np.linalg.lstsq(data.X, data.Y, rcond=None)
    resid = data.Y - data.X @ beta
    half = 0.5 * max(float(np.var(resid)), np.finfo(float).tiny)
    theta = []
    for component, value in enumerate(kernel_theta):
        if component < len(prior.atoms):
            atoms = sorted(prior.atoms[component])
            theta.append(atoms[(len(atoms) - 1) // 2])
        else:
            theta.append(float(value))
    values = dict(beta=beta, tau2=half, sigma2=half, theta=tuple(theta))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return Params(values["beta"], float(values["tau2"]), float(values["sigma2"]), tuple(values["theta"]))


# Stage 1: beta
def beta_conditional(data: RegressionData, cov: StructuredCov, prior: PriorSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Mean and lower Cholesky factor of the precision of beta | tau2, sigma2, theta, Y"""
    solved = solver.solve(cov, np.column_stack([data.X, data.Y]))
    a_inv_x, a_inv_y = solved[:, :data.p], solved[:, data.p]
    prior_precision = prior.beta_precision
    precision = prior_precision + data.X.T @ a_inv_x
    precision = 0.5 * (precision + precision.T)
    chol = cholesky_lower(precision, "posterior precision of beta")
    rhs = prior_precision @ prior.mu_beta + data.X.T @ a_inv_y
    mean = la.cho_solve((chol, True), rhs, check_finite=False)
    return mean, chol


def gibbs_beta(data: RegressionData, params: Params, cov: StructuredCov, prior: PriorSpec,
               rng: np.random.Generator) -> np.ndarray:
    mean, chol = beta_conditional(data, cov, prior)
    z = rng.standard_normal(data.p)
    return mean + la.solve_triangular(chol, z, lower=True, trans="T", check_finite=False)


# Stages 2 and 3: tau2 and sigma2
def _probability(log_ratio: float) -> float:
    if np.isnan(log_ratio):
        return 0.0
    return float(np.exp(min(0.0, log_ratio)))


def tau2_log_ratio(data: RegressionData, params: Params, candidate: float, cov: StructuredCov,
                   prior: PriorSpec) -> Tuple[float, Optional[StructuredCov]]:
    """log acceptance ratio of tau2 -> candidate and the candidate covariance"""
    if not candidate > 0:
        return -np.inf, None
    proposed = cov.with_nugget(candidate)
    new = log_likelihood(data, params, proposed) + prior.tau2.log_density(candidate)
    old = log_likelihood(data, params, cov) + prior.tau2.log_density(params.tau2)
    return new - old, proposed


def sigma2_log_ratio(data: RegressionData, params: Params, candidate: float, cov: StructuredCov,
                     prior: PriorSpec) -> Tuple[float, Optional[StructuredCov]]:
    """As tau2_log_ratio; the candidate covariance rescales U, M and the core by candidate / sigma2"""
    if not candidate > 0:
        return -np.inf, None
    proposed = cov.rescaled(candidate / params.sigma2)
    new = log_likelihood(data, params, proposed) + prior.sigma2.log_density(candidate)
    old = log_likelihood(data, params, cov) + prior.sigma2.log_density(params.sigma2)
    return new - old, proposed


def mh_tau2_probability(data, params, candidate, cov, prior) -> float:
    return _probability(tau2_log_ratio(data, params, candidate, cov, prior)[0])


def mh_sigma2_probability(data, params, candidate, cov, prior) -> float:
    return _probability(sigma2_log_ratio(data, params, candidate, cov, prior)[0])


def _mh_step(ratio, current: float, data, params, cov, prior, proposal_sd: float, rng) -> MHResult:
    if proposal_sd == 0:
        return MHResult(current, False, cov)
    candidate = current + proposal_sd * rng.standard_normal()
    # one uniform per step whatever the candidate, so streams stay aligned
    u = rng.random()
    if not candidate > 0:
        return MHResult(current, False, cov)
    log_ratio, proposed = ratio(data, params, candidate, cov, prior)
    if np.log(u) < log_ratio:
        return MHResult(float(candidate), True, proposed)
    return MHResult(current, False, cov)


def mh_tau2(data: RegressionData, params: Params, cov: StructuredCov, prior: PriorSpec,
            proposal_sd: float, rng: np.random.Generator) -> MHResult:
    return _mh_step(tau2_log_ratio, params.tau2, data, params, cov, prior, proposal_sd, rng)


def mh_sigma2(data: RegressionData, params: Params, cov: StructuredCov, prior: PriorSpec,
              proposal_sd: float, rng: np.random.Generator) -> MHResult:
    return _mh_step(sigma2_log_ratio, params.sigma2, data, params, cov, prior, proposal_sd, rng)


# Stage 4: discrete range parameters
def lambda_log_weights(data: RegressionData, params: Params, component: int, atoms: Sequence[float],
                       model: CovarianceModel) -> Tuple[np.ndarray, List[StructuredCov]]:
    """Unnormalized log conditional posterior at every atom of one range parameter"""
    weights = np.empty(len(atoms))
    covs = []
    for i, atom in enumerate(atoms):
        theta = list(params.theta)
        theta[component] = atom
        cov = model.build(params.sigma2, params.tau2, theta)
        try:
            weights[i] = log_likelihood(data, params, cov)
        except SpatialModelError as exc:
            logger.debug("atom %g of range %d unusable: %s", atom, component, exc)
            weights[i] = -np.inf
        covs.append(cov)
    return weights, covs


def lambda_probabilities(data, params, component, atoms, model) -> np.ndarray:
    weights, _ = lambda_log_weights(data, params, component, atoms, model)
    if not np.any(np.isfinite(weights)):
        raise SamplerError(f"every atom of range parameter {component + 1} has zero posterior mass")
    return np.exp(weights - logsumexp(weights))


def gibbs_lambda_discrete(data: RegressionData, params: Params, component: int, prior: PriorSpec,
                          model: CovarianceModel, rng: np.random.Generator) -> Tuple[float, StructuredCov]:
    atoms = prior.atoms[component]
    weights, covs = lambda_log_weights(data, params, component, atoms, model)
    if not np.any(np.isfinite(weights)):
        raise SamplerError(f"every atom of range parameter {component + 1} has zero posterior mass")
    probs = np.exp(weights - logsumexp(weights))
    index = int(rng.choice(len(atoms), p=probs / probs.sum()))
    return float(atoms[index]), covs[index]


# Driver
def run_chain(
    data: RegressionData,
    prior: PriorSpec,
    config: SamplerConfig,
    model: CovarianceModel,
    seed: SeedLike = None,
    initial: Optional[Params] = None,
) -> Chain:
    """B + (L - B) sweeps; the first B are discarded and adaptation only happens inside them"""
    rng = make_rng(seed)
    n_theta = len(model.kernel.theta)
    if config.update_theta and len(prior.atoms) < n_theta:
        raise ConfigurationError("sampling the range parameters needs atoms for each of them")
    params = initial or initial_params(data, prior, model.kernel.theta)
    if prior.p != data.p:
        raise UsageError(f"prior is for {prior.p} coefficients but X has {data.p} columns")
    cov = model.build_params(params)

    columns = chain_columns(data.p, n_theta)
    kept = config.iterations - config.burnin
    draws = np.empty((kept, len(columns)))
    sds = [float(s) for s in config.proposal_sd]
    # a zero proposal sd freezes the stage
    sampled = (config.update_tau2 and sds[0] > 0, config.update_sigma2 and sds[1] > 0)
    window = [0, 0]
    accepted = [0, 0]
    started = time.perf_counter()

    for sweep in range(config.iterations):
        try:
            if config.update_beta:
                params = params.replace(beta=gibbs_beta(data, params, cov, prior, rng))
            if config.update_tau2:
                step = mh_tau2(data, params, cov, prior, sds[0], rng)
                params, cov = params.replace(tau2=step.value), step.cov
                window[0] += step.accepted
                accepted[0] += step.accepted and sweep >= config.burnin
            if config.update_sigma2:
                step = mh_sigma2(data, params, cov, prior, sds[1], rng)
                params, cov = params.replace(sigma2=step.value), step.cov
                window[1] += step.accepted
                accepted[1] += step.accepted and sweep >= config.burnin
            if config.update_theta:
                for component in range(n_theta):
                    value, cov = gibbs_lambda_discrete(data, params, component, prior, model, rng)
                    theta = list(params.theta)
                    theta[component] = value
                    params = params.replace(theta=tuple(theta))
        except SamplerError as exc:
            raise SamplerError(str(exc), sweep=sweep) from exc
        except SpatialModelError as exc:
            raise SamplerError(f"{type(exc).__name__}: {exc}", sweep=sweep) from exc

        if config.adapt and sweep < config.burnin and (sweep + 1) % config.adapt_interval == 0:
            for i in range(2):
                if sds[i] > 0:
                    rate = window[i] / config.adapt_interval
                    sds[i] *= float(np.exp(rate - config.target_acceptance))
            logger.debug("sweep %d: proposal sds %s", sweep + 1, sds)
            window = [0, 0]
        if sweep >= config.burnin:
            draws[sweep - config.burnin] = params.as_vector()

    elapsed = time.perf_counter() - started
    rates = {
        "tau2": accepted[0] / kept if sampled[0] and kept else float("nan"),
        "sigma2": accepted[1] / kept if sampled[1] and kept else float("nan"),
    }
    logger.info("chain finished: %d sweeps in %.2fs, acceptance tau2 %.3f sigma2 %.3f",
                config.iterations, elapsed, rates["tau2"], rates["sigma2"])
    timings = dict(model.timings)
    timings["sweeps"] = elapsed
    return Chain(
        draws=draws,
        columns=columns,
        acceptance_rates=rates,
        proposal_sds=(sds[0], sds[1]),
        seed=seed if isinstance(seed, (int, np.integer)) else None,
        burnin=config.burnin,
        p=data.p,
        projector_ranks=model.projector_ranks,
        timings=timings,
    )


def run_chains(data, prior, config, model, seeds: Sequence[int], threads: Optional[int] = None,
               initial: Optional[Params] = None) -> Dict[int, Chain]:
    """Independent chains over shared data and bases, one per seed"""
    with ThreadPoolExecutor(max_workers=threads or settings.THREADS) as pool:
        futures = {seed: pool.submit(run_chain, data, prior, config, model, seed, initial) for seed in seeds}
        return {seed: future.result() for seed, future in futures.items()}


# Diagnostics
def inefficiency_factor(series) -> float:
    """
    1 + 2 sum of autocorrelations, truncated with the initial positive
    sequence: pairs rho(2k) + rho(2k+1) are summed while positive and
    made monotone. NaN for a constant series.
    """
    x = np.asarray(series, dtype=float).ravel()
    n = x.size
    if n < 10:
        raise UsageError(f"inefficiency factor needs at least 10 draws, got {n}")
    x = x - x.mean()
    if not np.any(x):
        return float("nan")
    spectrum = np.fft.rfft(x, n=2 * n)
    acov = np.fft.irfft(spectrum * np.conjugate(spectrum), n=2 * n)[:n] / n
    rho = acov / acov[0]
    pairs = rho[: n - n % 2].reshape(-1, 2).sum(axis=1)
    positive = np.flatnonzero(pairs <= 0)
    pairs = pairs[: positive[0]] if positive.size else pairs
    pairs = np.minimum.accumulate(pairs)
    return float(max(0.0, -1.0 + 2.0 * pairs.sum()))


def posterior_summary(chain: Chain) -> List[SummaryRow]:
    rows = []
    for j, name in enumerate(chain.columns):
        values = chain.draws[:, j]
        ineff = inefficiency_factor(values) if values.size >= 10 else float("nan")
        rate = chain.acceptance_rates.get(name, float("nan"))
        rows.append(SummaryRow(
            parameter=name,
            mean=float(values.mean()),
            sd=float(values.std(ddof=1)) if values.size > 1 else 0.0,
            q025=float(np.quantile(values, 0.025)),
            q975=float(np.quantile(values, 0.975)),
            inefficiency=None if np.isnan(ineff) else ineff,
            acceptance=None if np.isnan(rate) else rate,
        ))
    return rows


# Persistence
def metadata_path(csv_path: str) -> str:
    return os.path.splitext(csv_path)[0] + ".yaml"


def _plain(value):
    if isinstance(value, float) and np.isnan(value):
        return None
    return value


def save_chain(chain: Chain, path: str, config_echo: Optional[dict] = None) -> str:
    """Draws as CSV plus a YAML sidecar with the run metadata; returns the sidecar path"""
    chain.to_frame().to_csv(path, index=False)
    meta = {
        "seed": chain.seed,
        "burnin": chain.burnin,
        "p": chain.p,
        "draws": len(chain),
        "columns": list(chain.columns),
        "acceptance_rates": {k: _plain(float(v)) for k, v in chain.acceptance_rates.items()},
        "proposal_sds": [float(s) for s in chain.proposal_sds],
        "timings": {k: float(v) for k, v in chain.timings.items()},
        "projector_ranks": [
            {"theta": [float(t) for t in theta], "rank": int(rank)}
            for theta, rank in sorted(chain.projector_ranks.items())
        ],
        "summary": [row.model_dump() for row in posterior_summary(chain)] if len(chain) else [],
        "config": config_echo,
    }
    sidecar = metadata_path(path)
    with open(sidecar, "w") as handle:
        yaml.safe_dump(meta, handle, sort_keys=False)
    return sidecar


def load_chain(path: str) -> Tuple[Chain, dict]:
    frame = pd.read_csv(path)
    with open(metadata_path(path)) as handle:
        meta = yaml.safe_load(handle) or {}
    rates = {k: (float("nan") if v is None else float(v)) for k, v in (meta.get("acceptance_rates") or {}).items()}
    ranks = {tuple(item["theta"]): int(item["rank"]) for item in meta.get("projector_ranks") or []}
    chain = Chain(
        draws=frame.to_numpy(dtype=float),
        columns=list(frame.columns),
        acceptance_rates=rates,
        proposal_sds=tuple(meta.get("proposal_sds") or (float("nan"), float("nan"))),
        seed=meta.get("seed"),
        burnin=int(meta.get("burnin", 0)),
        p=int(meta.get("p", len(frame.columns) - 3)),
        projector_ranks=ranks,
        timings=meta.get("timings") or {},
    )
    return chain, meta

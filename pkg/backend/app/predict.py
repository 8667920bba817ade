"""
Posterior predictive sampling, MSPE, DIC and gridded predictive surfaces
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from . import solver
from .config import settings
from .exceptions import NumericalError, UsageError
from .model import CovarianceModel, log_likelihood
from .models import Chain, Params, PriorSpec, RegressionData, StructuredCov
from .rng import child_seed, make_rng

logger = logging.getLogger(__name__)


@dataclass
class PredictiveSummary:
    points: np.ndarray
    mean: np.ndarray
    q05: np.ndarray
    q95: np.ndarray
    draws: int

    def to_frame(self) -> pd.DataFrame:
        names = ["x", "y"] if self.points.shape[1] == 2 else [f"s{i + 1}" for i in range(self.points.shape[1])]
        frame = pd.DataFrame(self.points, columns=names)
        frame["mean"] = self.mean
        frame["q05"] = self.q05
        frame["q95"] = self.q95
        return frame


def _design(X0: np.ndarray, n0: int, p: int) -> np.ndarray:
    X0 = np.asarray(X0, dtype=float)
    if X0.ndim == 1:
        X0 = X0[None, :] if n0 == 1 else X0[:, None]
    if X0.shape != (n0, p):
        raise UsageError(f"prediction covariates have shape {X0.shape}, expected {(n0, p)}")
    return X0


def predictive_moments(points0: np.ndarray, X0: np.ndarray, params: Params, data: RegressionData,
                       cov: StructuredCov, model: CovarianceModel) -> Tuple[np.ndarray, np.ndarray]:
    """
    Conditional means x0'beta + c' A^-1 (Y - X beta) and variances
    sigma2 + tau2 - c' A^-1 c, one per row of points0.
    """
    points0 = np.atleast_2d(np.asarray(points0, dtype=float))
    X0 = _design(X0, points0.shape[0], data.p)
    c = model.cross_covariance(points0, params.sigma2, params.theta)
    resid = data.Y - data.X @ params.beta
    mean = X0 @ params.beta + c @ solver.solve(cov, resid)
    total = params.sigma2 + params.tau2
    var = total - np.einsum("ij,ji->i", c, solver.solve(cov, c.T))
    floor = -settings.NEGATIVE_VARIANCE_TOL * total
    if np.any(var < floor):
        worst = int(np.argmin(var))
        raise NumericalError(f"predictive variance {var[worst]:.3e} at point {worst} is below {floor:.3e}")
    return mean, np.maximum(var, 0.0)


def predictive_draw(s0: np.ndarray, x0: np.ndarray, params: Params, data: RegressionData,
                    cov: StructuredCov, model: CovarianceModel, rng: np.random.Generator) -> float:
    mean, var = predictive_moments(np.atleast_2d(s0), np.atleast_2d(x0), params, data, cov, model)
    return float(mean[0] + np.sqrt(var[0]) * rng.standard_normal())


def predictive_samples(points0: np.ndarray, X0: np.ndarray, chain: Chain, data: RegressionData,
                       model: CovarianceModel, seed: Optional[int] = None, max_draws: Optional[int] = None,
                       threads: Optional[int] = None, means_only: bool = False) -> np.ndarray:
    """
    One row per (thinned) posterior draw, one column per point, by composition.
    With means_only the conditional means are returned instead of samples.
    """
    if len(chain) == 0:
        raise UsageError("chain has no draws")
    points0 = np.atleast_2d(np.asarray(points0, dtype=float))
    X0 = _design(X0, points0.shape[0], data.p)
    index = chain.thinned(max_draws)

    def one(l: int) -> np.ndarray:
        params = chain.params(int(l))
        cov = model.build_params(params)
        mean, var = predictive_moments(points0, X0, params, data, cov, model)
        if means_only:
            return mean
        rng = make_rng(child_seed(seed, int(l)))
        return mean + np.sqrt(var) * rng.standard_normal(mean.size)

    with ThreadPoolExecutor(max_workers=threads or settings.THREADS) as pool:
        rows = list(pool.map(one, index))
    return np.vstack(rows)


def summarize(points0: np.ndarray, samples: np.ndarray) -> PredictiveSummary:
    q05, q95 = np.quantile(samples, [0.05, 0.95], axis=0)
    return PredictiveSummary(np.atleast_2d(points0), samples.mean(axis=0), q05, q95, samples.shape[0])


def mspe(test: RegressionData, chain: Chain, train: RegressionData, model: CovarianceModel,
         seed: Optional[int] = None, max_draws: Optional[int] = None, threads: Optional[int] = None,
         means_only: bool = False) -> float:
    """(1/M) sum_m (Y(s0m) - mean over draws of Y^(l)(s0m))^2"""
    samples = predictive_samples(test.locations.coords, test.X, chain, train, model, seed, max_draws,
                                 threads, means_only)
    predicted = samples.mean(axis=0)
    return float(np.mean((test.Y - predicted) ** 2))


def posterior_mean_params(chain: Chain, prior: PriorSpec) -> Params:
    """Posterior means with each discrete range parameter snapped to its nearest atom"""
    means = chain.draws.mean(axis=0)
    p = chain.p
    theta = []
    for component, value in enumerate(means[p + 2:]):
        if component < len(prior.atoms) and prior.atoms[component]:
            value = prior.nearest_atom(component, value)
        theta.append(float(value))
    return Params(means[:p], float(means[p]), float(means[p + 1]), tuple(theta))


def deviance(data: RegressionData, params: Params, model: CovarianceModel) -> float:
    return -2.0 * log_likelihood(data, params, model.build_params(params))


def dic(chain: Chain, data: RegressionData, prior: PriorSpec, model: CovarianceModel,
        max_draws: Optional[int] = None, threads: Optional[int] = None) -> Tuple[float, float]:
    """(DIC, p_D) with DIC = mean deviance + p_D and p_D = mean deviance - D(posterior mean)"""
    if len(chain) == 0:
        raise UsageError("chain has no draws")
    index = chain.thinned(max_draws)
    with ThreadPoolExecutor(max_workers=threads or settings.THREADS) as pool:
        values = list(pool.map(lambda l: deviance(data, chain.params(int(l)), model), index))
    d_bar = float(np.mean(values))
    p_d = d_bar - deviance(data, posterior_mean_params(chain, prior), model)
    return d_bar + p_d, p_d


def grid_points(bounds: Sequence[float], resolution: int) -> np.ndarray:
    """resolution x resolution points over (xmin, xmax, ymin, ymax), x varying fastest"""
    if resolution < 2:
        raise UsageError("grid resolution must be >= 2")
    xmin, xmax, ymin, ymax = bounds
    xs = np.linspace(xmin, xmax, resolution)
    ys = np.linspace(ymin, ymax, resolution)
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def grid_design(points: np.ndarray, covariates: Union[Sequence[float], np.ndarray] = (),
                intercept: bool = True) -> np.ndarray:
    """
    Design rows for grid points. A 1-d covariates value is held fixed over the
    grid; a 2-d array gives one row per point, in grid_points order.
    """
    n0 = points.shape[0]
    block = np.asarray(covariates, dtype=float)
    if block.ndim == 2:
        if block.shape[0] != n0:
            raise UsageError(f"grid covariates have {block.shape[0]} rows for {n0} grid points")
    else:
        block = np.tile(block.reshape(1, -1), (n0, 1))
    blocks = ([np.ones((n0, 1))] if intercept else []) + [block]
    return np.hstack(blocks)


def surface_grid(bounds: Sequence[float], resolution: int, chain: Chain, data: RegressionData,
                 model: CovarianceModel, covariates: Union[Sequence[float], np.ndarray] = (),
                 intercept: bool = True, seed: Optional[int] = None, max_draws: Optional[int] = None,
                 threads: Optional[int] = None) -> PredictiveSummary:
    points = grid_points(bounds, resolution)
    X0 = grid_design(points, covariates, intercept)
    max_draws = settings.SURFACE_MAX_DRAWS if max_draws is None else max_draws
    samples = predictive_samples(points, X0, chain, data, model, seed, max_draws, threads)
    logger.info("surface: %d points from %d draws", points.shape[0], samples.shape[0])
    return summarize(points, samples)

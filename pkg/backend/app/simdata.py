"""
Synthetic data: uniform designs, Gaussian process draws, splits and the two
simulation studies, plus the dataset CSV format (x, y, x1..xp, value)
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree

from .config import settings
from .covariance import gram_matrix
from .exceptions import UsageError
from .models import (
    InverseGamma, KernelFamily, KernelSpec, Locations, Params, PriorSpec, RegionRule, RegressionData,
)
from .rng import SeedLike, make_rng
from .solver import cholesky_lower

logger = logging.getLogger(__name__)


def sample_uniform_locations(n: int, bounds: Sequence[float], rng: SeedLike = None) -> Locations:
    """n iid uniform points in the box (lo1, hi1, lo2, hi2, ...)"""
    if n < 1:
        raise UsageError(f"need at least one location, got n={n}")
    box = np.asarray(bounds, dtype=float).reshape(-1, 2)
    if np.any(box[:, 1] <= box[:, 0]):
        raise UsageError(f"degenerate bounds {list(bounds)}")
    rng = make_rng(rng)
    return Locations(box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random((n, box.shape[0])))


def simulate_gp(locs: Locations, spec: KernelSpec, tau2: float, beta, X: np.ndarray, rng: SeedLike = None) -> np.ndarray:
    """Y = X beta + W + eps with W from a dense Cholesky factor of the Gram matrix"""
    if locs.n > settings.SIMULATION_MAX_N:
        raise UsageError(f"dense simulation is capped at n={settings.SIMULATION_MAX_N}, got {locs.n}")
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    if X.shape != (locs.n, beta.size):
        raise UsageError(f"X has shape {X.shape}, expected {(locs.n, beta.size)}")
    if tau2 < 0:
        raise UsageError(f"tau2 must be nonnegative, got {tau2}")
    rng = make_rng(rng)
    y = X @ beta
    if spec.sigma2 > 0:
        chol = cholesky_lower(gram_matrix(locs, spec), "kernel Gram matrix")
        y = y + chol @ rng.standard_normal(locs.n)
    if tau2 > 0:
        y = y + np.sqrt(tau2) * rng.standard_normal(locs.n)
    return y


def split_indices(n: int, n_train: int, rng: SeedLike = None,
                  labels: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Disjoint sorted (train, test) index arrays covering 0..n-1. With labels,
    n_train points are drawn from each stratum separately.
    """
    rng = make_rng(rng)
    if labels is None:
        groups = [np.arange(n)]
    else:
        labels = np.asarray(labels)
        groups = [np.flatnonzero(labels == value) for value in np.unique(labels)]
    train = []
    for group in groups:
        if not 1 <= n_train < group.size:
            raise UsageError(f"n_train={n_train} must be in [1, {group.size - 1}]")
        train.append(rng.permutation(group)[:n_train])
    train = np.sort(np.concatenate(train))
    test = np.setdiff1d(np.arange(n), train)
    return train, test


def train_test_split(data: RegressionData, n_train: int, rng: SeedLike = None,
                     region: Optional[RegionRule] = None) -> Tuple[RegressionData, RegressionData]:
    labels = None if region is None else region.labels(data.locations.coords)
    train, test = split_indices(data.n, n_train, rng, labels)
    return data.subset(train), data.subset(test)


@dataclass
class Simulation:
    """A simulated study: data, its split, the truth and the matching prior"""
    data: RegressionData
    train: RegressionData
    test: RegressionData
    kernel: KernelSpec
    truth: Params
    prior: PriorSpec
    bounds: Tuple[float, float, float, float]
    region: Optional[RegionRule] = None


STRONG_LAMBDA = np.sqrt(2.0) / 0.06
WEAK_LAMBDA = np.sqrt(2.0) / 0.3


def simulation_one(correlation: str = "strong", n: int = 2000, n_train: int = 1500, seed: SeedLike = None) -> Simulation:
    """
    Zero-mean exponential field on [0, 100]^2 with sigma2 = 0.5, tau2 = 1;
    only sigma2 and tau2 are unknown, so the prior carries the true range as its
    single atom.
    """
    if correlation not in ("strong", "weak"):
        raise UsageError(f"correlation must be 'strong' or 'weak', got {correlation!r}")
    rng = make_rng(seed)
    lam = STRONG_LAMBDA if correlation == "strong" else WEAK_LAMBDA
    bounds = (0.0, 100.0, 0.0, 100.0)
    kernel = KernelSpec(KernelFamily.MATERN, sigma2=0.5, nu=0.5, lam=lam)
    locs = sample_uniform_locations(n, bounds, rng)
    X = np.ones((n, 1))
    truth = Params(np.zeros(1), 1.0, 0.5, (lam,))
    y = simulate_gp(locs, kernel, truth.tau2, truth.beta, X, rng)
    data = RegressionData(X, y, locs)
    train, test = train_test_split(data, n_train, rng)
    prior = PriorSpec(np.zeros(1), np.eye(1), InverseGamma(1.0, 0.1), InverseGamma(0.8, 0.1), ((lam,),))
    logger.info("simulation one (%s): n=%d, train %d", correlation, n, train.n)
    return Simulation(data, train, test, kernel, truth, prior, bounds)


def simulation_two(n_per_region: int = 1000, n_train_per_region: int = 750, seed: SeedLike = None) -> Simulation:
    """
    Nonstationary exponential field on [0, 500]^2 split at x = 250, with
    ranges 1/0.08 (west) and 1/0.3 (east), intercept plus one N(0, 1)
    covariate, beta = (1, 2), sigma2 = 0.67, tau2 = 0.11.
    """
    rng = make_rng(seed)
    region = RegionRule(axis=0, threshold=250.0)
    bounds = (0.0, 500.0, 0.0, 500.0)
    west = sample_uniform_locations(n_per_region, (0.0, 250.0, 0.0, 500.0), rng).coords
    east = sample_uniform_locations(n_per_region, (np.nextafter(250.0, np.inf), 500.0, 0.0, 500.0), rng).coords
    locs = Locations(np.vstack([west, east]))
    kernel = KernelSpec(KernelFamily.NONSTATIONARY, sigma2=0.67, nu=0.5, lam=1 / 0.08, lam2=1 / 0.3, region=region)
    n = locs.n
    X = np.column_stack([np.ones(n), rng.standard_normal(n)])
    truth = Params(np.array([1.0, 2.0]), 0.11, 0.67, (1 / 0.08, 1 / 0.3))
    y = simulate_gp(locs, kernel, truth.tau2, truth.beta, X, rng)
    data = RegressionData(X, y, locs)
    train, test = train_test_split(data, n_train_per_region, rng, region)
    atoms = tuple(1.0 / (0.02 * i) for i in range(1, 26))
    prior = PriorSpec(
        np.array([0.959, 1.972]), 1000.0 * np.eye(2),
        InverseGamma(11.0, 1.261), InverseGamma(11.0, 6.305), (atoms, atoms),
    )
    logger.info("simulation two: n=%d, train %d", n, train.n)
    return Simulation(data, train, test, kernel, truth, prior, bounds, region)


# Dataset CSV
def read_dataset(path: str, intercept: bool = True) -> RegressionData:
    frame = pd.read_csv(path)
    missing = {"x", "y", "value"} - set(frame.columns)
    if missing:
        raise UsageError(f"{path}: missing columns {sorted(missing)}")
    covariates = [c for c in frame.columns if c not in ("x", "y", "value")]
    blocks = [np.ones((len(frame), 1))] if intercept else []
    if covariates:
        blocks.append(frame[covariates].to_numpy(dtype=float))
    if not blocks:
        raise UsageError(f"{path}: no covariates and no intercept")
    X = np.hstack(blocks)
    return RegressionData(X, frame["value"].to_numpy(dtype=float), Locations(frame[["x", "y"]].to_numpy(dtype=float)))


def dataset_frame(data: RegressionData, intercept: bool = True) -> pd.DataFrame:
    if data.locations.dim != 2:
        raise UsageError("the dataset format stores two coordinates")
    frame = pd.DataFrame({"x": data.locations.coords[:, 0], "y": data.locations.coords[:, 1]})
    X = data.X[:, 1:] if intercept else data.X
    for j in range(X.shape[1]):
        frame[f"x{j + 1}"] = X[:, j]
    frame["value"] = data.Y
    return frame


def write_dataset(path: str, data: RegressionData, intercept: bool = True) -> None:
    """Write x, y, covariates and value; the intercept column is not stored"""
    dataset_frame(data, intercept).to_csv(path, index=False)


def read_grid_covariates(path: str, points: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """
    Per-point covariates for a prediction grid from a CSV with columns x, y,
    x1..xp. Rows may come in any order; each grid point must have a row within
    tol of it. Returns the covariate block in the order of points.
    """
    frame = pd.read_csv(path)
    missing = {"x", "y"} - set(frame.columns)
    if missing:
        raise UsageError(f"{path}: missing columns {sorted(missing)}")
    covariates = [c for c in frame.columns if c not in ("x", "y")]
    if not covariates:
        raise UsageError(f"{path}: no covariate columns")
    distance, index = cKDTree(frame[["x", "y"]].to_numpy(dtype=float)).query(np.asarray(points, dtype=float))
    if np.any(distance > tol):
        worst = int(np.argmax(distance))
        raise UsageError(f"{path}: no covariate row for grid point {tuple(points[worst])}")
    return frame[covariates].to_numpy(dtype=float)[index]

"""Tests for simulated designs, splits and the dataset CSV format"""
import numpy as np
import pandas as pd
import pytest

from app.config import settings
from app.exceptions import UsageError
from app.models import KernelFamily, KernelSpec, Locations, RegionRule, RegressionData
from app.simdata import (
    read_dataset,
    read_grid_covariates,
    sample_uniform_locations,
    simulate_gp,
    simulation_one,
    split_indices,
    train_test_split,
    write_dataset,
)


class TestUniformLocations:

    def test_inside_bounds(self):
        locs = sample_uniform_locations(1, (0.0, 100.0, 0.0, 100.0), 3)
        assert locs.n == 1
        assert np.all((locs.coords >= 0.0) & (locs.coords <= 100.0))

    def test_reproducible(self):
        a = sample_uniform_locations(50, (0.0, 1.0, 0.0, 1.0), 12)
        b = sample_uniform_locations(50, (0.0, 1.0, 0.0, 1.0), 12)
        np.testing.assert_array_equal(a.coords, b.coords)

    def test_mean_close_to_center(self):
        locs = sample_uniform_locations(10000, (0.0, 100.0, 0.0, 100.0), 5)
        # 4 standard errors of 100 / sqrt(12 n)
        np.testing.assert_allclose(locs.coords.mean(axis=0), 50.0, atol=4 * 100.0 / np.sqrt(12 * 10000))

    def test_invalid(self):
        with pytest.raises(UsageError):
            sample_uniform_locations(0, (0.0, 1.0, 0.0, 1.0))
        with pytest.raises(UsageError, match="degenerate"):
            sample_uniform_locations(5, (1.0, 1.0, 0.0, 1.0))


class TestSimulateGP:

    def test_noise_free_mean(self, make_locations):
        locs = make_locations(20)
        X = np.column_stack([np.ones(20), np.arange(20.0)])
        kernel = KernelSpec(KernelFamily.MATERN, sigma2=0.0, nu=0.5, lam=1.0)
        y = simulate_gp(locs, kernel, 0.0, [1.0, 2.0], X, 0)
        np.testing.assert_allclose(y, X @ np.array([1.0, 2.0]))

    def test_marginal_variance(self):
        rng = np.random.default_rng(10)
        locs = sample_uniform_locations(2000, (0.0, 100.0, 0.0, 100.0), rng)
        kernel = KernelSpec(KernelFamily.MATERN, sigma2=0.5, nu=0.5, lam=np.sqrt(2.0) / 0.3)
        y = simulate_gp(locs, kernel, 1.0, [0.0], np.ones((2000, 1)), rng)
        assert 1.2 <= np.var(y) <= 1.8

    def test_size_cap(self, make_locations, exp_kernel, monkeypatch):
        monkeypatch.setattr(settings, "SIMULATION_MAX_N", 5)
        with pytest.raises(UsageError, match="capped"):
            simulate_gp(make_locations(6), exp_kernel, 1.0, [0.0], np.ones((6, 1)))

    def test_design_shape(self, make_locations, exp_kernel):
        with pytest.raises(UsageError, match="shape"):
            simulate_gp(make_locations(6), exp_kernel, 1.0, [0.0, 1.0], np.ones((6, 1)))


class TestSplits:

    def test_small_split(self):
        train, test = split_indices(4, 2, 0)
        assert train.size == 2 and test.size == 2
        assert set(train) | set(test) == {0, 1, 2, 3}
        assert not set(train) & set(test)

    def test_stratified(self):
        labels = np.repeat([1, 2], 1000)
        train, test = split_indices(2000, 750, 1, labels)
        assert train.size == 1500 and test.size == 500
        assert np.sum(labels[train] == 1) == 750
        np.testing.assert_array_equal(np.sort(np.concatenate([train, test])), np.arange(2000))

    def test_out_of_range(self):
        with pytest.raises(UsageError, match="n_train"):
            split_indices(10, 10, 0)
        with pytest.raises(UsageError, match="n_train"):
            split_indices(10, 0, 0)

    def test_split_keeps_rows_together(self, make_regression):
        data = make_regression(12)
        train, test = train_test_split(data, 8, 2)
        assert train.n == 8 and test.n == 4
        for part in (train, test):
            for i in range(part.n):
                j = int(np.flatnonzero((data.locations.coords == part.locations.coords[i]).all(axis=1))[0])
                assert part.Y[i] == data.Y[j]

    def test_region_split(self):
        coords = np.column_stack([np.r_[np.linspace(0, 200, 10), np.linspace(300, 500, 10)], np.zeros(20)])
        data = RegressionData(np.ones((20, 1)), np.arange(20.0), Locations(coords))
        train, _ = train_test_split(data, 6, 4, RegionRule(0, 250.0))
        labels = RegionRule(0, 250.0).labels(train.locations.coords)
        assert np.sum(labels == 1) == 6 and np.sum(labels == 2) == 6


class TestSimulationStudies:

    def test_simulation_one_shapes(self):
        sim = simulation_one("weak", n=200, n_train=150, seed=8)
        assert sim.train.n == 150 and sim.test.n == 50
        assert sim.truth.tau2 == 1.0 and sim.truth.sigma2 == 0.5
        assert sim.prior.atoms == ((sim.kernel.lam,),)
        assert np.all((sim.data.locations.coords >= 0) & (sim.data.locations.coords <= 100))

    def test_simulation_one_reproducible(self):
        a = simulation_one("strong", n=100, n_train=60, seed=3)
        b = simulation_one("strong", n=100, n_train=60, seed=3)
        np.testing.assert_array_equal(a.data.Y, b.data.Y)
        np.testing.assert_array_equal(a.train.locations.coords, b.train.locations.coords)

    def test_unknown_correlation(self):
        with pytest.raises(UsageError, match="strong"):
            simulation_one("medium", n=10, n_train=5)


class TestDatasetFiles:

    def test_write_then_read(self, make_regression, tmp_path):
        data = make_regression(15)
        path = str(tmp_path / "data.csv")
        write_dataset(path, data)
        with open(path) as handle:
            assert handle.readline().strip() == "x,y,x1,value"
        loaded = read_dataset(path)
        np.testing.assert_allclose(loaded.X, data.X)
        np.testing.assert_allclose(loaded.Y, data.Y)
        np.testing.assert_allclose(loaded.locations.coords, data.locations.coords)

    def test_missing_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x,y,z\n1,2,3\n")
        with pytest.raises(UsageError, match="missing columns"):
            read_dataset(str(path))

    def test_grid_covariates_any_row_order(self, tmp_path):
        points = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        frame = pd.DataFrame({"x": points[::-1, 0], "y": points[::-1, 1], "x1": [4.0, 3.0, 2.0, 1.0]})
        path = str(tmp_path / "grid.csv")
        frame.to_csv(path, index=False)
        np.testing.assert_array_equal(read_grid_covariates(path, points), [[1.0], [2.0], [3.0], [4.0]])

    def test_grid_covariates_missing_point(self, tmp_path):
        path = tmp_path / "grid.csv"
        path.write_text("x,y,x1\n0,0,1\n1,0,2\n")
        with pytest.raises(UsageError, match="no covariate row"):
            read_grid_covariates(str(path), np.array([[0.0, 0.0], [0.5, 0.5]]))

"""
predict: MSPE on the test set, DIC on the training set and an optional surface grid
"""
import logging
import os
import time

from ..export import PREDICTION_COLUMNS, write_report
from ..mcmc import load_chain
from ..predict import dic, grid_points, mspe, surface_grid
from ..schemas import ExperimentConfig, PredictionRow
from ..simdata import read_grid_covariates
from .context import build_model, chain_path, load_inputs, output_dir, threads, write_metadata

logger = logging.getLogger(__name__)


def run(config: ExperimentConfig, chain: str = None) -> int:
    inputs = load_inputs(config)
    path = chain_path(config, chain)
    draws, _ = load_chain(path)
    model = build_model(config, inputs)
    out = output_dir(config)
    workers = threads(config)
    timings = {}

    started = time.perf_counter()
    score = None
    if inputs.test is not None:
        score = mspe(inputs.test, draws, inputs.train, model, config.seed, config.predict.max_draws, workers)
    timings["mspe"] = time.perf_counter() - started

    started = time.perf_counter()
    dic_value, p_d = dic(draws, inputs.train, inputs.prior, model, config.predict.max_draws, workers)
    timings["dic"] = time.perf_counter() - started

    row = PredictionRow(
        method=config.approx.to_settings().label,
        mspe=score,
        dic=dic_value,
        p_d=p_d,
        seconds=sum(timings.values()),
    )
    write_report([row], PREDICTION_COLUMNS, "Prediction report", os.path.join(out, "prediction"), config.output.formats)

    grid = config.predict.grid
    if grid is not None:
        started = time.perf_counter()
        covariates = grid.covariates
        if grid.covariate_file is not None:
            covariates = read_grid_covariates(grid.covariate_file, grid_points(grid.bounds, grid.resolution))
        summary = surface_grid(grid.bounds, grid.resolution, draws, inputs.train, model, covariates,
                               inputs.intercept, config.seed, threads=workers)
        summary.to_frame().to_csv(os.path.join(out, "surface.csv"), index=False)
        timings["surface"] = time.perf_counter() - started

    write_metadata(os.path.join(out, "prediction.yaml"), config, chain=path, mspe=score, dic=dic_value,
                   p_d=p_d, timings=timings)
    logger.info("prediction: MSPE %s, DIC %.2f (p_D %.2f)", "n/a" if score is None else f"{score:.4f}", dic_value, p_d)
    return 0

"""
approx-error: rank, sparsity, Frobenius error and KL of each configured approximation
"""
import logging
import os

from ..export import APPROX_ERROR_COLUMNS, write_report
from ..lowrank import approximation_report
from ..schemas import ExperimentConfig
from .context import load_inputs, output_dir, write_metadata

logger = logging.getLogger(__name__)


def run(config: ExperimentConfig, chain: str = None) -> int:
    inputs = load_inputs(config)
    block = config.approx_error
    methods = [m.to_settings() for m in block.methods] or [config.approx.to_settings()]
    rows = approximation_report(
        inputs.train.locations,
        inputs.kernel,
        block.tau2,
        methods,
        seed=config.seed,
        include_optimal=block.include_optimal,
    )
    out = output_dir(config)
    write_report(rows, APPROX_ERROR_COLUMNS, "Approximation error", os.path.join(out, "approx_error"),
                 config.output.formats)
    write_metadata(os.path.join(out, "approx_error.yaml"), config, n=inputs.train.n,
                   rows=[r.model_dump() for r in rows])
    return 0

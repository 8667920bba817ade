"""
diagnostics: inefficiency factors and acceptance rates of a saved chain
"""
import logging
import math
import os

from ..export import SUMMARY_COLUMNS, write_report
from ..mcmc import load_chain, posterior_summary
from ..schemas import ExperimentConfig
from .context import chain_path, output_dir

logger = logging.getLogger(__name__)


def run(config: ExperimentConfig, chain: str = None) -> int:
    path = chain_path(config, chain)
    draws, meta = load_chain(path)
    rows = posterior_summary(draws)
    out = output_dir(config)
    write_report(rows, SUMMARY_COLUMNS, "Chain diagnostics", os.path.join(out, "diagnostics"), config.output.formats)
    for row in rows:
        print(f"{row.parameter:>10}  mean {row.mean:10.4f}  sd {row.sd:9.4f}  "
              f"IF {'n/a' if row.inefficiency is None else f'{row.inefficiency:8.2f}'}")
    for stage, rate in draws.acceptance_rates.items():
        print(f"{stage:>10}  " + ("not sampled" if math.isnan(rate) else f"acceptance {rate:.3f}"))
    logger.info("diagnostics for %s (seed %s, %d draws)", path, meta.get("seed"), len(draws))
    return 0

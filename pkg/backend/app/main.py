"""
MLP Spatial GP - Command-line entry point
=========================================

Bayesian spatial linear regression with Gaussian process errors, fitted by
Metropolis-within-Gibbs under the exact covariance or one of three
approximations: linear projection (LP), covariance tapering (CT) and the
modified linear projection (MLP) combining both.

Subcommands:
- simulate: write a simulated dataset and its train/test split
- fit: run the sampler, write the chain and its metadata
- predict: MSPE, DIC and an optional predictive surface
- approx-error: Frobenius / KL report across approximations
- diagnostics: inefficiency factors and acceptance rates of a saved chain

Usage: python -m app.main fit --config experiment.yaml --out results/
"""

import argparse
import logging
import sys
from typing import List, Optional

import yaml
from pydantic import ValidationError

from .config import settings
from .commands import (
    simulate_command,
    fit_command,
    predict_command,
    approx_error_command,
    diagnostics_command,
)
from .exceptions import SpatialModelError
from .schemas import ExperimentConfig

logger = logging.getLogger(__name__)

COMMANDS = {
    "simulate": simulate_command,
    "fit": fit_command,
    "predict": predict_command,
    "approx-error": approx_error_command,
    "diagnostics": diagnostics_command,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlpgp", description=settings.APP_NAME)
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="experiment YAML document")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--threads", type=int, default=None, help="worker threads for matrix builds and prediction")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--chain", default=None, help="chain CSV (default: <out>/chain.csv)")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    config = ExperimentConfig.from_yaml(args.config)
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.threads is not None:
        if args.threads < 1:
            raise SpatialModelError("--threads must be >= 1")
        updates["threads"] = args.threads
    if args.out is not None:
        updates["output"] = config.output.model_copy(update={"dir": args.out})
    return config.model_copy(update=updates)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        config = resolve_config(args)
        logger.info("%s: seed %s, method %s", args.command, config.seed, config.approx.method.value)
        return COMMANDS[args.command](config, args.chain)
    except ValidationError as exc:
        print(f"error: invalid configuration\n{exc}", file=sys.stderr)
    except (SpatialModelError, OSError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""
Replication driver for the first simulation study
Runs seeded replications of the strong- and weak-correlation designs and
prints MSPE ratios, DIC orderings, credible-interval coverage, relative
run times and sigma2 inefficiency factors.
"""

import argparse
import os
import sys
import time

# Force unbuffered output
sys.stdout.reconfigure(line_buffering=True)
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "backend"))

import numpy as np

from app.mcmc import inefficiency_factor, run_chain
from app.model import CovarianceModel
from app.models import ApproxSettings, CovForm, SamplerConfig
from app.predict import dic, mspe
from app.simdata import simulation_one

# Configuration
REPLICATIONS = 10
BASE_SEED = 20240
ITERATIONS = 5000
BURNIN = 500
THREADS = int(os.environ.get("MLPGP_THREADS", "1"))

STRONG_METHODS = {
    "exact": ApproxSettings(CovForm.EXACT),
    "mlp": ApproxSettings(CovForm.MLP, eps=200.0, r=4, gamma=20.0),
    "ct": ApproxSettings(CovForm.CT, gamma=2.8),
}
WEAK_METHODS = {
    "lp": ApproxSettings(CovForm.LP, eps=400.0, r=4),
    "mlp": ApproxSettings(CovForm.MLP, eps=400.0, r=4, gamma=2.8),
}


def fit(sim, approx, seed, iterations, burnin):
    """Sample tau2 and sigma2 with beta and lambda held at the truth"""
    started = time.perf_counter()
    model = CovarianceModel(sim.train.locations, sim.kernel, approx, sim.prior.atoms, seed=seed, threads=THREADS)
    config = SamplerConfig(
        iterations=iterations, burnin=burnin, proposal_sd=(0.1, 0.05),
        update_beta=False, update_theta=False, approx=approx,
    )
    chain = run_chain(sim.train, sim.prior, config, model, seed, initial=sim.truth.replace(tau2=0.8, sigma2=0.8))
    return model, chain, time.perf_counter() - started


def covers(chain, name, value):
    lo, hi = np.quantile(chain.column(name), [0.025, 0.975])
    return lo <= value <= hi


def strong_design(replications, iterations, burnin):
    print("\nStrong correlation (lambda = sqrt(2)/0.06)")
    print("-" * 60)
    stats = {"ratio_ok": 0, "dic_ok": 0, "coverage_ok": 0, "time_mlp": [], "time_ct": []}
    for i in range(replications):
        seed = BASE_SEED + i
        sim = simulation_one("strong", seed=seed)
        results = {}
        for name, approx in STRONG_METHODS.items():
            model, chain, elapsed = fit(sim, approx, seed, iterations, burnin)
            score = mspe(sim.test, chain, sim.train, model, seed, max_draws=500, threads=THREADS)
            dic_value, _ = dic(chain, sim.train, sim.prior, model, max_draws=500, threads=THREADS)
            results[name] = (chain, score, dic_value, elapsed)
            print(f"  [{i + 1}/{replications}] {name:>5}: MSPE {score:.4f}  DIC {dic_value:9.2f}  {elapsed:7.1f}s")
        ratio = results["mlp"][1] / results["exact"][1]
        stats["ratio_ok"] += ratio <= 1.05
        stats["dic_ok"] += results["exact"][2] <= results["mlp"][2] <= results["ct"][2]
        stats["coverage_ok"] += covers(results["mlp"][0], "tau2", 1.0) and covers(results["mlp"][0], "sigma2", 0.5)
        stats["time_mlp"].append(results["mlp"][3] / results["exact"][3])
        stats["time_ct"].append(results["ct"][3] / results["exact"][3])
    return stats


def weak_design(replications, iterations, burnin):
    print("\nWeak correlation (lambda = sqrt(2)/0.3)")
    print("-" * 60)
    worse = 0
    for i in range(replications):
        seed = BASE_SEED + 100 + i
        sim = simulation_one("weak", seed=seed)
        factors = {}
        for name, approx in WEAK_METHODS.items():
            _, chain, elapsed = fit(sim, approx, seed, iterations, burnin)
            factors[name] = inefficiency_factor(chain.column("sigma2"))
            print(f"  [{i + 1}/{replications}] {name:>5}: sigma2 IF {factors[name]:8.2f}  {elapsed:7.1f}s")
        worse += factors["lp"] > factors["mlp"]
    return worse


def replicate(replications=REPLICATIONS, iterations=ITERATIONS, burnin=BURNIN):
    started = time.time()
    print("=" * 60)
    print("Simulation study replication")
    print("=" * 60)
    print(f"  Replications: {replications}, iterations: {iterations}, burn-in: {burnin}, threads: {THREADS}")

    strong = strong_design(replications, iterations, burnin)
    weak = weak_design(replications, iterations, burnin)

    elapsed = time.time() - started
    print("\n" + "=" * 60)
    print("Replication Complete!")
    print("=" * 60)
    print(f"\nStatistics:")
    print(f"  MLP / exact MSPE <= 1.05:        {strong['ratio_ok']}/{replications}")
    print(f"  DIC exact <= MLP <= CT:          {strong['dic_ok']}/{replications}")
    print(f"  Truth inside MLP 95% intervals:  {strong['coverage_ok']}/{replications}")
    print(f"  Relative time MLP / exact:       {np.mean(strong['time_mlp']):.2f}")
    print(f"  Relative time CT / exact:        {np.mean(strong['time_ct']):.2f}")
    print(f"  LP sigma2 IF above MLP (weak):   {weak}/{replications}")
    print(f"\nTime elapsed: {elapsed/60:.1f} minutes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Replicate the first simulation study")
    parser.add_argument("--quick", action="store_true", help="2 replications of 600 sweeps")
    parser.add_argument("--replications", type=int, default=REPLICATIONS)
    parser.add_argument("--iterations", type=int, default=ITERATIONS)
    parser.add_argument("--burnin", type=int, default=BURNIN)
    return parser


if __name__ == "__main__":
    args = build_parser().parse_args()
    if args.quick:
        print("QUICK MODE - 2 replications of 600 sweeps")
        replicate(replications=2, iterations=600, burnin=100)
    else:
        replicate(args.replications, args.iterations, args.burnin)

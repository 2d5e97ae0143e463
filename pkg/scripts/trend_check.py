"""Paired DME vs CVT-ME runs on one function, with Wilcoxon verdicts on final FEV and coverage.

    python scripts/trend_check.py F1 10 --seeds 10 --k 1000
"""
import argparse

import numpy as np

from dmelites.algorithms import AlgorithmConfig, run_cvt_map_elites, run_differential_map_elites
from dmelites.benchmarks import make_problem
from dmelites.cvt import cvt_approximation
from dmelites.stats import wilcoxon_rank_sum


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("function")
    parser.add_argument("dim", type=int)
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--k", type=int, default=1000)
    parser.add_argument("--budget-multiplier", type=int, default=10_000)
    args = parser.parse_args()

    problem = make_problem(args.function, args.dim)
    centroids = cvt_approximation(args.k, 2, seed=0)
    finals = {}
    for name, run in (("dme", run_differential_map_elites), ("cvt_me", run_cvt_map_elites)):
        fevs, covs = [], []
        for seed in range(args.seeds):
            config = AlgorithmConfig(k=args.k, G=100 * args.dim,
                                     max_evaluations=args.budget_multiplier * args.dim, seed=seed)
            record = run(problem, config, centroids)
            fevs.append(record.final_fev)
            covs.append(record.final_coverage)
        finals[name] = (np.array(fevs), np.array(covs))
        print(f"{name:>7}: FEV mean {np.mean(fevs):.4e} (std {np.std(fevs):.2e}), "
              f"coverage mean {np.mean(covs):.4f} (std {np.std(covs):.4f})")

    fv = wilcoxon_rank_sum(finals["dme"][0], finals["cvt_me"][0])
    cv = wilcoxon_rank_sum(finals["dme"][1], finals["cvt_me"][1], larger_is_better=True)
    print(f"DME vs CVT-ME  FEV {fv.symbol} (p={fv.p_value:.3g})  coverage {cv.symbol} (p={cv.p_value:.3g})")


if __name__ == "__main__":
    main()

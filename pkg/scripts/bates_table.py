"""Std of the normalized first behavior coordinate under uniform sampling, per dimension.

Shows how the linear projection squeezes random solutions toward the centre
of the behavior space as n grows (mean of n/2 uniforms).
"""
import argparse

import numpy as np

from dmelites.benchmarks import bates_narrowing_check


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dims", default="2,10,30,50")
    parser.add_argument("--samples", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    dims = [int(d) for d in args.dims.split(",")]
    rows = bates_narrowing_check(dims, args.samples, np.random.default_rng(args.seed))
    print(f"{'n':>4} {'std':>10} {'1/sqrt(6n)':>12}")
    for n, std in rows:
        print(f"{n:>4} {std:>10.5f} {1 / np.sqrt(12 * (n // 2)):>12.5f}")


if __name__ == "__main__":
    main()

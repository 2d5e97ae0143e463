"""Command line entry point: ``dmelites {run,single,heatmap,compare,cvt}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .algorithms import AlgorithmConfig, run_canonical_de, run_cvt_map_elites, run_differential_map_elites
from .archive import read_archive_csv
from .benchmarks import CLIP_MODES, FUNCTIONS, make_problem
from .cvt import DEFAULT_MAX_ITERATIONS, CentroidIndex, cvt_approximation
from .experiment import ConfigError, cached_centroids, load_config, read_run_csv, run_experiment
from .heatmap import emit_heatmap, render_heatmap
from .stats import wilcoxon_rank_sum
from .variation import DEParameters


def _cmd_run(args) -> int:
    try:
        config = load_config(args.config, output_dir_override=args.output_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.parallelism is not None:
        config.parallelism = args.parallelism
    report = run_experiment(config)
    n_ok = sum(r.ok for r in report.results)
    print(f"{n_ok}/{len(report.results)} runs completed; results in {report.output_dir}")
    print((report.output_dir / "summary.md").read_text(), end="")
    if report.errors:
        print(f"{len(report.errors)} runs failed; see {report.output_dir / 'errors.json'}", file=sys.stderr)
        return 1
    return 0


def _cmd_single(args) -> int:
    problem = make_problem(args.function, args.dim, args.problem_seed, args.clip_mode, args.data_dir)
    budget = args.budget or args.budget_multiplier * args.dim
    de = DEParameters(args.F, args.CR)
    if args.algorithm == "de":
        record = run_canonical_de(problem, args.population, de, budget, args.seed)
    else:
        config = AlgorithmConfig(
            k=args.k, G=args.init_per_dim * args.dim, max_evaluations=budget, de=de,
            sigma=problem.init_box.width / args.sigma_divisor, seed=args.seed,
            cvt_seed=args.cvt_seed,
        )
        centroids = None
        if args.cvt_cache:
            centroids, _ = cached_centroids(args.cvt_cache, args.k, 2, args.cvt_seed)
        run = run_differential_map_elites if args.algorithm == "dme" else run_cvt_map_elites
        record = run(problem, config, centroids)
        if args.archive_out:
            record.final_archive.to_csv(args.archive_out)
        if args.heatmap_out:
            emit_heatmap(record.final_archive, args.heatmap_out,
                         title=f"{args.algorithm} on {args.function} (n={args.dim}), seed {args.seed}")
    print(f"function={args.function} n={args.dim} algorithm={args.algorithm} seed={args.seed} "
          f"evaluations={record.evaluations}")
    print(f"fev={record.final_fev:.6e} coverage={record.final_coverage:.4f}")
    return 0


def _cmd_heatmap(args) -> int:
    dump = read_archive_csv(args.archive)
    if args.centroids:
        centroids = CentroidIndex.load(args.centroids).centroids
        fitness = np.full(centroids.shape[0], np.nan)
        fitness[dump["cell"]] = dump["fitness"]
    else:
        centroids, fitness = dump["centroid"], dump["fitness"]
    try:
        render_heatmap(centroids, fitness, args.out, title=args.title or Path(args.archive).stem)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


def _final_values(location) -> tuple[list[float], list[float]]:
    location = Path(location)
    files = sorted(location.rglob("*.csv")) if location.is_dir() else [location]
    if not files:
        raise FileNotFoundError(f"no run CSV files under {location}")
    finals = [read_run_csv(f)[-1] for f in files]
    return [f[1] for f in finals], [f[2] for f in finals]


def _cmd_compare(args) -> int:
    fev_a, cov_a = _final_values(args.a)
    fev_b, cov_b = _final_values(args.b)
    fv = wilcoxon_rank_sum(fev_a, fev_b, args.alpha)
    cv = wilcoxon_rank_sum(cov_a, cov_b, args.alpha, larger_is_better=True)
    print(f"A={args.a} ({len(fev_a)} runs)  B={args.b} ({len(fev_b)} runs)  alpha={args.alpha}")
    print(f"fev      {fv.symbol}  p={fv.p_value:.6g}  U={fv.statistic:g}  "
          f"median A={np.median(fev_a):.6e} B={np.median(fev_b):.6e}")
    print(f"coverage {cv.symbol}  p={cv.p_value:.6g}  U={cv.statistic:g}  "
          f"median A={np.median(cov_a):.4f} B={np.median(cov_b):.4f}")
    print("(+ means A is significantly better, - means B is)")
    return 0


def _cmd_cvt(args) -> int:
    if args.out:
        index = cvt_approximation(args.k, args.dim, args.samples, args.iterations, args.seed)
        index.save(args.out)
        path = args.out
    else:
        _, path = cached_centroids(args.cache_dir, args.k, args.dim, args.seed, args.samples, args.iterations)
    print(f"centroids: {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dmelites", description="Differential MAP-Elites experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a full experiment from a config file")
    p.add_argument("config")
    p.add_argument("--output-dir")
    p.add_argument("--parallelism", type=int)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("single", help="one seeded run; prints FEV and coverage")
    p.add_argument("--function", "-f", default="F1", choices=sorted(FUNCTIONS))
    p.add_argument("--dim", "-n", type=int, default=2)
    p.add_argument("--algorithm", "-a", default="dme", choices=["dme", "cvt_me", "de"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=1000)
    p.add_argument("--budget", type=int, help="total evaluations (overrides --budget-multiplier)")
    p.add_argument("--budget-multiplier", type=int, default=10_000)
    p.add_argument("--init-per-dim", type=int, default=100)
    p.add_argument("--F", type=float, default=0.5)
    p.add_argument("--CR", type=float, default=0.9)
    p.add_argument("--sigma-divisor", type=float, default=300.0)
    p.add_argument("--population", type=int, default=20)
    p.add_argument("--clip-mode", default="saturate", choices=CLIP_MODES)
    p.add_argument("--problem-seed", type=int, default=2005)
    p.add_argument("--data-dir")
    p.add_argument("--cvt-seed", type=int, default=0)
    p.add_argument("--cvt-cache")
    p.add_argument("--archive-out")
    p.add_argument("--heatmap-out")
    p.set_defaults(func=_cmd_single)

    p = sub.add_parser("heatmap", help="render an SVG heatmap from an archive CSV dump")
    p.add_argument("archive")
    p.add_argument("out")
    p.add_argument("--centroids", help="centroid file, so empty cells are drawn too")
    p.add_argument("--title")
    p.set_defaults(func=_cmd_heatmap)

    p = sub.add_parser("compare", help="Wilcoxon rank-sum test between two sets of run CSVs")
    p.add_argument("a", help="run CSV directory (searched recursively) or single file")
    p.add_argument("b")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("cvt", help="precompute a centroid file")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int)
    p.add_argument("--iterations", type=int, default=DEFAULT_MAX_ITERATIONS)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--out")
    g.add_argument("--cache-dir", default="cache/cvt")
    p.set_defaults(func=_cmd_cvt)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

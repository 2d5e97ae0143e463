"""Experiment orchestration: config loading, run scheduling and result emitters.

An experiment is the cross product functions x dimensions x algorithms x
seeds. Data files (run CSVs, summaries, convergence CSVs, heatmaps, the JSON
index) depend only on the config; wall-clock times go to ``timing.log``.
"""
from __future__ import annotations

import configparser
import csv
import json
import logging
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .algorithms import AlgorithmConfig, RunRecord, run_canonical_de, run_cvt_map_elites, run_differential_map_elites
from .archive import EliteArchive
from .benchmarks import CLIP_MODES, FUNCTIONS, make_problem
from .cvt import DEFAULT_MAX_ITERATIONS, CentroidIndex, cvt_approximation, default_sample_count
from .heatmap import emit_heatmap
from .stats import RunSummary, Symbol, summarize_runs, wilcoxon_rank_sum
from .variation import DEParameters

log = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "DMELITES_OUTPUT_DIR"
ALGORITHM_KINDS = ("dme", "cvt_me", "de")


class ConfigError(ValueError):
    pass


@dataclass
class AlgorithmSpec:
    name: str
    kind: str
    F: float | None = None
    CR: float | None = None
    sigma_divisor: float | None = None
    population: int = 20


@dataclass
class ExperimentConfig:
    functions: list[str]
    dimensions: list[int]
    algorithms: list[AlgorithmSpec]
    runs_per_cell: int = 30
    base_seed: int = 0
    budget_multiplier: int = 10_000
    output_dir: Path = Path("results")
    k: int = 25_000
    init_per_dim: int = 100
    F: float = 0.5
    CR: float = 0.9
    sigma_divisor: float = 300.0
    clip_mode: str = "saturate"
    parallelism: int = 1
    problem_seed: int = 2005
    data_dir: Path | None = None
    cvt_seed: int = 0
    cvt_samples: int | None = None
    cvt_iterations: int = DEFAULT_MAX_ITERATIONS
    cvt_cache: Path | None = None
    share_cvt: bool = True
    reference: str | None = None
    alpha: float = 0.05
    record_divisions: int = 100
    heatmaps: bool = True
    unbounded_coverage: str = "na"

    def __post_init__(self):
        self.output_dir = Path(self.output_dir)
        if self.cvt_cache is None:
            self.cvt_cache = self.output_dir / "cvt_cache"
        self.cvt_cache = Path(self.cvt_cache)
        if self.data_dir is not None:
            self.data_dir = Path(self.data_dir)
        if self.reference is None and self.algorithms:
            self.reference = self.algorithms[0].name

    def validate(self) -> None:
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.functions, "no functions configured")
        need(self.dimensions, "no dimensions configured")
        need(self.algorithms, "no algorithms configured")
        for f in self.functions:
            need(f in FUNCTIONS, f"unknown function {f!r}; known: {sorted(FUNCTIONS)}")
        for n in self.dimensions:
            need(n >= 2, f"dimension {n} < 2")
            need(self.init_per_dim * n >= 4, f"G = {self.init_per_dim * n} < 4 for n={n}")
            need(self.budget_multiplier >= self.init_per_dim, "budget must cover the G initial solutions")
        names = [a.name for a in self.algorithms]
        need(len(set(names)) == len(names), f"duplicate algorithm names in {names}")
        for a in self.algorithms:
            need(a.kind in ALGORITHM_KINDS, f"algorithm {a.name}: unknown kind {a.kind!r}")
            need(a.kind != "de" or a.population >= 4, f"algorithm {a.name}: population must be >= 4")
            try:
                self.de_params(a)
            except ValueError as exc:
                raise ConfigError(f"algorithm {a.name}: {exc}") from None
        need(self.reference in names, f"reference {self.reference!r} is not a configured algorithm")
        need(self.runs_per_cell >= 1, "runs_per_cell must be >= 1")
        need(self.k >= 1, "k must be >= 1")
        need(self.parallelism >= 1, "parallelism must be >= 1")
        need(self.clip_mode in CLIP_MODES, f"clip_mode must be one of {CLIP_MODES}")
        need(0.0 < self.alpha < 1.0, "alpha must be in (0, 1)")
        need(self.record_divisions >= 1, "record_divisions must be >= 1")
        need(self.unbounded_coverage in ("na", "zero"), "unbounded_coverage must be 'na' or 'zero'")
        need(self.sigma_divisor > 0, "sigma_divisor must be positive")

    def de_params(self, spec: AlgorithmSpec) -> DEParameters:
        return DEParameters(spec.F if spec.F is not None else self.F, spec.CR if spec.CR is not None else self.CR)

    def seeds(self) -> list[int]:
        return [self.base_seed + i for i in range(self.runs_per_cell)]

    def budget(self, n: int) -> int:
        return self.budget_multiplier * n

    def cvt_key(self, seed: int) -> tuple[int, int, int, int, int]:
        samples = self.cvt_samples or default_sample_count(self.k)
        return self.k, 2, seed, samples, self.cvt_iterations

    def as_dict(self) -> dict:
        d = asdict(self)
        for key in ("output_dir", "cvt_cache", "data_dir"):
            d[key] = None if d[key] is None else str(d[key])
        # the output location does not influence results
        d.pop("output_dir")
        d.pop("cvt_cache")
        d.pop("parallelism")
        return d


def _split_list(value: str) -> list[str]:
    return [v.strip() for v in value.replace("\n", ",").split(",") if v.strip()]


def load_config(path, output_dir_override=None) -> ExperimentConfig:
    """Read an INI-style experiment file.

    Sections: ``[experiment]``, ``[problems]``, ``[archive]`` and one
    ``[algorithm.<name>]`` per algorithm. ``DMELITES_OUTPUT_DIR`` overrides
    ``output_dir``; an explicit ``output_dir_override`` beats both.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    if not parser.read(path):
        raise ConfigError(f"cannot read config file {path}")
    known = {"experiment", "problems", "archive"}
    for section in parser.sections():
        if section not in known and not section.startswith("algorithm."):
            raise ConfigError(f"unknown section [{section}]")

    def get(section, key, conv=str, default=None):
        if not parser.has_option(section, key):
            return default
        raw = parser.get(section, key).strip()
        if raw == "":
            return default
        try:
            return conv(raw)
        except ValueError:
            raise ConfigError(f"[{section}] {key} = {raw!r} is not a valid {conv.__name__}") from None

    def boolean(raw: str) -> bool:
        if raw.lower() in ("1", "yes", "true", "on"):
            return True
        if raw.lower() in ("0", "no", "false", "off"):
            return False
        raise ValueError(raw)

    algorithms = []
    for section in parser.sections():
        if section.startswith("algorithm."):
            name = section.split(".", 1)[1]
            algorithms.append(AlgorithmSpec(
                name=name,
                kind=get(section, "kind", str, name),
                F=get(section, "F", float),
                CR=get(section, "CR", float),
                sigma_divisor=get(section, "sigma_divisor", float),
                population=get(section, "population", int, 20),
            ))

    kwargs = dict(
        functions=_split_list(get("problems", "functions", str, "")),
        dimensions=[int(v) for v in _split_list(get("problems", "dimensions", str, ""))],
        algorithms=algorithms,
        runs_per_cell=get("experiment", "runs_per_cell", int),
        base_seed=get("experiment", "base_seed", int),
        budget_multiplier=get("experiment", "budget_multiplier", int),
        output_dir=get("experiment", "output_dir", Path),
        parallelism=get("experiment", "parallelism", int),
        reference=get("experiment", "reference", str),
        alpha=get("experiment", "alpha", float),
        record_divisions=get("experiment", "record_divisions", int),
        heatmaps=get("experiment", "heatmaps", boolean),
        unbounded_coverage=get("experiment", "unbounded_coverage", str),
        problem_seed=get("problems", "problem_seed", int),
        clip_mode=get("problems", "clip_mode", str),
        data_dir=get("problems", "data_dir", Path),
        k=get("archive", "k", int),
        init_per_dim=get("archive", "init_per_dim", int),
        F=get("archive", "F", float),
        CR=get("archive", "CR", float),
        sigma_divisor=get("archive", "sigma_divisor", float),
        cvt_seed=get("archive", "cvt_seed", int),
        cvt_samples=get("archive", "cvt_samples", int),
        cvt_iterations=get("archive", "cvt_iterations", int),
        cvt_cache=get("archive", "cvt_cache", Path),
        share_cvt=get("archive", "share_cvt", boolean),
    )
    env_dir = os.environ.get(OUTPUT_DIR_ENV)
    if output_dir_override is not None:
        kwargs["output_dir"] = Path(output_dir_override)
    elif env_dir:
        kwargs["output_dir"] = Path(env_dir)
    config = ExperimentConfig(**{k: v for k, v in kwargs.items() if v is not None})
    config.validate()
    return config


def cached_centroids(cache_dir, k: int, n_dims: int, seed: int, samples: int | None = None,
                     iterations: int = DEFAULT_MAX_ITERATIONS) -> tuple[CentroidIndex, Path]:
    """Load the centroid file for ``(k, N, seed, K, iterations)`` or build and store it."""
    samples = samples or default_sample_count(k)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = cache_dir / f"cvt_k{k}_N{n_dims}_seed{seed}_K{samples}_it{iterations}.txt"
    if path.exists():
        return CentroidIndex.load(path), path
    index = cvt_approximation(k, n_dims, samples, iterations, seed)
    tmp = path.with_suffix(f".tmp{os.getpid()}")
    index.save(tmp)
    tmp.replace(path)
    return index, path


@dataclass
class RunTask:
    function: str
    dim: int
    algorithm: AlgorithmSpec
    seed: int
    config: ExperimentConfig
    centroid_file: Path | None
    keep_archive: bool = False


@dataclass
class RunResult:
    function: str
    dim: int
    algorithm: str
    seed: int
    history: list[tuple[int, float, float]] = field(default_factory=list)
    evaluations: int = 0
    wall_time: float = 0.0
    archive: EliteArchive | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


_centroid_memo: dict[Path, CentroidIndex] = {}


def _centroids_for(task: RunTask) -> CentroidIndex:
    cfg = task.config
    if task.centroid_file is None:
        return cached_centroids(cfg.cvt_cache, cfg.k, 2, task.seed, cfg.cvt_samples, cfg.cvt_iterations)[0]
    if task.centroid_file not in _centroid_memo:
        _centroid_memo[task.centroid_file] = CentroidIndex.load(task.centroid_file)
    return _centroid_memo[task.centroid_file]


def execute_run(task: RunTask) -> RunResult:
    """Run one (problem, algorithm, seed) cell; failures are captured, not raised."""
    cfg, spec = task.config, task.algorithm
    result = RunResult(task.function, task.dim, spec.name, task.seed)
    try:
        problem = make_problem(task.function, task.dim, cfg.problem_seed, cfg.clip_mode, cfg.data_dir)
        budget = cfg.budget(task.dim)
        interval = max(1, budget // cfg.record_divisions)
        de = cfg.de_params(spec)
        if spec.kind == "de":
            record = run_canonical_de(problem, spec.population, de, budget, task.seed, interval)
        else:
            divisor = spec.sigma_divisor or cfg.sigma_divisor
            algo_cfg = AlgorithmConfig(
                k=cfg.k, G=cfg.init_per_dim * task.dim, max_evaluations=budget, de=de,
                sigma=problem.init_box.width / divisor, seed=task.seed, record_interval=interval,
                cvt_seed=cfg.cvt_seed, cvt_samples=cfg.cvt_samples, cvt_iterations=cfg.cvt_iterations,
            )
            runner = run_differential_map_elites if spec.kind == "dme" else run_cvt_map_elites
            record = runner(problem, algo_cfg, _centroids_for(task))
        if record.evaluations != budget:
            raise RuntimeError(f"run spent {record.evaluations} evaluations, budget is {budget}")
        result.history = record.history
        result.evaluations = record.evaluations
        result.wall_time = record.wall_time
        if task.keep_archive:
            result.archive = record.final_archive
    except Exception:
        result.error = traceback.format_exc()
    return result


@dataclass
class ExperimentReport:
    output_dir: Path
    results: list[RunResult]
    summaries: dict[tuple[str, int, str], RunSummary]
    verdicts: dict[tuple[str, int, str], tuple[str, str]]
    files: dict[str, list[str]]
    errors: list[dict]

    @property
    def ok(self) -> bool:
        return not self.errors


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_run_csv(path: Path, history) -> None:
    _write_csv(path, ["evaluations", "best_fev", "coverage"],
               [[int(e), _fmt(f), _fmt(c)] for e, f, c in history])


def read_run_csv(path) -> list[tuple[int, float, float]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    return [(int(e), float(f), float(c)) for e, f, c in rows]


def emit_convergence_csv(summaries: dict[str, RunSummary], path) -> None:
    """Per-snapshot median/IQR of FEV and median coverage, one column group per algorithm."""
    if not summaries:
        raise ValueError("no summaries to emit")
    names = list(summaries)
    schedule = summaries[names[0]].evaluations
    for name in names:
        if summaries[name].evaluations != schedule:
            raise ValueError(f"snapshot schedule of {name!r} differs from {names[0]!r}")
    header = ["evaluations"]
    for name in names:
        header += [f"{name}_fev_median", f"{name}_fev_q25", f"{name}_fev_q75", f"{name}_coverage_median"]
    rows = []
    for i, evals in enumerate(schedule):
        row = [int(evals)]
        for name in names:
            s = summaries[name]
            row += [_fmt(s.fev_median[i]), _fmt(s.fev_q25[i]), _fmt(s.fev_q75[i]), _fmt(s.coverage_median[i])]
        rows.append(row)
    _write_csv(Path(path), header, rows)


def read_convergence_csv(path) -> dict[str, list[float]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {h: [float(r[i]) for r in body] for i, h in enumerate(header)}


SUMMARY_HEADER = [
    "function", "n", "algorithm", "runs",
    "fev_mean", "fev_std", "fev_median", "fev_q25", "fev_q75",
    "coverage_mean", "coverage_std", "coverage_median", "coverage_q25", "coverage_q75",
    "fev_verdict", "coverage_verdict",
]


def tally(symbols) -> str:
    symbols = [str(s) for s in symbols]
    return "/".join(str(symbols.count(s.value)) for s in Symbol)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Execute every run of ``config`` and write all result files under ``output_dir``."""
    config.validate()
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)

    centroid_file = None
    if config.share_cvt:
        _, centroid_file = cached_centroids(config.cvt_cache, config.k, 2, config.cvt_seed,
                                            config.cvt_samples, config.cvt_iterations)
    seeds = config.seeds()
    tasks = [
        RunTask(f, n, spec, seed, config, centroid_file,
                keep_archive=config.heatmaps and spec.kind != "de" and seed == seeds[0])
        for f in config.functions for n in config.dimensions for spec in config.algorithms for seed in seeds
    ]
    if config.parallelism > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.parallelism) as pool:
            results = list(pool.map(execute_run, tasks))
    else:
        results = [execute_run(t) for t in tasks]
    order = {spec.name: i for i, spec in enumerate(config.algorithms)}
    results.sort(key=lambda r: (config.functions.index(r.function), r.dim, order[r.algorithm], r.seed))

    files: dict[str, list[str]] = {"runs": [], "archives": [], "heatmaps": [], "convergence": []}
    errors = []
    run_index = []
    timing = []
    for r in results:
        tag = f"{r.function}_n{r.dim}"
        timing.append(f"{tag} {r.algorithm} seed={r.seed} wall_time={r.wall_time:.3f}s")
        if not r.ok:
            errors.append({"function": r.function, "n": r.dim, "algorithm": r.algorithm,
                           "seed": r.seed, "error": r.error})
            continue
        rel = f"runs/{tag}/{r.algorithm}/seed_{r.seed}.csv"
        write_run_csv(out / rel, r.history)
        files["runs"].append(rel)
        run_index.append({"function": r.function, "n": r.dim, "algorithm": r.algorithm, "seed": r.seed,
                          "file": rel, "evaluations": r.evaluations,
                          "final_fev": r.history[-1][1], "final_coverage": r.history[-1][2]})
        if r.archive is not None:
            arel = f"archives/{tag}/{r.algorithm}_seed_{r.seed}.csv"
            (out / arel).parent.mkdir(parents=True, exist_ok=True)
            r.archive.to_csv(out / arel)
            files["archives"].append(arel)
            hrel = f"heatmaps/{tag}/{r.algorithm}_seed_{r.seed}.svg"
            (out / hrel).parent.mkdir(parents=True, exist_ok=True)
            emit_heatmap(r.archive, out / hrel, title=f"{r.algorithm} on {r.function} (n={r.dim}), seed {r.seed}")
            files["heatmaps"].append(hrel)

    summaries: dict[tuple[str, int, str], RunSummary] = {}
    verdicts: dict[tuple[str, int, str], tuple[str, str]] = {}
    rows = []
    tallies: dict[tuple[int, str], tuple[list, list]] = {}
    for f in config.functions:
        bounded = FUNCTIONS[f].bounded
        for n in config.dimensions:
            tag = f"{f}_n{n}"
            cell = {}
            for spec in config.algorithms:
                recs = [RunRecord(r.history, None, 0.0, r.seed, r.evaluations) for r in results
                        if r.ok and r.function == f and r.dim == n and r.algorithm == spec.name]
                if recs:
                    cell[spec.name] = summaries[(f, n, spec.name)] = summarize_runs(recs)
            if not cell:
                continue
            crel = f"convergence/{tag}.csv"
            emit_convergence_csv(cell, out / crel)
            files["convergence"].append(crel)
            ref = cell.get(config.reference)
            for spec in config.algorithms:
                if spec.name not in cell:
                    continue
                s = cell[spec.name]
                fv = cv = ""
                if ref is not None and spec.name != config.reference:
                    fv = str(wilcoxon_rank_sum(s.final_fevs, ref.final_fevs, config.alpha).symbol)
                    cv = str(wilcoxon_rank_sum(s.final_coverages, ref.final_coverages, config.alpha,
                                               larger_is_better=True).symbol)
                    if not bounded:
                        cv = "NA" if config.unbounded_coverage == "na" else str(Symbol.EQUALS)
                    verdicts[(f, n, spec.name)] = (fv, cv)
                    t = tallies.setdefault((n, spec.name), ([], []))
                    t[0].append(fv)
                    if cv != "NA":
                        t[1].append(cv)
                if bounded:
                    cov = [_fmt(v) for v in (s.coverage.mean, s.coverage.std, s.coverage.median,
                                             s.coverage.q25, s.coverage.q75)]
                elif config.unbounded_coverage == "zero":
                    cov = [_fmt(0.0)] * 5
                else:
                    cov = ["NA"] * 5
                rows.append([f, n, spec.name, s.runs, _fmt(s.fev.mean), _fmt(s.fev.std), _fmt(s.fev.median),
                             _fmt(s.fev.q25), _fmt(s.fev.q75), *cov, fv, cv])
    for (n, name), (fvs, cvs) in sorted(tallies.items(), key=lambda kv: (kv[0][0], order[kv[0][1]])):
        rows.append(["+/=/-", n, name, "", "", "", "", "", "", "", "", "", "", "", tally(fvs), tally(cvs)])
    _write_csv(out / "summary.csv", SUMMARY_HEADER, rows)
    (out / "summary.md").write_text(_markdown_summary(rows, config))

    index = {
        "config": config.as_dict(),
        "runs": run_index,
        "summary": "summary.csv",
        "summary_markdown": "summary.md",
        "files": files,
        "errors": errors,
    }
    (out / "index.json").write_text(json.dumps(index, indent=2, sort_keys=True) + "\n")
    (out / "timing.log").write_text("\n".join(timing) + "\n")
    if errors:
        (out / "errors.json").write_text(json.dumps(errors, indent=2) + "\n")
    elif (out / "errors.json").exists():
        (out / "errors.json").unlink()
    return ExperimentReport(out, results, summaries, verdicts, files, errors)


def _markdown_summary(rows: list[list], config: ExperimentConfig) -> str:
    """Mean (std) table; entries significantly better than the other side are bolded."""
    lines = [
        "| function | n | algorithm | FEV mean (std) | coverage mean (std) |",
        "|---|---|---|---|---|",
    ]
    better = {}
    for row in rows:
        if row[0] == "+/=/-":
            continue
        f, n, name, fv, cv = row[0], row[1], row[2], row[14], row[15]
        # "+" marks the row's algorithm as significantly better, "-" the reference
        if fv:
            better[(f, n, name, "fev")] = fv == "+"
            better[(f, n, config.reference, "fev")] = better.get((f, n, config.reference, "fev"), False) or fv == "-"
        if cv:
            better[(f, n, name, "cov")] = cv == "+"
            better[(f, n, config.reference, "cov")] = better.get((f, n, config.reference, "cov"), False) or cv == "-"
    for row in rows:
        if row[0] == "+/=/-":
            lines.append(f"| +/=/- | {row[1]} | {row[2]} | {row[14]} | {row[15]} |")
            continue
        f, n, name = row[0], row[1], row[2]
        fev_cell = f"{float(row[4]):.2E} ({float(row[5]):.2E})"
        cov_cell = "NA" if row[9] == "NA" else f"{100 * float(row[9]):.1f}% ({100 * float(row[10]):.1f}%)"
        if better.get((f, n, name, "fev")):
            fev_cell = f"**{fev_cell}**"
        if better.get((f, n, name, "cov")):
            cov_cell = f"**{cov_cell}**"
        if row[14]:
            fev_cell += f" {row[14]}"
        if row[15]:
            cov_cell += f" {row[15]}"
        lines.append(f"| {f} | {n} | {name} | {fev_cell} | {cov_cell} |")
    return "\n".join(lines) + "\n"

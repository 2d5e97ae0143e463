"""Differential MAP-Elites, the CVT-MAP-Elites baseline, and canonical DE/rand/1/bin.

Only objective evaluations count toward the budget; building the CVT and
computing behaviors are free. Each run draws from two streams spawned from
its seed: one for the algorithm, one for objective noise.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .archive import EliteArchive
from .benchmarks import ProblemDefinition
from .cvt import DEFAULT_MAX_ITERATIONS, CentroidIndex, cvt_approximation
from .stats import fev
from .variation import DEParameters, binomial_crossover, de_rand_1, gaussian_mutation, random_solution


@dataclass
class AlgorithmConfig:
    k: int = 25_000
    G: int = 1_000
    max_evaluations: int = 100_000
    de: DEParameters = field(default_factory=DEParameters)
    sigma: np.ndarray | float | None = None  # None -> init box width / 300
    seed: int = 0
    record_interval: int | None = None  # None -> max_evaluations // 100
    cvt_seed: int = 0
    cvt_samples: int | None = None
    cvt_iterations: int = DEFAULT_MAX_ITERATIONS

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.G < 4:
            raise ValueError("G must be >= 4")
        if self.max_evaluations < self.G:
            raise ValueError("max_evaluations must be >= G")
        if self.record_interval is not None and self.record_interval < 1:
            raise ValueError("record_interval must be >= 1")

    @property
    def interval(self) -> int:
        return self.record_interval or max(1, self.max_evaluations // 100)

    def sigma_for(self, problem: ProblemDefinition) -> np.ndarray:
        if self.sigma is None:
            return problem.init_box.width / 300.0
        return np.broadcast_to(np.asarray(self.sigma, dtype=np.float64), (problem.dim,)).copy()

    def build_centroids(self, behavior_dim: int) -> CentroidIndex:
        return cvt_approximation(self.k, behavior_dim, self.cvt_samples, self.cvt_iterations, self.cvt_seed)


@dataclass
class RunRecord:
    history: list[tuple[int, float, float]]
    final_archive: EliteArchive | None
    wall_time: float
    seed: int
    evaluations: int
    best_solution: np.ndarray | None = None

    @property
    def final_fev(self) -> float:
        return self.history[-1][1]

    @property
    def final_coverage(self) -> float:
        return self.history[-1][2]


def run_streams(seed) -> tuple[np.random.Generator, np.random.Generator]:
    algo, noise = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(algo), np.random.default_rng(noise)


class _QDRun:
    """Evaluation, insertion and snapshot bookkeeping shared by both QD loops."""

    def __init__(self, problem: ProblemDefinition, config: AlgorithmConfig, centroids: CentroidIndex | None):
        if centroids is None:
            centroids = config.build_centroids(problem.behavior_dim)
        if centroids.dim != problem.behavior_dim:
            raise ValueError(f"centroids are {centroids.dim}-D, problem behavior is {problem.behavior_dim}-D")
        self.problem = problem
        self.config = config
        self.archive = EliteArchive(centroids, problem.dim)
        self.rng, self.noise_rng = run_streams(config.seed)
        self.evaluations = 0
        self.history: list[tuple[int, float, float]] = []
        self.started = time.perf_counter()

    def step(self, x: np.ndarray) -> None:
        value = self.problem.evaluate(x, self.noise_rng)
        # archive maximizes, objectives are minimized
        self.archive.add(x, -value, self.problem.behavior(x))
        self.evaluations += 1
        if self.evaluations % self.config.interval == 0 or self.evaluations == self.config.max_evaluations:
            self.snapshot()

    def snapshot(self) -> None:
        best = self.archive.best()
        best_fev = fev(-best[1], self.problem.optimum_value) if best else float("inf")
        self.history.append((self.evaluations, best_fev, self.archive.coverage()))

    def initialize(self) -> None:
        for _ in range(self.config.G):
            self.step(random_solution(self.problem.init_box, self.rng))

    @property
    def remaining(self) -> int:
        return self.config.max_evaluations - self.evaluations

    def record(self) -> RunRecord:
        best = self.archive.best()
        return RunRecord(
            history=self.history,
            final_archive=self.archive,
            wall_time=time.perf_counter() - self.started,
            seed=self.config.seed,
            evaluations=self.evaluations,
            best_solution=self.archive.solutions[best[0]].copy() if best else None,
        )


def run_differential_map_elites(problem: ProblemDefinition, config: AlgorithmConfig,
                                centroids: CentroidIndex | None = None) -> RunRecord:
    """Differential MAP-Elites.

    After ``G`` random solutions, every iteration picks four distinct occupied
    cells (target plus three donors), builds a DE/rand/1 mutant and a
    binomial-crossover trial against the target, and offers the trial to the
    archive cell its own behavior maps to. While fewer than four cells are
    occupied a fresh random solution is evaluated instead.
    """
    run = _QDRun(problem, config, centroids)
    run.initialize()
    F, CR = config.de.F, config.de.CR
    while run.remaining > 0:
        if run.archive.filled_count < 4:
            trial = random_solution(problem.init_box, run.rng)
        else:
            (_, target), (_, r1), (_, r2), (_, r3) = run.archive.sample_distinct(4, run.rng)
            trial = binomial_crossover(target, de_rand_1(r1, r2, r3, F), CR, run.rng)
        run.step(trial)
    return run.record()


def run_cvt_map_elites(problem: ProblemDefinition, config: AlgorithmConfig,
                       centroids: CentroidIndex | None = None) -> RunRecord:
    """CVT-MAP-Elites with isotropic Gaussian mutation of one uniformly chosen elite."""
    run = _QDRun(problem, config, centroids)
    sigma = config.sigma_for(problem)
    run.initialize()
    while run.remaining > 0:
        if run.archive.filled_count == 0:
            child = random_solution(problem.init_box, run.rng)
        else:
            (_, parent), = run.archive.sample_distinct(1, run.rng)
            child = gaussian_mutation(parent, sigma, run.rng)
        run.step(child)
    return run.record()


def run_canonical_de(problem: ProblemDefinition, population: int, de_params: DEParameters,
                     budget: int, seed: int = 0, record_interval: int | None = None) -> RunRecord:
    """Generational DE/rand/1/bin with one-to-one selection (trial wins ties).

    Stops as soon as ``budget`` evaluations are spent, possibly mid-generation.
    History coverage is always 0.
    """
    if population < 4:
        raise ValueError("population must be >= 4")
    if budget < population:
        raise ValueError("budget must cover the initial population")
    interval = record_interval or max(1, budget // 100)
    started = time.perf_counter()
    rng, noise_rng = run_streams(seed)
    history: list[tuple[int, float, float]] = []
    evaluations = 0
    best = np.inf

    def evaluate(x):
        nonlocal evaluations, best
        value = problem.evaluate(x, noise_rng)
        evaluations += 1
        best = min(best, value)
        if evaluations % interval == 0 or evaluations == budget:
            history.append((evaluations, fev(best, problem.optimum_value), 0.0))
        return value

    pop = np.array([random_solution(problem.init_box, rng) for _ in range(population)])
    fit = np.array([evaluate(x) for x in pop])
    others = np.arange(population)
    while evaluations < budget:
        next_pop, next_fit = pop.copy(), fit.copy()
        for i in range(population):
            if evaluations >= budget:
                break
            r1, r2, r3 = rng.choice(others[others != i], 3, replace=False)
            trial = binomial_crossover(pop[i], de_rand_1(pop[r1], pop[r2], pop[r3], de_params.F),
                                       de_params.CR, rng)
            value = evaluate(trial)
            if value <= fit[i]:
                next_pop[i], next_fit[i] = trial, value
        pop, fit = next_pop, next_fit
    i_best = int(np.argmin(fit))
    return RunRecord(history, None, time.perf_counter() - started, seed, evaluations, pop[i_best].copy())


ALGORITHMS = {
    "dme": run_differential_map_elites,
    "cvt_me": run_cvt_map_elites,
}

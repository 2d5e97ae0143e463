"""Acceptance suite: one or more tests per criterion, each tagged with ``criterion``.

The terminal summary prints one PASS/FAIL line per criterion. The trend
criteria share module-scoped runs (10 seeds, k = 1,000) so each heavy
experiment is executed once.
"""
import dataclasses

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from oracles import brute_force_nearest, check_insertion_sequence, enumerated_pvalue, replay, same_archive

from dmelites.algorithms import AlgorithmConfig, run_canonical_de, run_cvt_map_elites, run_differential_map_elites
from dmelites.benchmarks import bates_narrowing_check, make_problem
from dmelites.cvt import CentroidIndex, cvt_approximation
from dmelites.experiment import AlgorithmSpec, ExperimentConfig, run_experiment
from dmelites.stats import Symbol, wilcoxon_rank_sum
from dmelites.variation import DEParameters, binomial_crossover, de_rand_1

SEEDS = range(10)
ALPHA = 0.05

criterion = pytest.mark.criterion


def paired_runs(function, n, budget, centroids):
    problem = make_problem(function, n)
    out = {}
    for name, run in (("dme", run_differential_map_elites), ("cvt_me", run_cvt_map_elites)):
        records = []
        for seed in SEEDS:
            config = AlgorithmConfig(k=centroids.k, G=100 * n, max_evaluations=budget, seed=seed)
            records.append(run(problem, config, centroids))
        assert all(r.evaluations == budget for r in records)
        out[name] = (np.array([r.final_fev for r in records]), np.array([r.final_coverage for r in records]))
    return out


@pytest.fixture(scope="module")
def f1_n10(centroids_1000):
    return paired_runs("F1", 10, 100_000, centroids_1000)


@pytest.fixture(scope="module")
def f1_n2(centroids_1000):
    return paired_runs("F1", 2, 20_000, centroids_1000)


@pytest.fixture(scope="module")
def f9_n10(centroids_1000):
    return paired_runs("F9", 10, 100_000, centroids_1000)


def report(runs, label):
    for name, (fevs, covs) in runs.items():
        print(f"{label} {name}: FEV mean {fevs.mean():.4g}, coverage mean {covs.mean():.4f}")


@criterion(1, "F1 n=10: DME coverage significantly higher than CVT-ME")
def test_f1_n10_coverage(f1_n10):
    report(f1_n10, "F1 n=10")
    (_, cov_dme), (_, cov_cvt) = f1_n10["dme"], f1_n10["cvt_me"]
    verdict = wilcoxon_rank_sum(cov_dme, cov_cvt, ALPHA, larger_is_better=True)
    assert cov_dme.mean() > cov_cvt.mean()
    assert verdict.symbol is Symbol.PLUS, verdict


@criterion(1, "F1 n=10: DME mean FEV significantly lower than CVT-ME")
def test_f1_n10_fev(f1_n10):
    (fev_dme, _), (fev_cvt, _) = f1_n10["dme"], f1_n10["cvt_me"]
    verdict = wilcoxon_rank_sum(fev_dme, fev_cvt, ALPHA)
    assert fev_dme.mean() < fev_cvt.mean(), (fev_dme.mean(), fev_cvt.mean())
    assert verdict.symbol is Symbol.PLUS, verdict


@criterion(2, "F1 n=2: DME coverage significantly higher than CVT-ME")
def test_f1_n2_coverage(f1_n2):
    report(f1_n2, "F1 n=2")
    (_, cov_dme), (_, cov_cvt) = f1_n2["dme"], f1_n2["cvt_me"]
    verdict = wilcoxon_rank_sum(cov_dme, cov_cvt, ALPHA, larger_is_better=True)
    assert cov_dme.mean() > cov_cvt.mean()
    assert verdict.symbol is Symbol.PLUS, verdict


@criterion(3, "F9 n=10: both algorithms exceed 90% coverage")
def test_f9_n10_coverage(f9_n10):
    report(f9_n10, "F9 n=10")
    means = {name: covs.mean() for name, (_, covs) in f9_n10.items()}
    assert means["dme"] > 0.90, means
    assert means["cvt_me"] > 0.90, means


@criterion(4, "behavior std narrows with n and equals 1/sqrt(12) at n=2")
def test_bates_narrowing():
    rows = bates_narrowing_check([2, 10, 30, 50], 100_000, np.random.default_rng(0))
    stds = [s for _, s in rows]
    assert all(a > b for a, b in zip(stds, stds[1:])), rows
    assert abs(stds[0] - 1 / np.sqrt(12)) <= 0.02 / np.sqrt(12), rows


@criterion(5, "exact rank-sum p-values equal permutation enumeration (sizes <= 8)")
def test_wilcoxon_exact_oracle():
    rng = np.random.default_rng(5)
    for _ in range(500):
        n_a, n_b = (int(v) for v in rng.integers(1, 9, size=2))
        if rng.random() < 0.5:
            values = rng.integers(0, 5, size=n_a + n_b).astype(float)
        else:
            values = rng.normal(size=n_a + n_b)
        a, b = values[:n_a], values[n_a:]
        assert wilcoxon_rank_sum(a, b).p_value == enumerated_pvalue(a, b), (a, b)


@criterion(6, "nearest centroid matches an exhaustive scan")
def test_nearest_centroid_oracle():
    rng = np.random.default_rng(6)
    index = CentroidIndex(rng.random((500, 2)))
    queries = rng.random((1000, 2))
    expected = [brute_force_nearest(index.centroids, q) for q in queries]
    assert [index.nearest(q) for q in queries] == expected
    assert index.nearest_many(queries).tolist() == expected


@criterion(7, "k=2 CVT on the unit interval converges to {0.25, 0.75}")
def test_cvt_two_cells():
    got = np.sort(cvt_approximation(2, 1, seed=7).centroids[:, 0])
    assert np.all(np.abs(got - [0.25, 0.75]) <= 0.02), got


GRID = CentroidIndex([[i / 3, j / 3] for i in range(4) for j in range(4)])
unit = st.floats(0.0, 1.0, allow_nan=False)
fitness = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
sequences = st.lists(st.tuples(fitness, unit, unit), min_size=1, max_size=30)
many = settings(max_examples=10_000, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@criterion(8, "archive: monotone fitness, monotone coverage, one cell touched")
@many
@given(seq=sequences)
def test_archive_insertion_properties(seq):
    check_insertion_sequence(GRID, seq)


@criterion(8, "archive: order independence under distinct fitnesses")
@many
@given(seq=st.lists(st.tuples(fitness, unit, unit), min_size=1, max_size=30,
                    unique_by=lambda t: t[0]), data=st.data())
def test_archive_order_independence(seq, data):
    perm = data.draw(st.permutations(range(len(seq))))
    assert same_archive(replay(GRID, seq, range(len(seq))), replay(GRID, seq, perm))


@criterion(9, "DE/rand/1 translation and scaling, crossover CR=1 and D=1")
def test_operator_algebra():
    rng = np.random.default_rng(9)
    for _ in range(1000):
        d = int(rng.integers(1, 20))
        r1, r2, r3, t = rng.normal(size=(4, d))
        a, F = rng.normal(), rng.uniform(0.1, 2.0)
        base = de_rand_1(r1, r2, r3, F)
        assert np.max(np.abs(de_rand_1(r1 + t, r2 + t, r3 + t, F) - (base + t))) <= 1e-12
        assert np.max(np.abs(de_rand_1(a * r1, a * r2, a * r3, F) - a * base)) <= 1e-12
        target, mutant = rng.normal(size=(2, d))
        assert binomial_crossover(target, mutant, 1.0, rng).tobytes() == mutant.tobytes()
        cr = rng.random()
        assert binomial_crossover(target[:1], mutant[:1], cr, rng).tobytes() == mutant[:1].tobytes()


@criterion(10, "canonical DE reaches FEV < 1e-6 on 2-D sphere in >= 9 of 10 seeds")
def test_canonical_de_sanity():
    problem = make_problem("sphere", 2)
    fevs = [run_canonical_de(problem, 20, DEParameters(0.5, 0.9), 20_000, seed).final_fev for seed in SEEDS]
    assert sum(f < 1e-6 for f in fevs) >= 9, fevs


def data_files(root):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*"))
            if p.is_file() and p.name != "timing.log" and "cvt_cache" not in p.parts}


@criterion(11, "identical config and seeds give byte-identical data files at any parallelism")
def test_determinism(tmp_path):
    config = ExperimentConfig(
        functions=["F1", "F4", "F9"], dimensions=[2, 3],
        algorithms=[AlgorithmSpec("dme", "dme"), AlgorithmSpec("cvt_me", "cvt_me"), AlgorithmSpec("de", "de")],
        runs_per_cell=3, budget_multiplier=300, output_dir=tmp_path / "a",
        k=100, init_per_dim=20, cvt_samples=10_000, cvt_iterations=20,
    )
    first = run_experiment(config)
    second = run_experiment(dataclasses.replace(config, output_dir=tmp_path / "b", cvt_cache=None))
    parallel = run_experiment(dataclasses.replace(config, output_dir=tmp_path / "c", cvt_cache=None, parallelism=4))
    assert first.ok and second.ok and parallel.ok
    reference = data_files(first.output_dir)
    assert len(reference) > 50
    assert data_files(second.output_dir) == reference
    assert data_files(parallel.output_dir) == reference

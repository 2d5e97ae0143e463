import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import check_insertion_sequence, insertion_solution, replay, same_archive

from dmelites.archive import EliteArchive, InsufficientElitesError, Outcome, read_archive_csv
from dmelites.cvt import CentroidIndex

GRID = CentroidIndex([[i / 3, j / 3] for i in range(4) for j in range(4)])

unit = st.floats(0.0, 1.0, allow_nan=False)
insertions = st.lists(
    st.tuples(st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False), unit, unit),
    min_size=1, max_size=40,
)


def fresh(index=GRID, dim=3) -> EliteArchive:
    return EliteArchive(index, dim)


solution = insertion_solution


def test_empty_cell_insert():
    archive = fresh()
    assert archive.add(solution(1), -3.0, [0.0, 0.0]) is Outcome.INSERTED
    assert archive.filled_count == 1


def test_worse_candidate_rejected():
    archive = fresh()
    archive.add(solution(1), 5.0, [0.0, 0.0])
    assert archive.add(solution(2), 3.0, [0.01, 0.0]) is Outcome.REJECTED
    cell = GRID.nearest([0.0, 0.0])
    assert archive.fitness[cell] == 5.0
    np.testing.assert_array_equal(archive.solutions[cell], solution(1))


def test_better_candidate_replaces():
    archive = fresh()
    archive.add(solution(1), 5.0, [0.0, 0.0])
    assert archive.add(solution(2), 7.0, [0.01, 0.0]) is Outcome.REPLACED
    cell = GRID.nearest([0.0, 0.0])
    assert archive.fitness[cell] == 7.0
    np.testing.assert_array_equal(archive.solutions[cell], solution(2))
    assert archive.filled_count == 1


def test_equal_fitness_keeps_incumbent():
    archive = fresh()
    archive.add(solution(1), 5.0, [0.0, 0.0])
    assert archive.add(solution(2), 5.0, [0.0, 0.0]) is Outcome.REJECTED
    np.testing.assert_array_equal(archive.solutions[GRID.nearest([0.0, 0.0])], solution(1))


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_non_finite_fitness_rejected(bad):
    archive = fresh()
    assert archive.add(solution(1), bad, [0.5, 0.5]) is Outcome.REJECTED
    assert archive.filled_count == 0


def test_coverage_ratios():
    index = CentroidIndex(np.random.default_rng(0).random((1000, 2)))
    archive = EliteArchive(index, 2)
    assert archive.coverage() == 0.0
    for cell in range(250):
        archive.add(np.zeros(2), 1.0, index.centroids[cell])
    assert archive.coverage() == 0.25
    for cell in range(1000):
        archive.add(np.zeros(2), 1.0, index.centroids[cell])
    assert archive.coverage() == 1.0


def test_sample_exhausts_small_archives(rng):
    archive = fresh()
    cells = set()
    for i, b in enumerate([[0, 0], [1, 1], [0, 1], [1, 0]]):
        archive.add(solution(i), 1.0, b)
        cells.add(GRID.nearest(b))
    picks = archive.sample_distinct(4, rng)
    assert {c for c, _ in picks} == cells
    one = fresh()
    one.add(solution(0), 1.0, [0.5, 0.5])
    assert [c for c, _ in one.sample_distinct(1, rng)] == [GRID.nearest([0.5, 0.5])]


def test_sample_needs_enough_elites(rng):
    archive = fresh()
    archive.add(solution(0), 1.0, [0, 0])
    with pytest.raises(InsufficientElitesError):
        archive.sample_distinct(4, rng)


def test_sample_returns_copies(rng):
    archive = fresh()
    archive.add(solution(1), 1.0, [0, 0])
    (_, x), = archive.sample_distinct(1, rng)
    x[:] = 99.0
    assert archive.solutions[GRID.nearest([0, 0])][0] == 1.0


def test_sampling_is_uniform(rng):
    archive = fresh()
    occupied = GRID.centroids[[0, 2, 5, 7, 8, 10, 13, 15]]
    for i, b in enumerate(occupied):
        archive.add(solution(i), 1.0, b)
    counts = np.zeros(GRID.k)
    draws = 10_000
    for _ in range(draws):
        picks = [c for c, _ in archive.sample_distinct(4, rng)]
        assert len(set(picks)) == 4
        counts[picks] += 1
    hits = counts[archive.filled]
    # each of 8 cells is picked with probability 4/8 per draw
    p = 0.5
    expected, sd = draws * p, np.sqrt(draws * p * (1 - p))
    assert np.all(np.abs(hits - expected) < 3 * sd)
    # chi-squared on pick counts, 7 dof: 99.9% quantile is 24.3
    chi2 = np.sum((hits - expected) ** 2 / expected)
    assert chi2 < 24.3


@settings(max_examples=300, deadline=None)
@given(seq=insertions)
def test_insertion_invariants(seq):
    check_insertion_sequence(GRID, seq)


@settings(max_examples=200, deadline=None)
@given(seq=insertions.filter(lambda s: len({f for f, _, _ in s}) == len(s)), data=st.data())
def test_order_independence_with_distinct_fitness(seq, data):
    perm = data.draw(st.permutations(range(len(seq))))
    assert same_archive(replay(GRID, seq, range(len(seq))), replay(GRID, seq, perm))


def test_csv_dump_round_trip(tmp_path):
    archive = fresh()
    archive.add(solution(1), 1.0 / 3.0, [0.1, 0.2])
    archive.add(solution(2), -2.5, [0.9, 0.95])
    path = tmp_path / "archive.csv"
    archive.to_csv(path)
    header = path.read_text().splitlines()[0]
    assert header == "cell,c0,c1,fitness,b0,b1,x0,x1,x2"
    dump = read_archive_csv(path)
    cells = np.flatnonzero(archive.filled)
    np.testing.assert_array_equal(dump["cell"], cells)
    np.testing.assert_array_equal(dump["fitness"], archive.fitness[cells])
    np.testing.assert_array_equal(dump["solution"], archive.solutions[cells])
    np.testing.assert_array_equal(dump["behavior"], archive.behaviors[cells])
    np.testing.assert_array_equal(dump["centroid"], GRID.centroids[cells])

"""Elite archive: one solution per CVT cell, higher fitness wins."""
from __future__ import annotations

import csv
import enum
import logging
import math

import numpy as np

from .cvt import CentroidIndex

log = logging.getLogger(__name__)


class Outcome(enum.Enum):
    INSERTED = "inserted-new"
    REPLACED = "replaced"
    REJECTED = "rejected"


class InsufficientElitesError(RuntimeError):
    pass


class EliteArchive:
    """Per-cell elites over a :class:`CentroidIndex`.

    Fitness is maximized. A candidate enters a cell when the cell is empty or
    its fitness is strictly greater than the incumbent's; non-finite fitness
    is always rejected.
    """

    def __init__(self, index: CentroidIndex, solution_dim: int):
        self.index = index
        self.solution_dim = solution_dim
        k = index.k
        self.solutions = np.full((k, solution_dim), np.nan)
        self.fitness = np.full(k, np.nan)
        self.behaviors = np.full((k, index.dim), np.nan)
        self.filled = np.zeros(k, dtype=bool)
        # insertion-ordered list of occupied cells, used for uniform sampling
        self._occupied: list[int] = []
        self.last_cell: int | None = None

    @property
    def k(self) -> int:
        return self.index.k

    @property
    def filled_count(self) -> int:
        return len(self._occupied)

    def occupied_cells(self) -> list[int]:
        return list(self._occupied)

    def add(self, x, fitness: float, b) -> Outcome:
        fitness = float(fitness)
        if not math.isfinite(fitness):
            log.warning("rejecting non-finite fitness %r", fitness)
            self.last_cell = None
            return Outcome.REJECTED
        cell = self.index.nearest(b)
        self.last_cell = cell
        if not self.filled[cell]:
            outcome = Outcome.INSERTED
            self.filled[cell] = True
            self._occupied.append(cell)
        elif self.fitness[cell] < fitness:
            outcome = Outcome.REPLACED
        else:
            return Outcome.REJECTED
        self.solutions[cell] = x
        self.fitness[cell] = fitness
        self.behaviors[cell] = b
        return outcome

    def coverage(self) -> float:
        return self.filled_count / self.k

    def best(self) -> tuple[int, float] | None:
        """(cell, fitness) of the fittest elite, or None for an empty archive."""
        if not self._occupied:
            return None
        cell = int(np.nanargmax(self.fitness))
        return cell, float(self.fitness[cell])

    def sample_distinct(self, count: int, rng: np.random.Generator) -> list[tuple[int, np.ndarray]]:
        """Draw ``count`` distinct occupied cells uniformly without replacement."""
        m = len(self._occupied)
        if count < 1:
            raise ValueError("count must be >= 1")
        if m < count:
            raise InsufficientElitesError(f"need {count} occupied cells, archive has {m}")
        # redraw whole tuples until distinct: uniform over ordered distinct tuples at O(count) cost
        while True:
            picks = rng.integers(m, size=count).tolist()
            if len(set(picks)) == count:
                break
        return [(self._occupied[j], self.solutions[self._occupied[j]].copy()) for j in picks]

    def to_csv(self, path) -> None:
        """One row per filled cell: cell, centroid, fitness, behavior, solution."""
        nb, nx = self.index.dim, self.solution_dim
        header = (["cell"] + [f"c{j}" for j in range(nb)] + ["fitness"]
                  + [f"b{j}" for j in range(nb)] + [f"x{j}" for j in range(nx)])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for cell in np.flatnonzero(self.filled):
                row = [int(cell)]
                row += [_fmt(v) for v in self.index.centroids[cell]]
                row.append(_fmt(self.fitness[cell]))
                row += [_fmt(v) for v in self.behaviors[cell]]
                row += [_fmt(v) for v in self.solutions[cell]]
                w.writerow(row)


def read_archive_csv(path) -> dict[str, np.ndarray]:
    """Parse an archive dump back into arrays keyed by column group."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body]) if body else np.empty((0, len(header)))

    def cols(prefix):
        return [i for i, h in enumerate(header) if h[0] == prefix and h[1:].isdigit()]

    return {
        "cell": data[:, 0].astype(int),
        "centroid": data[:, cols("c")],
        "fitness": data[:, header.index("fitness")],
        "behavior": data[:, cols("b")],
        "solution": data[:, cols("x")],
    }


def _fmt(v: float) -> str:
    return format(float(v), ".17g")

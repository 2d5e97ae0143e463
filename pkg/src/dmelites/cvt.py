"""Centroidal Voronoi tessellation of the normalized behavior space.

Centroids are computed with Lloyd iterations over a fixed uniform sample of
``[0, 1]^N`` and wrapped in a :class:`CentroidIndex` that answers exact
nearest-centroid queries (ties go to the lowest centroid index).
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

DEFAULT_MAX_ITERATIONS = 100
DEFAULT_TOLERANCE = 1e-6

# below this many centroids a vectorized linear scan beats the tree per query
_SCAN_LIMIT = 2048
# kd-tree candidates inspected before falling back to a full scan
_CANDIDATES = 4


def default_sample_count(k: int) -> int:
    return max(100 * k, 100_000)


class CentroidIndex:
    """Immutable set of ``k`` centroids in ``[0, 1]^N`` with exact NN lookup."""

    def __init__(self, centroids):
        c = np.array(centroids, dtype=np.float64, copy=True)
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
            raise ValueError(f"centroids must be a non-empty (k, N) array, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("centroids must be finite")
        c.setflags(write=False)
        self._centroids = c
        self._columns = [np.ascontiguousarray(c[:, j]) for j in range(c.shape[1])]
        self._tree = cKDTree(c)

    @property
    def centroids(self) -> np.ndarray:
        return self._centroids

    @property
    def k(self) -> int:
        return self._centroids.shape[0]

    @property
    def dim(self) -> int:
        return self._centroids.shape[1]

    def __len__(self):
        return self.k

    def __eq__(self, other):
        if not isinstance(other, CentroidIndex):
            return NotImplemented
        return np.array_equal(self._centroids, other._centroids)

    def __reduce__(self):
        return (CentroidIndex, (np.asarray(self._centroids),))

    def _as_point(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=np.float64)
        if b.shape != (self.dim,):
            raise ValueError(f"behavior point has shape {b.shape}, expected ({self.dim},)")
        return b

    def nearest(self, b) -> int:
        """Index of the centroid closest to ``b`` (Euclidean, lowest index on ties)."""
        b = self._as_point(b)
        if self.k <= _SCAN_LIMIT:
            cols = self._columns
            d2 = (cols[0] - b[0]) ** 2
            for j in range(1, len(cols)):
                d2 += (cols[j] - b[j]) ** 2
            return int(np.argmin(d2))
        return int(self._tree_nearest(b[None, :])[0])

    def nearest_many(self, points) -> np.ndarray:
        """Vectorized :meth:`nearest` over the rows of ``points``."""
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise ValueError(f"points must have shape (q, {self.dim}), got {pts.shape}")
        if pts.shape[0] == 0:
            return np.empty(0, dtype=np.intp)
        return self._tree_nearest(pts)

    def _tree_nearest(self, pts: np.ndarray) -> np.ndarray:
        m = min(self.k, _CANDIDATES)
        dist, idx = self._tree.query(pts, k=m)
        if m == 1:
            return np.asarray(idx, dtype=np.intp).reshape(-1)
        # re-rank candidates with the same arithmetic as a linear scan so ties resolve identically
        d2 = ((self._centroids[idx] - pts[:, None, :]) ** 2).sum(axis=-1)
        best = d2.min(axis=1)
        out = np.where(d2 == best[:, None], idx, self.k).min(axis=1)
        if m < self.k:
            # the m-th candidate might tie with the best; other tied centroids could be unseen
            ambiguous = np.flatnonzero(dist[:, -1] <= dist[:, 0] * (1 + 1e-9) + 1e-300)
            for row in ambiguous:
                full = ((self._centroids - pts[row]) ** 2).sum(axis=1)
                out[row] = np.argmin(full)
        return out.astype(np.intp)

    def save(self, path) -> None:
        """Write ``"k N"`` then one line of 17-significant-digit coordinates per centroid."""
        lines = [f"{self.k} {self.dim}"]
        lines += [" ".join(format(v, ".17g") for v in row) for row in self._centroids]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "CentroidIndex":
        rows = Path(path).read_text().split("\n")
        header = rows[0].split()
        if len(header) != 2:
            raise ValueError(f"{path}: header must be 'k N'")
        k, n = int(header[0]), int(header[1])
        body = [r.split() for r in rows[1:] if r.strip()]
        if len(body) != k or any(len(r) != n for r in body):
            raise ValueError(f"{path}: expected {k} rows of {n} coordinates")
        return cls(np.array([[float(v) for v in r] for r in body]))


def quantization_energy(centroids: np.ndarray, samples: np.ndarray) -> float:
    """Sum of squared distances from each sample to its nearest centroid."""
    d, _ = cKDTree(centroids).query(samples)
    return float(np.sum(d ** 2))


def lloyd_step(centroids: np.ndarray, samples: np.ndarray) -> np.ndarray:
    """One Lloyd update; centroids with no assigned samples stay where they are."""
    k, n = centroids.shape
    _, labels = cKDTree(centroids).query(samples)
    counts = np.bincount(labels, minlength=k)
    sums = np.stack([np.bincount(labels, weights=samples[:, j], minlength=k) for j in range(n)], axis=1)
    updated = centroids.copy()
    hit = counts > 0
    updated[hit] = sums[hit] / counts[hit, None]
    return updated


def cvt_approximation(
    k: int,
    n_dims: int,
    sample_count: int | None = None,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    seed=0,
    tolerance: float = DEFAULT_TOLERANCE,
) -> CentroidIndex:
    """Approximate a CVT of ``[0, 1]^n_dims`` with ``k`` cells.

    Draws ``sample_count`` uniform samples once, seeds the centroids with the
    first ``k`` of them and runs Lloyd iterations until ``max_iterations`` or
    until no centroid moves by more than ``tolerance``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if n_dims < 1:
        raise ValueError("behavior dimension must be >= 1")
    if sample_count is None:
        sample_count = default_sample_count(k)
    if sample_count < k:
        raise ValueError(f"sample_count ({sample_count}) must be >= k ({k})")
    if max_iterations < 1:
        raise ValueError("max_iterations must be >= 1")

    rng = np.random.default_rng(seed)
    samples = rng.random((sample_count, n_dims))
    centroids = samples[:k].copy()
    for _ in range(max_iterations):
        updated = lloyd_step(centroids, samples)
        shift = np.max(np.linalg.norm(updated - centroids, axis=1))
        centroids = updated
        if shift < tolerance:
            break
    return CentroidIndex(centroids)

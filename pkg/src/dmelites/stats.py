"""Function error values, run aggregation and the Wilcoxon rank-sum comparison.

Quantiles use linear interpolation between order statistics (numpy's
default), and standard deviations are population (``ddof=0``) values.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.stats import rankdata

EXACT_MAX_SIZE = 8


def fev(best_value: float, optimum_value: float) -> float:
    return float(best_value) - float(optimum_value)


class Symbol(str, enum.Enum):
    PLUS = "+"
    EQUALS = "="
    MINUS = "-"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ComparisonVerdict:
    """Outcome of comparing sample ``a`` against sample ``b``.

    ``PLUS`` means ``a`` is significantly better, ``MINUS`` that ``b`` is.
    ``statistic`` is the Mann-Whitney U of sample ``a``.
    """
    symbol: Symbol
    p_value: float
    statistic: float


def exact_rank_sum_pvalue(ranks2_a: np.ndarray, ranks2_all: np.ndarray) -> float:
    """Two-sided exact p-value from doubled (integer) ranks.

    Counts the subsets of size ``len(ranks2_a)`` whose doubled rank sum is at
    least as far from its null mean as the observed one.
    """
    m, total_n = len(ranks2_a), len(ranks2_all)
    top = int(ranks2_all.sum())
    dtype = np.int64 if comb(total_n, m) < 2 ** 62 else object
    ways = np.zeros((m + 1, top + 1), dtype=dtype)
    ways[0, 0] = 1
    for r in ranks2_all.astype(int):
        ways[1:, r:] = ways[1:, r:] + ways[:-1, : top + 1 - r]
    dist = ways[m]
    # the null mean of a doubled rank sum is m * (N + 1), an integer
    centre2 = m * (total_n + 1)
    observed = abs(int(ranks2_a.sum()) - centre2)
    sums = np.arange(top + 1)
    extreme = np.abs(sums - centre2) >= observed
    hits = int(sum(int(c) for c in dist[extreme]))
    return hits / comb(total_n, m)


def _normal_pvalue(u: float, n_a: int, n_b: int, ranks: np.ndarray) -> float:
    n = n_a + n_b
    _, counts = np.unique(ranks, return_counts=True)
    ties = float(np.sum(counts ** 3 - counts))
    var = n_a * n_b / 12.0 * ((n + 1) - ties / (n * (n - 1)))
    if var <= 0:
        return 1.0
    z = max(abs(u - n_a * n_b / 2.0) - 0.5, 0.0) / math.sqrt(var)
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


def wilcoxon_rank_sum(sample_a, sample_b, alpha: float = 0.05, larger_is_better: bool = False) -> ComparisonVerdict:
    """Two-sided Wilcoxon rank-sum test of ``a`` against ``b``.

    Exact permutation distribution when the smaller sample has at most eight
    values, tie- and continuity-corrected normal approximation otherwise.
    """
    a = np.asarray(sample_a, dtype=np.float64).ravel()
    b = np.asarray(sample_b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    n_a, n_b = a.size, b.size
    ranks = rankdata(np.concatenate([a, b]))
    u = float(ranks[:n_a].sum() - n_a * (n_a + 1) / 2.0)
    if min(n_a, n_b) <= EXACT_MAX_SIZE:
        ranks2 = np.rint(2 * ranks).astype(int)
        p = exact_rank_sum_pvalue(ranks2[:n_a], ranks2)
    else:
        p = _normal_pvalue(u, n_a, n_b, ranks)
    centre = n_a * n_b / 2.0
    a_better = u > centre if larger_is_better else u < centre
    if p < alpha and u != centre:
        symbol = Symbol.PLUS if a_better else Symbol.MINUS
    else:
        symbol = Symbol.EQUALS
    return ComparisonVerdict(symbol, p, u)


@dataclass(frozen=True)
class Aggregate:
    mean: float
    std: float
    median: float
    q25: float
    q75: float

    @classmethod
    def of(cls, values) -> "Aggregate":
        v = np.asarray(values, dtype=np.float64)
        q25, median, q75 = np.percentile(v, [25, 50, 75])
        return cls(float(v.mean()), float(v.std()), float(median), float(q25), float(q75))


@dataclass(frozen=True)
class RunSummary:
    runs: int
    fev: Aggregate
    coverage: Aggregate
    evaluations: list[int]
    fev_median: list[float]
    fev_q25: list[float]
    fev_q75: list[float]
    coverage_median: list[float]
    final_fevs: list[float]
    final_coverages: list[float]


def summarize_runs(records) -> RunSummary:
    """Final-value statistics plus per-snapshot median/IQR curves."""
    records = list(records)
    if not records:
        raise ValueError("no run records to summarize")
    schedule = [h[0] for h in records[0].history]
    if any([h[0] for h in r.history] != schedule for r in records):
        raise ValueError("run records do not share a snapshot schedule")
    hist = np.array([[(h[1], h[2]) for h in r.history] for r in records], dtype=np.float64)
    fevs, covs = hist[:, :, 0], hist[:, :, 1]
    q25, med, q75 = np.percentile(fevs, [25, 50, 75], axis=0)
    return RunSummary(
        runs=len(records),
        fev=Aggregate.of(fevs[:, -1]),
        coverage=Aggregate.of(covs[:, -1]),
        evaluations=schedule,
        fev_median=med.tolist(),
        fev_q25=q25.tolist(),
        fev_q75=q75.tolist(),
        coverage_median=np.median(covs, axis=0).tolist(),
        final_fevs=fevs[:, -1].tolist(),
        final_coverages=covs[:, -1].tolist(),
    )

"""Search-space operators: uniform init, DE/rand/1, binomial crossover, Gaussian mutation.

Gene indices are 0-based, so the forced crossover index is drawn from
``[0, D)`` rather than ``[1, D]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SearchBounds:
    lower: np.ndarray
    upper: np.ndarray
    bounded: bool = True

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=np.float64)
        hi = np.asarray(self.upper, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower and upper must be 1-D arrays of equal length")
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def uniform(cls, low: float, high: float, dim: int, bounded: bool = True) -> "SearchBounds":
        return cls(np.full(dim, float(low)), np.full(dim, float(high)), bounded)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower


@dataclass(frozen=True)
class DEParameters:
    F: float = 0.5
    CR: float = 0.9

    def __post_init__(self):
        if not 0.0 < self.F <= 2.0:
            raise ValueError(f"F must be in (0, 2], got {self.F}")
        if not 0.0 <= self.CR <= 1.0:
            raise ValueError(f"CR must be in [0, 1], got {self.CR}")


def random_solution(bounds: SearchBounds, rng: np.random.Generator) -> np.ndarray:
    return bounds.lower + rng.random(bounds.dim) * (bounds.upper - bounds.lower)


def de_rand_1(r1, r2, r3, F: float) -> np.ndarray:
    """Mutant ``r1 + F * (r2 - r3)``."""
    r1, r2, r3 = (np.asarray(v, dtype=np.float64) for v in (r1, r2, r3))
    if not r1.shape == r2.shape == r3.shape:
        raise ValueError(f"dimension mismatch: {r1.shape}, {r2.shape}, {r3.shape}")
    return r1 + F * (r2 - r3)


def binomial_crossover(target, mutant, CR: float, rng: np.random.Generator) -> np.ndarray:
    """Take each gene from ``mutant`` with probability CR; one random gene always crosses."""
    target = np.asarray(target, dtype=np.float64)
    mutant = np.asarray(mutant, dtype=np.float64)
    if target.shape != mutant.shape:
        raise ValueError(f"dimension mismatch: {target.shape} vs {mutant.shape}")
    d = target.shape[0]
    j_rand = rng.integers(d)
    take = rng.random(d) <= CR
    take[j_rand] = True
    return np.where(take, mutant, target)


def gaussian_mutation(parent, sigma, rng: np.random.Generator) -> np.ndarray:
    parent = np.asarray(parent, dtype=np.float64)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=np.float64), parent.shape)
    if np.any(sigma < 0):
        raise ValueError("sigma must be non-negative")
    return parent + rng.standard_normal(parent.shape[0]) * sigma

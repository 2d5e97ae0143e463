"""CEC-2005-style objective functions and the linear-projection behavior function.

Objective values are raw (bias included) and minimized. Shift vectors and
rotation matrices either come from the official CEC 2005 data files or are
generated deterministically from a problem seed.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np

from .variation import SearchBounds

log = logging.getLogger(__name__)

OVERFLOW_SENTINEL = 1e300
CLIP_MODES = ("saturate", "literal")


# base functions, all with the optimum at z = 0 and value 0

def sphere(z: np.ndarray) -> float:
    return float(np.dot(z, z))


def schwefel_1_2(z: np.ndarray) -> float:
    c = np.cumsum(z)
    return float(np.dot(c, c))


def rosenbrock(x: np.ndarray) -> float:
    """Textbook Rosenbrock, minimum 0 at the all-ones vector."""
    a, b = x[:-1], x[1:]
    return float(np.sum(100.0 * (a * a - b) ** 2 + (a - 1.0) ** 2))


def rosenbrock_from_origin(z: np.ndarray) -> float:
    return rosenbrock(z + 1.0)


def griewank(z: np.ndarray) -> float:
    i = np.arange(1, z.shape[0] + 1)
    return float(np.sum(z * z) / 4000.0 - np.prod(np.cos(z / np.sqrt(i))) + 1.0)


def ackley(z: np.ndarray) -> float:
    n = z.shape[0]
    return float(-20.0 * math.exp(-0.2 * math.sqrt(np.dot(z, z) / n))
                 - math.exp(np.sum(np.cos(2.0 * math.pi * z)) / n) + 20.0 + math.e)


def rastrigin(z: np.ndarray) -> float:
    return float(np.sum(z * z - 10.0 * np.cos(2.0 * math.pi * z) + 10.0))


def expanded_scaffer_f6(z: np.ndarray) -> float:
    s = z * z + np.roll(z, -1) ** 2
    return float(np.sum(0.5 + (np.sin(np.sqrt(s)) ** 2 - 0.5) / (1.0 + 0.001 * s) ** 2))


@dataclass(frozen=True)
class TransformData:
    shift: np.ndarray
    rotation: np.ndarray | None = None
    noisy: bool = False

    def __post_init__(self):
        shift = np.asarray(self.shift, dtype=np.float64)
        object.__setattr__(self, "shift", shift)
        if self.rotation is not None:
            m = np.asarray(self.rotation, dtype=np.float64)
            if m.shape != (shift.shape[0],) * 2:
                raise ValueError(f"rotation shape {m.shape} does not match dimension {shift.shape[0]}")
            object.__setattr__(self, "rotation", m)


def is_orthogonal(m: np.ndarray, tol: float = 1e-9) -> bool:
    return bool(np.max(np.abs(m @ m.T - np.eye(m.shape[0]))) <= tol)


def random_rotation(dim: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    # sign fix makes the draw Haar-distributed
    return q * np.sign(np.diag(r))


class ShiftedFunction:
    """``base((x - shift) @ M) [* noise] + bias`` as a picklable callable."""

    def __init__(self, base: Callable[[np.ndarray], float], transform: TransformData, bias: float):
        self.base = base
        self.transform = transform
        self.bias = float(bias)

    def __call__(self, x: np.ndarray, rng: np.random.Generator | None = None) -> float:
        z = x - self.transform.shift
        if self.transform.rotation is not None:
            z = z @ self.transform.rotation
        value = self.base(z)
        # noise needs the run's stream; without one the noiseless value is returned
        if self.transform.noisy and rng is not None:
            value *= 1.0 + 0.4 * abs(rng.standard_normal())
        return value + self.bias


def clip_genes(x: np.ndarray, lower: np.ndarray, upper: np.ndarray, mode: str = "saturate") -> np.ndarray:
    """Per-gene behavior contribution.

    ``saturate`` pins out-of-range genes to the violated bound. ``literal``
    returns ``bound / x`` for out-of-range genes.
    """
    if mode == "saturate":
        return np.minimum(np.maximum(x, lower), upper)
    if mode == "literal":
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = np.where(x < lower, lower / x, x)
            return np.where(x > upper, upper / x, out)
    raise ValueError(f"unknown clip mode {mode!r}; expected one of {CLIP_MODES}")


class LinearProjection:
    """2-D behavior: clipped sums of the first ``n // 2`` and remaining genes, scaled to [0, 1].

    Each sum is mapped affinely from its attainable range (gene count times
    the bounds) onto [0, 1].
    """

    def __init__(self, lower, upper, mode: str = "saturate"):
        if mode not in CLIP_MODES:
            raise ValueError(f"unknown clip mode {mode!r}; expected one of {CLIP_MODES}")
        self.lower = np.asarray(lower, dtype=np.float64)
        self.upper = np.asarray(upper, dtype=np.float64)
        self.mode = mode
        n = self.lower.shape[0]
        if n < 2:
            raise ValueError("the 2-D linear projection needs dimension >= 2")
        self.split = [0, n // 2]
        self.offset = np.add.reduceat(self.lower, self.split)
        self.span = np.add.reduceat(self.upper, self.split) - self.offset

    def __call__(self, x: np.ndarray) -> np.ndarray:
        raw = np.add.reduceat(clip_genes(x, self.lower, self.upper, self.mode), self.split)
        return np.clip((raw - self.offset) / self.span, 0.0, 1.0)


def linear_projection(x: np.ndarray, lower: np.ndarray, upper: np.ndarray, mode: str = "saturate") -> np.ndarray:
    return LinearProjection(lower, upper, mode)(np.asarray(x, dtype=np.float64))


@dataclass(frozen=True)
class ProblemDefinition:
    name: str
    dim: int
    objective: Callable
    bias: float
    bounds: SearchBounds
    init_box: SearchBounds
    clip_mode: str = "saturate"
    optimum: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("the 2-D linear projection needs dimension >= 2")
        if self.clip_mode not in CLIP_MODES:
            raise ValueError(f"unknown clip mode {self.clip_mode!r}")
        if self.bounds.dim != self.dim or self.init_box.dim != self.dim:
            raise ValueError("bounds dimension does not match problem dimension")

    @property
    def bounded(self) -> bool:
        return self.bounds.bounded

    @property
    def optimum_value(self) -> float:
        return self.bias

    @property
    def behavior_dim(self) -> int:
        return 2

    def evaluate(self, x, rng: np.random.Generator | None = None) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise ValueError(f"solution has shape {x.shape}, expected ({self.dim},)")
        with np.errstate(over="ignore", invalid="ignore"):
            value = self.objective(x, rng)
        if not math.isfinite(value):
            log.warning("%s: objective overflowed (%r), saturating", self.name, value)
            return OVERFLOW_SENTINEL
        return min(value, OVERFLOW_SENTINEL)

    def behavior(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise ValueError(f"solution has shape {x.shape}, expected ({self.dim},)")
        return self.projection(x)

    @cached_property
    def projection(self) -> LinearProjection:
        return LinearProjection(self.init_box.lower, self.init_box.upper, self.clip_mode)


@dataclass(frozen=True)
class _FunctionInfo:
    base: Callable[[np.ndarray], float]
    bias: float
    low: float
    high: float
    bounded: bool = True
    rotated: bool = False
    noisy: bool = False
    shift_file: str | None = None
    matrix_prefix: str | None = None
    description: str = ""


FUNCTIONS: dict[str, _FunctionInfo] = {
    "sphere": _FunctionInfo(sphere, 0.0, -100, 100, description="unshifted sphere"),
    "F1": _FunctionInfo(sphere, -450.0, -100, 100, shift_file="sphere_func_data.txt",
                        description="shifted sphere"),
    "F2": _FunctionInfo(schwefel_1_2, -450.0, -100, 100, shift_file="schwefel_102_func_data.txt",
                        description="shifted Schwefel 1.2"),
    "F4": _FunctionInfo(schwefel_1_2, -450.0, -100, 100, noisy=True,
                        shift_file="schwefel_102_func_data.txt",
                        description="shifted Schwefel 1.2 with noise"),
    "F6": _FunctionInfo(rosenbrock_from_origin, 390.0, -100, 100, shift_file="rosenbrock_func_data.txt",
                        description="shifted Rosenbrock"),
    "F7": _FunctionInfo(griewank, -180.0, 0, 600, bounded=False, rotated=True,
                        shift_file="griewank_func_data.txt", matrix_prefix="griewank_M_D",
                        description="shifted rotated Griewank, no bounds"),
    "F8": _FunctionInfo(ackley, -140.0, -32, 32, rotated=True,
                        shift_file="ackley_func_data.txt", matrix_prefix="ackley_M_D",
                        description="shifted rotated Ackley, optimum on bounds"),
    "F9": _FunctionInfo(rastrigin, -330.0, -5, 5, shift_file="rastrigin_func_data.txt",
                        description="shifted Rastrigin"),
    "F10": _FunctionInfo(rastrigin, -330.0, -5, 5, rotated=True,
                         shift_file="rastrigin_func_data.txt", matrix_prefix="rastrigin_M_D",
                         description="shifted rotated Rastrigin"),
    "F14": _FunctionInfo(expanded_scaffer_f6, -300.0, -100, 100, rotated=True,
                         shift_file="E_ScafferF6_func_data.txt", matrix_prefix="E_ScafferF6_M_D",
                         description="shifted rotated expanded Scaffer F6"),
}


def load_shift(path, dim: int) -> np.ndarray:
    """First ``dim`` whitespace-separated values of a shift data file."""
    values = np.array(Path(path).read_text().split(), dtype=np.float64)
    if values.shape[0] < dim:
        raise ValueError(f"{path}: need {dim} shift values, file has {values.shape[0]}")
    return values[:dim]


def load_rotation(path, dim: int, check_orthogonal: bool = True) -> np.ndarray:
    """Row-major ``dim x dim`` matrix from a whitespace-separated text file."""
    values = np.array(Path(path).read_text().split(), dtype=np.float64)
    if values.shape[0] < dim * dim:
        raise ValueError(f"{path}: need {dim * dim} matrix entries, file has {values.shape[0]}")
    m = values[: dim * dim].reshape(dim, dim)
    if check_orthogonal and not is_orthogonal(m):
        raise ValueError(f"{path}: matrix is not orthogonal within 1e-9")
    return m


def _generated_transform(info: _FunctionInfo, dim: int, seed: int) -> tuple[np.ndarray, np.ndarray | None]:
    rng = np.random.default_rng(seed)
    width = info.high - info.low
    shift = info.low + 0.1 * width + 0.8 * width * rng.random(dim)
    rotation = random_rotation(dim, rng) if info.rotated else None
    return shift, rotation


def make_problem(
    name: str,
    dim: int,
    seed: int = 2005,
    clip_mode: str = "saturate",
    data_dir=None,
    check_orthogonal: bool = True,
) -> ProblemDefinition:
    """Build a registered benchmark in dimension ``dim``.

    With ``data_dir`` the CEC 2005 shift/rotation files are read from it;
    otherwise transforms are drawn from ``seed`` (one instance per
    ``(name, dim, seed)``).
    """
    try:
        info = FUNCTIONS[name]
    except KeyError:
        raise ValueError(f"unknown function {name!r}; known: {sorted(FUNCTIONS)}") from None
    if name == "sphere":
        shift, rotation = np.zeros(dim), None
    elif data_dir is not None:
        data_dir = Path(data_dir)
        shift = load_shift(data_dir / info.shift_file, dim)
        rotation = None
        if info.rotated:
            rotation = load_rotation(data_dir / f"{info.matrix_prefix}{dim}.txt", dim, check_orthogonal)
    else:
        shift, rotation = _generated_transform(info, dim, seed)
    if name == "F8":
        shift = shift.copy()
        shift[0::2] = info.low
    transform = TransformData(shift, rotation, info.noisy)
    box = SearchBounds.uniform(info.low, info.high, dim, bounded=info.bounded)
    if info.bounded:
        bounds = box
    else:
        bounds = SearchBounds.uniform(-np.inf, np.inf, dim, bounded=False)
    return ProblemDefinition(
        name=name,
        dim=dim,
        objective=ShiftedFunction(info.base, transform, info.bias),
        bias=info.bias,
        bounds=bounds,
        init_box=box,
        clip_mode=clip_mode,
        optimum=shift,
    )


def bates_narrowing_check(n_values, samples: int, rng: np.random.Generator,
                          low: float = -100.0, high: float = 100.0) -> list[tuple[int, float]]:
    """Std of the normalized first behavior coordinate under uniform sampling, per dimension."""
    if samples < 10_000:
        raise ValueError("samples must be >= 10,000")
    rows = []
    for n in n_values:
        project = LinearProjection(np.full(n, low), np.full(n, high))
        x = rng.uniform(low, high, size=(samples, n))
        first = np.array([project(row)[0] for row in x])
        rows.append((int(n), float(np.std(first))))
    return rows

"""Core types: samples on a discrete design, function classes and predictors.

Design points are integer atoms ``0 .. support_size - 1``.  Every function
class in this package is represented by the values its members take on those
atoms, so a predictor is simply a value vector in ``[0, 1]^support_size``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

WEIGHT_TOL = 1e-12


class MemberBudgetError(ValueError):
    """Raised when a class cannot be listed within the allowed member budget."""

    def __init__(self, required: int, budget: int, what: str = "members"):
        super().__init__(f"{what}: {required} required, budget is {budget}")
        self.required = required
        self.budget = budget


# ---------------------------------------------------------------------------
# samples
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SampleStats:
    """Per-atom sufficient statistics of a sample: counts, label sums, square sums."""

    n: int
    counts: np.ndarray
    sums: np.ndarray
    sumsq: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        return self.counts / self.n

    def risk(self, values: np.ndarray) -> float:
        """Empirical squared-loss risk of a value vector."""
        v = np.asarray(values, dtype=float)
        return float((self.counts @ (v * v) - 2.0 * (self.sums @ v) + self.sumsq.sum()) / self.n)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Labeled pairs ``(x_i, y_i)`` in sampling order.

    ``x`` holds atom indices, ``y`` labels in ``[0, 1]``.
    """

    x: np.ndarray
    y: np.ndarray
    support_size: int

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=np.int64)
        y = np.ascontiguousarray(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape:
            raise ValueError("x and y must be 1-D arrays of equal length")
        if x.size == 0:
            raise ValueError("a dataset needs at least one pair")
        if x.min() < 0 or x.max() >= self.support_size:
            raise ValueError("unknown design point in sample")
        if y.min() < 0.0 or y.max() > 1.0:
            raise ValueError("labels must lie in [0, 1]")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return int(self.x.size)

    def __len__(self) -> int:
        return self.n

    @cached_property
    def stats(self) -> SampleStats:
        k = self.support_size
        counts = np.bincount(self.x, minlength=k).astype(float)
        sums = np.bincount(self.x, weights=self.y, minlength=k)
        sumsq = np.bincount(self.x, weights=self.y * self.y, minlength=k)
        return SampleStats(self.n, counts, sums, sumsq)

    def block(self, start: int, stop: int) -> "Dataset":
        return Dataset(self.x[start:stop], self.y[start:stop], self.support_size)


@dataclass(frozen=True)
class ThreeWaySplit:
    s: Dataset
    s_prime: Dataset
    s_dprime: Dataset


def split_threeway(d: Dataset) -> ThreeWaySplit:
    """Cut a sample of size 3n into consecutive blocks S, S', S'' of size n."""
    if d.n % 3:
        raise ValueError(f"sample size {d.n} is not divisible by 3")
    n = d.n // 3
    return ThreeWaySplit(d.block(0, n), d.block(n, 2 * n), d.block(2 * n, 3 * n))


# ---------------------------------------------------------------------------
# predictors
# ---------------------------------------------------------------------------


class Predictor:
    """A function on the design atoms, stored as its value vector."""

    label: str = ""

    def __init__(self, values, label: str = ""):
        v = np.array(values, dtype=float)
        if v.ndim != 1:
            raise ValueError("predictor values must be a vector")
        if v.size and (v.min() < -WEIGHT_TOL or v.max() > 1.0 + WEIGHT_TOL):
            raise ValueError("predictor values must lie in [0, 1]")
        np.clip(v, 0.0, 1.0, out=v)
        v.setflags(write=False)
        self._values = v
        self.label = label

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def support_size(self) -> int:
        return self._values.size

    def __call__(self, x):
        return evaluate(self, x)

    def __repr__(self):
        return f"{type(self).__name__}({self.label or self.support_size})"


class Member(Predictor):
    """A member of a function class; ``index`` is its position in the class listing."""

    def __init__(self, values, index: int | None = None, label: str = ""):
        super().__init__(values, label)
        self.index = index


class Mixture(Predictor):
    """Convex combination ``sum_i theta_i g_i`` of component predictors."""

    def __init__(self, components: Sequence[Predictor], weights, label: str = ""):
        if not components:
            raise ValueError("a mixture needs at least one component")
        theta = np.asarray(weights, dtype=float)
        if theta.shape != (len(components),):
            raise ValueError("one weight per component is required")
        if theta.min() < 0.0 or abs(theta.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError("mixture weights must lie on the simplex")
        stacked = np.stack([c.values for c in components])
        # convex combination of [0,1] vectors; Predictor clips only rounding error
        super().__init__(theta @ stacked, label)
        self.components = tuple(components)
        self.weights = theta


def evaluate(pred: Predictor, x):
    """Value of ``pred`` at atom(s) ``x``."""
    idx = np.asarray(x)
    if idx.dtype.kind not in "iu" or np.any(idx < 0) or np.any(idx >= pred.support_size):
        raise IndexError("unknown design point")
    out = pred.values[idx]
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# function classes
# ---------------------------------------------------------------------------


class FunctionSpec:
    """Base class of the supported function-class descriptions."""

    support_size: int

    def member_count(self) -> int:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class FiniteList(FunctionSpec):
    members: np.ndarray

    def __post_init__(self):
        m = np.array(self.members, dtype=float)
        if m.ndim != 2 or m.shape[0] == 0:
            raise ValueError("a finite class needs a non-empty (M, k) value table")
        if m.min() < 0.0 or m.max() > 1.0:
            raise ValueError("class members must take values in [0, 1]")
        m.setflags(write=False)
        object.__setattr__(self, "members", m)

    @property
    def support_size(self) -> int:
        return self.members.shape[1]

    def member_count(self) -> int:
        return self.members.shape[0]


@dataclass(frozen=True)
class BoxSequence(FunctionSpec):
    """Grid proxy of ``{f : f_j = (1 + g_j)/2, |g_j| <= j^(-1/p)}``.

    Coordinate ``j`` (1-based) lives on atom ``j - 1``.  Coordinates ``j <= J``
    take values on a grid of step ``grid_step`` in ``g``-units that starts at
    ``-j^(-1/p)`` and always includes the upper endpoint; coordinates beyond
    ``J`` are fixed at 1/2.  ``grid_step=None`` leaves the step to the
    estimator (see :func:`resolve_grid_step`).
    """

    p: float
    J: int
    grid_step: float | None = None
    support: int | None = None

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError("p must be positive")
        if self.J < 1:
            raise ValueError("J must be at least 1")
        if self.grid_step is not None:
            if not self.grid_step > 0:
                raise ValueError("grid_step must be positive")
            if self.grid_step > 2.0 * self.J ** (-1.0 / self.p) + 1e-12:
                raise ValueError("grid_step must not exceed 2 J^(-1/p)")

    @property
    def support_size(self) -> int:
        return self.support if self.support is not None else self.J

    def radii(self) -> np.ndarray:
        j = np.arange(1, self.support_size + 1, dtype=float)
        r = j ** (-1.0 / self.p)
        r[j > self.J] = 0.0
        return r

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-atom value interval ``[lo, hi]`` of the continuous box."""
        r = self.radii()
        return (1.0 - r) / 2.0, (1.0 + r) / 2.0

    def grid(self, atom: int) -> np.ndarray:
        """Sorted admissible values at ``atom``."""
        vals, off = self.grid_table()
        return vals[off[atom]:off[atom + 1]]

    def grid_table(self) -> tuple[np.ndarray, np.ndarray]:
        """All grids at once: flat sorted values per atom and CSR offsets (read-only, cached)."""
        return _grid_table(self)

    def member_count(self) -> int:
        _, off = self.grid_table()
        return math.prod(int(c) for c in np.diff(off))

    def with_grid_step(self, h: float) -> "BoxSequence":
        return BoxSequence(self.p, self.J, h, self.support)


@lru_cache(maxsize=16)
def _grid_table(spec: BoxSequence) -> tuple[np.ndarray, np.ndarray]:
    r = spec.radii()
    live = r > 0.0
    if live.any() and spec.grid_step is None:
        raise ValueError("grid_step is unresolved")
    h = spec.grid_step if spec.grid_step is not None else 1.0
    steps = np.where(live, np.floor(2.0 * r / h + 1e-9), 0).astype(np.int64)
    extra = live & (r - (-r + h * steps) > 1e-12)
    counts = steps + 1 + extra
    offsets = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
    atom = np.repeat(np.arange(r.size), counts)
    local = np.arange(offsets[-1]) - offsets[atom]
    ra = r[atom]
    g = -ra + h * local
    g[offsets[1:] - 1] = r
    vals = (1.0 + g) / 2.0
    vals[~live[atom]] = 0.5
    vals.setflags(write=False)
    offsets.setflags(write=False)
    return vals, offsets


@dataclass(frozen=True)
class VcIndicator(FunctionSpec):
    """``{base + amplitude * 1{x in W} : |W| <= d}`` over ``universe_size`` atoms."""

    amplitude: float
    d: int
    universe_size: int
    base: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.amplitude <= 1.0:
            raise ValueError("amplitude must lie in (0, 1]")
        if self.base < 0.0 or self.base + self.amplitude > 1.0 + 1e-12:
            raise ValueError("base + amplitude must stay inside [0, 1]")
        if self.d < 0 or self.universe_size < 1:
            raise ValueError("invalid d or universe size")

    @property
    def support_size(self) -> int:
        return self.universe_size

    def member_count(self) -> int:
        k = self.universe_size
        return sum(math.comb(k, m) for m in range(min(self.d, k) + 1))

    def indicator(self, W) -> np.ndarray:
        v = np.full(self.universe_size, self.base)
        v[np.asarray(list(W), dtype=np.int64)] = self.base + self.amplitude
        return v


@dataclass(frozen=True, eq=False)
class DictionaryHull(FunctionSpec):
    """``{sum_j theta_j f_j : theta in simplex, |theta|_0 <= s}``."""

    dictionary: np.ndarray
    sparsity: int

    def __post_init__(self):
        D = np.array(self.dictionary, dtype=float)
        if D.ndim != 2 or D.shape[0] == 0:
            raise ValueError("dictionary must be a non-empty (M, k) table")
        if D.min() < 0.0 or D.max() > 1.0:
            raise ValueError("dictionary values must lie in [0, 1]")
        if not 1 <= self.sparsity <= D.shape[0]:
            raise ValueError("sparsity must satisfy 1 <= s <= M")
        D.setflags(write=False)
        object.__setattr__(self, "dictionary", D)

    @property
    def M(self) -> int:
        return self.dictionary.shape[0]

    @property
    def support_size(self) -> int:
        return self.dictionary.shape[1]

    def patterns(self):
        """Supports with ``|nu| <= s``, by size then lexicographically."""
        for m in range(1, self.sparsity + 1):
            yield from itertools.combinations(range(self.M), m)

    def pattern_count(self) -> int:
        return sum(math.comb(self.M, m) for m in range(1, self.sparsity + 1))

    def member_count(self) -> int:
        raise MemberBudgetError(math.inf, 0, "a dictionary hull is not enumerable")


def resolve_grid_step(spec: BoxSequence, epsilon: float, override: float | None = None) -> BoxSequence:
    """Fill in the grid step: the override, else ``min(epsilon/2, 2 J^(-1/p))``."""
    if override is not None:
        return spec.with_grid_step(override)
    if spec.grid_step is not None:
        return spec
    return spec.with_grid_step(min(epsilon / 2.0, 2.0 * spec.J ** (-1.0 / spec.p)))


def member_table(spec: FunctionSpec, budget: int) -> np.ndarray:
    """Value table ``(members, atoms)`` in the listing order of :func:`enumerate_members`."""
    if isinstance(spec, FiniteList):
        if spec.member_count() > budget:
            raise MemberBudgetError(spec.member_count(), budget)
        return np.array(spec.members)
    if isinstance(spec, BoxSequence):
        vals, off = spec.grid_table()
        grids = [vals[off[a]:off[a + 1]] for a in range(spec.support_size)]
        count = math.prod(len(g) for g in grids)
        if count > budget:
            raise MemberBudgetError(count, budget)
        mesh = np.meshgrid(*grids, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)
    if isinstance(spec, VcIndicator):
        count = spec.member_count()
        if count > budget:
            raise MemberBudgetError(count, budget)
        k = spec.universe_size
        rows = []
        for m in range(min(spec.d, k) + 1):
            for W in itertools.combinations(range(k), m):
                rows.append(spec.indicator(W))
        return np.stack(rows)
    if isinstance(spec, DictionaryHull):
        raise MemberBudgetError(spec.pattern_count(), budget,
                                "a dictionary hull is not enumerable; use sparse_convex_fit")
    raise TypeError(f"unsupported class {type(spec).__name__}")


def enumerate_members(spec: FunctionSpec, budget: int) -> list[Member]:
    """List the (finite proxy of the) class in lexicographic order."""
    table = member_table(spec, budget)
    return [Member(row, index=i) for i, row in enumerate(table)]

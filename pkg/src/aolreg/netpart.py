"""Voronoi partition of an explicit member list around a greedy net."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .empirical import EmpiricalMetricContext, EpsilonNet, _table, greedy_cover


@dataclass(frozen=True, eq=False)
class Partition:
    """Cell ``assignment[m]`` of every member; cell ``i`` is centered at ``net.center_ids[i]``.

    Cells are numbered from 0 in the order their centers were added to the net.
    """

    net: EpsilonNet
    assignment: np.ndarray
    center_dist: np.ndarray

    @property
    def n_cells(self) -> int:
        return len(self.net)

    def cells(self) -> tuple[np.ndarray, np.ndarray]:
        """Members grouped by cell in CSR form: ``(order, offsets)``."""
        order = np.argsort(self.assignment, kind="stable")
        counts = np.bincount(self.assignment, minlength=self.n_cells)
        offsets = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
        return order.astype(np.int64), offsets


def build_partition(members, epsilon: float, ctx: EmpiricalMetricContext) -> Partition:
    T = _table(members)
    net = greedy_cover(T, epsilon, ctx)
    cols = ctx.seen
    V = np.ascontiguousarray(T[:, cols])
    C = np.ascontiguousarray(V[net.center_ids])
    w = np.ascontiguousarray(ctx.weights[cols])
    assign, dist2 = kernels.nearest_center(V, C, w)
    assign = np.asarray(assign, dtype=np.int64)
    # centers are pairwise > epsilon apart, so each one lands in its own cell
    assign.setflags(write=False)
    dist = np.sqrt(np.maximum(np.asarray(dist2), 0.0))
    dist.setflags(write=False)
    return Partition(net, assign, dist)


def cell_members(p: Partition, i: int) -> np.ndarray:
    """Member indices of cell ``i``, in member order."""
    if not 0 <= i < p.n_cells:
        raise IndexError(f"cell {i} out of range 0..{p.n_cells - 1}")
    return np.flatnonzero(p.assignment == i)

"""Pareto dominance, hypervolume, and regret accounting.

Everything here works in maximization orientation: y dominates y' when the
vectors differ and every component of y is at least the corresponding
component of y'. Hypervolume is the area (M=2, exact sweep) or volume
(M>2, Monte Carlo) dominated between a reference point and the front.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .costmodel import CostConstraint, CostWeights, cost_batch
from .scalarization import chebyshev_batch


def dominates(y: np.ndarray, y2: np.ndarray) -> bool:
    """True iff y != y2 and y_i >= y2_i for every component."""
    y = np.asarray(y, dtype=float).ravel()
    y2 = np.asarray(y2, dtype=float).ravel()
    if y.shape != y2.shape:
        raise ValueError(f"dimension mismatch: {y.shape} vs {y2.shape}")
    return bool(np.all(y >= y2) and np.any(y != y2))


def pareto_filter(ys: np.ndarray) -> np.ndarray:
    """Indices of entries not dominated by any other entry.

    Duplicate objective vectors never dominate each other, so ties are all
    retained. Output indices are sorted ascending.
    """
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    n = ys.shape[0]
    if n == 0:
        return np.zeros(0, dtype=int)
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        ge = np.all(ys >= ys[i], axis=1)
        ne = np.any(ys != ys[i], axis=1)
        if (ge & ne).any():
            keep[i] = False
    return np.flatnonzero(keep)


class ParetoArchive:
    """Observations plus an incrementally maintained dominant subset."""

    def __init__(self) -> None:
        self._xs: list[np.ndarray] = []
        self._ys: list[np.ndarray] = []
        self._dominant: list[int] = []

    def __len__(self) -> int:
        return len(self._xs)

    def add(self, x: np.ndarray, y: np.ndarray) -> None:
        x = np.asarray(x, dtype=float).copy()
        y = np.asarray(y, dtype=float).ravel().copy()
        idx = len(self._xs)
        self._xs.append(x)
        self._ys.append(y)
        for d in self._dominant:
            if dominates(self._ys[d], y):
                return
        self._dominant = [d for d in self._dominant if not dominates(y, self._ys[d])]
        self._dominant.append(idx)

    @property
    def dominant_indices(self) -> list[int]:
        return sorted(self._dominant)

    def dominant_ys(self) -> np.ndarray:
        if not self._dominant:
            return np.zeros((0, 0))
        return np.array([self._ys[d] for d in self.dominant_indices])

    def dominant_points(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [(self._xs[d], self._ys[d]) for d in self.dominant_indices]

    def entries(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self._xs), np.array(self._ys)


def hypervolume_2d(front: np.ndarray, ref: np.ndarray) -> float:
    """Exact dominated area for M=2 via sort-and-sweep.

    Every front point must dominate the reference point; dominated members
    of the input are filtered before sweeping, and duplicates are harmless.
    """
    front = np.atleast_2d(np.asarray(front, dtype=float))
    ref = np.asarray(ref, dtype=float).ravel()
    if front.shape[1] != 2 or ref.shape[0] != 2:
        raise ValueError("hypervolume_2d expects 2-dimensional objective vectors")
    for p in front:
        if not dominates(p, ref):
            raise ValueError(f"front point {p} does not dominate reference {ref}")
    nd = front[pareto_filter(front)]
    order = np.argsort(-nd[:, 0], kind="stable")
    area = 0.0
    covered = ref[1]
    for p in nd[order]:
        if p[1] > covered:
            area += (p[0] - ref[0]) * (p[1] - covered)
            covered = p[1]
    return area


def hypervolume_monte_carlo(
    front: np.ndarray,
    ref: np.ndarray,
    rng: np.random.Generator,
    n_samples: int = 100_000,
) -> tuple[float, float]:
    """Monte Carlo dominated-volume estimate with its standard error.

    Fallback for M > 2 and the independent oracle for the exact 2-D sweep.
    Samples uniformly in the box [ref, componentwise max of front].
    """
    front = np.atleast_2d(np.asarray(front, dtype=float))
    ref = np.asarray(ref, dtype=float).ravel()
    hi = front.max(axis=0)
    box = np.prod(hi - ref)
    if box <= 0.0:
        return 0.0, 0.0
    samples = rng.uniform(ref, hi, size=(n_samples, front.shape[1]))
    covered = np.zeros(n_samples, dtype=bool)
    for p in front:
        covered |= np.all(samples <= p, axis=1)
    frac = covered.mean()
    est = box * frac
    se = box * float(np.sqrt(max(frac * (1.0 - frac), 0.0) / n_samples))
    return float(est), se


@dataclass
class RegretOracle:
    """Ground-truth scalarization oracle over a fixed grid plus visited points.

    grid_x holds normalized search-space points, grid_y their true objective
    vectors in normalized maximization orientation. Visited points are
    appended as the run progresses so the max always covers the currently
    evaluated candidate, keeping instantaneous regret non-negative.
    """

    grid_x: np.ndarray
    grid_y: np.ndarray
    visited_x: list[np.ndarray] = field(default_factory=list)
    visited_y: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.grid_x = np.atleast_2d(np.asarray(self.grid_x, dtype=float))
        self.grid_y = np.atleast_2d(np.asarray(self.grid_y, dtype=float))
        if self.grid_x.shape[0] != self.grid_y.shape[0]:
            raise ValueError("grid_x and grid_y must have matching lengths")

    def add_visited(self, x: np.ndarray, y: np.ndarray) -> None:
        self.visited_x.append(np.asarray(x, dtype=float).ravel())
        self.visited_y.append(np.asarray(y, dtype=float).ravel())

    def _all_points(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.visited_x:
            return self.grid_x, self.grid_y
        return (
            np.vstack([self.grid_x, np.array(self.visited_x)]),
            np.vstack([self.grid_y, np.array(self.visited_y)]),
        )

    def instantaneous(
        self,
        theta: np.ndarray,
        ref: np.ndarray,
        t: int,
        x_t: np.ndarray,
        y_t: np.ndarray,
        constraint: CostConstraint | None = None,
        weights: CostWeights | None = None,
    ) -> float:
        """max over known points of S(y)(1 - C(x,t)) minus the same at x_t.

        The candidate (x_t, y_t) participates in the max through the same
        arithmetic, so the result is >= 0 by construction.
        """
        x_t = np.asarray(x_t, dtype=float).ravel()
        y_t = np.asarray(y_t, dtype=float).ravel()
        xs, ys = self._all_points()
        xs = np.vstack([xs, x_t[None, :]])
        ys = np.vstack([ys, y_t[None, :]])
        scal = chebyshev_batch(ys, theta, ref)
        if constraint is not None and weights is not None:
            penalty = 1.0 - cost_batch(xs, t, constraint, weights)
            values = scal * penalty
        else:
            values = scal
        return float(np.max(values) - values[-1])


class LedgerInvariantError(RuntimeError):
    """A negative instantaneous regret reached the ledger: internal bug."""


class RegretLedger:
    """Per-iteration instantaneous, cumulative, and average regret."""

    def __init__(self) -> None:
        self.instantaneous: list[float] = []
        self.cumulative: list[float] = []
        self.average: list[float] = []

    def append(self, r_t: float) -> None:
        if not np.isfinite(r_t):
            raise LedgerInvariantError(f"non-finite instantaneous regret {r_t}")
        if r_t < 0.0:
            raise LedgerInvariantError(f"negative instantaneous regret {r_t}")
        total = (self.cumulative[-1] if self.cumulative else 0.0) + r_t
        self.instantaneous.append(float(r_t))
        self.cumulative.append(float(total))
        self.average.append(float(total / len(self.instantaneous)))

    def __len__(self) -> int:
        return len(self.instantaneous)


def usage_sums(xs: np.ndarray) -> np.ndarray:
    """Per-dimension sum of selected inputs over a run (normalized units)."""
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        return np.zeros(xs.shape[1] if xs.ndim == 2 else 0)
    return np.sum(np.atleast_2d(xs), axis=0)

"""Chebyshev scalarization of objective vectors and weight sampling.

The scalarizer collapses an M-vector of (maximization-oriented, normalized)
objectives to min_m theta_m * (y_m - R_m). With the reference point R
strictly below the attainable region every term is positive, and sweeping
theta over the simplex recovers each point of a non-dominated front as the
unique maximizer.
"""

from __future__ import annotations

import itertools

import numpy as np

# Reference point in the normalized objective space: objectives are mapped to
# [0, 1] with maximization orientation, so a small negative offset keeps
# y_m - R_m strictly positive everywhere.
REFERENCE_OFFSET = -0.01


def default_reference(n_objectives: int) -> np.ndarray:
    """Fixed reference point (-0.01, ..., -0.01) in normalized space."""
    return np.full(n_objectives, REFERENCE_OFFSET)


def chebyshev(y: np.ndarray, theta: np.ndarray, ref: np.ndarray) -> float:
    """min over objectives of theta_m * (y_m - ref_m)."""
    y = np.asarray(y, dtype=float).ravel()
    theta = np.asarray(theta, dtype=float).ravel()
    ref = np.asarray(ref, dtype=float).ravel()
    if not (y.shape == theta.shape == ref.shape):
        raise ValueError(
            f"dimension mismatch: y {y.shape}, theta {theta.shape}, ref {ref.shape}"
        )
    return float(np.min(theta * (y - ref)))


def chebyshev_batch(ys: np.ndarray, theta: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Row-wise Chebyshev values for ys of shape (n, M)."""
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    theta = np.asarray(theta, dtype=float).ravel()
    ref = np.asarray(ref, dtype=float).ravel()
    if ys.shape[1] != theta.shape[0] or ys.shape[1] != ref.shape[0]:
        raise ValueError(
            f"dimension mismatch: ys {ys.shape}, theta {theta.shape}, ref {ref.shape}"
        )
    return np.min(theta[None, :] * (ys - ref[None, :]), axis=1)


def sample_theta(rng: np.random.Generator, n_objectives: int) -> np.ndarray:
    """Draw theta uniformly on the (M-1)-simplex.

    M independent unit-rate exponentials normalized by their sum; components
    are non-negative and sum to one.
    """
    if n_objectives < 2:
        raise ValueError(f"need at least two objectives, got {n_objectives}")
    draws = rng.standard_exponential(n_objectives)
    return draws / draws.sum()


def theta_grid(n_objectives: int, step: float = 0.01) -> np.ndarray:
    """Lattice of simplex weight vectors with the given component step."""
    n_steps = int(round(1.0 / step))
    if n_objectives == 2:
        a = np.linspace(0.0, 1.0, n_steps + 1)
        return np.column_stack([a, 1.0 - a])
    grid = []
    for parts in itertools.product(range(n_steps + 1), repeat=n_objectives - 1):
        if sum(parts) <= n_steps:
            rest = n_steps - sum(parts)
            grid.append([p / n_steps for p in parts] + [rest / n_steps])
    return np.array(grid)


def _mutually_non_dominated(front: np.ndarray) -> bool:
    n = front.shape[0]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if np.all(front[i] >= front[j]) and not np.array_equal(front[i], front[j]):
                return False
    return True


def verify_proposition1(
    front: np.ndarray, ref: np.ndarray, thetas: np.ndarray
) -> np.ndarray:
    """For each front point: does some theta make it the unique scalar argmax?

    Test oracle for the weight-sweep coverage property; not used inside the
    optimization loop. The front must be mutually non-dominated and ref must
    lie strictly below every point componentwise.
    """
    front = np.atleast_2d(np.asarray(front, dtype=float))
    ref = np.asarray(ref, dtype=float).ravel()
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    if front.shape[0] == 0:
        raise ValueError("front must be non-empty")
    if not _mutually_non_dominated(front):
        raise ValueError("front contains a dominated point")
    if np.any(front <= ref[None, :]):
        raise ValueError("reference point must lie strictly below the front")

    # scores[i, t] = chebyshev value of point i under theta t
    scores = np.min(
        thetas[None, :, :] * (front[:, None, :] - ref[None, None, :]), axis=2
    )
    covered = np.zeros(front.shape[0], dtype=bool)
    for t in range(thetas.shape[0]):
        col = scores[:, t]
        best = np.max(col)
        winners = np.flatnonzero(col == best)
        if winners.size == 1:
            covered[winners[0]] = True
    return covered

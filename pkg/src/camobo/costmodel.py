"""Time-decaying evaluation-cost model over ordered search-space dimensions.

A cost constraint is an ordered tuple of dimension indices, most expensive
first. Each constrained dimension j gets a fixed weight w_j (flat-Dirichlet
draw, sampled once per run) and a rate lambda = 1/(w_j t + 1) that shrinks as
the iteration count t grows. The cost of a candidate x is

    C(x, t) = prod_j (1 - lambda_j * exp(-lambda_j * x_j))

i.e. a product of one-minus-exponential-density terms evaluated at the
constrained coordinates. C is strictly inside (0, 1), increases in each
constrained coordinate and in t, and tends to 1 as t -> infinity, so the
acquisition penalty (1 - C) decays over time.

Two weight-assignment policies ship because the ordering that actually
suppresses expensive dimensions is the opposite of the naive one:

* ``paper_literal``   - the most expensive dimension gets the LARGEST weight,
  hence the smallest rate and the flattest penalty in its coordinate.
* ``behavior_matching`` (default) - the most expensive dimension gets the
  SMALLEST weight, hence the largest rate and the steepest penalty, which is
  what drives its usage down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PAPER_LITERAL = "paper_literal"
BEHAVIOR_MATCHING = "behavior_matching"
POLICIES = (PAPER_LITERAL, BEHAVIOR_MATCHING)
DEFAULT_POLICY = BEHAVIOR_MATCHING


@dataclass(frozen=True)
class CostConstraint:
    """Ordered tuple of 1-based dimension indices, most expensive first."""

    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        idx = tuple(int(i) for i in self.indices)
        if len(idx) < 1:
            raise ValueError("cost constraint needs at least one dimension")
        if any(i < 1 for i in idx):
            raise ValueError(f"dimension indices are 1-based, got {idx}")
        if len(set(idx)) != len(idx):
            raise ValueError(f"dimension indices must be distinct, got {idx}")
        object.__setattr__(self, "indices", idx)

    @property
    def k(self) -> int:
        return len(self.indices)

    def validate_for(self, n_dims: int) -> None:
        if max(self.indices) > n_dims:
            raise ValueError(
                f"constraint index {max(self.indices)} exceeds dimensionality {n_dims}"
            )

    def zero_based(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=int) - 1


@dataclass(frozen=True)
class CostWeights:
    """Per-dimension weights, positive, summing to one, ordered per policy."""

    w: tuple[float, ...]
    policy: str = DEFAULT_POLICY

    def __post_init__(self) -> None:
        w = tuple(float(v) for v in self.w)
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}; expected one of {POLICIES}")
        if len(w) < 1:
            raise ValueError("need at least one weight")
        if any(v <= 0.0 for v in w):
            raise ValueError(f"weights must be strictly positive, got {w}")
        if abs(sum(w) - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got sum {sum(w)}")
        if len(w) > 1:
            diffs = np.diff(w)
            if self.policy == PAPER_LITERAL and not np.all(diffs < 0):
                raise ValueError("paper_literal weights must strictly decrease along the constraint")
            if self.policy == BEHAVIOR_MATCHING and not np.all(diffs > 0):
                raise ValueError("behavior_matching weights must strictly increase along the constraint")
        object.__setattr__(self, "w", w)

    @property
    def k(self) -> int:
        return len(self.w)


def sample_weights(rng: np.random.Generator, k: int, policy: str = DEFAULT_POLICY) -> CostWeights:
    """Flat-Dirichlet weights, sorted and assigned to the constraint order.

    Drawn once per optimization run and held fixed. paper_literal sorts
    descending (largest weight on the most expensive dimension),
    behavior_matching ascending.
    """
    if k < 1:
        raise ValueError(f"need k >= 1 constrained dimensions, got {k}")
    draws = rng.standard_exponential(k)
    w = np.sort(draws / draws.sum())
    if policy == PAPER_LITERAL:
        w = w[::-1]
    return CostWeights(w=tuple(w), policy=policy)


def lambda_of(w_j: float, t: int) -> float:
    """Exponential rate 1/(w_j * t + 1); always in (0, 1) for w_j > 0, t >= 1."""
    if w_j <= 0.0:
        raise ValueError(f"weight must be positive, got {w_j}")
    if t < 1:
        raise ValueError(f"iteration must be >= 1, got {t}")
    return 1.0 / (w_j * t + 1.0)


def pi_density(x_j: float, lam: float) -> float:
    """Exponential density lam * exp(-lam * x_j), evaluated deterministically.

    With 0 <= x_j <= 1 and 0 < lam < 1 the value lies in (0, lam].
    """
    if not 0.0 < lam < 1.0:
        raise ValueError(f"rate must lie in (0, 1), got {lam}")
    x_j = min(max(float(x_j), 0.0), 1.0)
    return lam * math.exp(-lam * x_j)


def cost(
    x: np.ndarray, t: int, constraint: CostConstraint, weights: CostWeights
) -> float:
    """C(x, t) for a single candidate; strictly inside (0, 1).

    Coordinates outside [0, 1] are clamped first; dimensions not named by the
    constraint never affect the value.
    """
    return float(cost_batch(np.asarray(x, dtype=float)[None, :], t, constraint, weights)[0])


def cost_batch(
    xs: np.ndarray, t: int, constraint: CostConstraint, weights: CostWeights
) -> np.ndarray:
    """Vectorized C(x, t) over candidate rows xs of shape (q, N)."""
    if weights.k != constraint.k:
        raise ValueError(
            f"constraint has {constraint.k} dimensions but weights has {weights.k}"
        )
    if t < 1:
        raise ValueError(f"iteration must be >= 1, got {t}")
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    constraint.validate_for(xs.shape[1])
    xc = np.clip(xs[:, constraint.zero_based()], 0.0, 1.0)
    lam = 1.0 / (np.asarray(weights.w) * t + 1.0)
    pi = lam[None, :] * np.exp(-lam[None, :] * xc)
    return np.prod(1.0 - pi, axis=1)

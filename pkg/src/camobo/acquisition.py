"""Scalarized-UCB acquisition with an optional evaluation-cost penalty.

Q(x) applies the Chebyshev scalarizer to the per-objective upper confidence
bounds mu_m + sqrt(beta_t) * sigma_m. The cost-aware acquisition multiplies
Q by (1 - C(x, t)); with the cost inputs absent C is taken as zero and the
selection reduces to the plain multi-objective UCB baseline.

Maximization is derivative-free: a scrambled Sobol candidate sweep followed
by one pass of coordinate-wise golden-section refinement around the best
candidate. The min in Q makes the surface non-differentiable, so nothing
gradient-based is attempted.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from .costmodel import CostConstraint, CostWeights, cost_batch

DEFAULT_CANDIDATE_COUNT = 2000
DEFAULT_REFINE_STEPS = 20

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class AcquisitionFailure(RuntimeError):
    """Raised when no candidate evaluates to a finite acquisition value."""


def beta(t: int, cardinality: int) -> float:
    """Exploration schedule 2 ln(t^2 |X| / sqrt(2 pi)), floored at zero."""
    if t < 1:
        raise ValueError(f"iteration must be >= 1, got {t}")
    if cardinality < 2:
        raise ValueError(f"candidate cardinality must be >= 2, got {cardinality}")
    value = 2.0 * math.log(t * t * cardinality / math.sqrt(2.0 * math.pi))
    return max(0.0, value)


@dataclass(frozen=True)
class AcquisitionContext:
    """Everything needed to score a candidate at iteration t.

    models expose predict(X) -> (mean, variance) per objective; constraint
    and weights are both present for the cost-aware mode and both absent for
    the baseline.
    """

    models: Sequence
    theta: np.ndarray
    ref: np.ndarray
    t: int
    n_dims: int
    candidate_count: int = DEFAULT_CANDIDATE_COUNT
    refine_steps: int = DEFAULT_REFINE_STEPS
    constraint: CostConstraint | None = None
    weights: CostWeights | None = None
    beta_override: float | None = None
    beta_value: float = field(init=False)

    def __post_init__(self) -> None:
        if self.t < 1:
            raise ValueError(f"iteration must be >= 1, got {self.t}")
        if (self.constraint is None) != (self.weights is None):
            raise ValueError("constraint and weights must be supplied together")
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=float).ravel())
        object.__setattr__(self, "ref", np.asarray(self.ref, dtype=float).ravel())
        value = self.beta_override if self.beta_override is not None else beta(self.t, self.candidate_count)
        object.__setattr__(self, "beta_value", value)

    @property
    def cost_aware(self) -> bool:
        return self.constraint is not None


def ucb_batch(xs: np.ndarray, ctx: AcquisitionContext) -> np.ndarray:
    """Scalarized UCB Q for candidate rows xs of shape (q, N)."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    sqrt_beta = math.sqrt(ctx.beta_value)
    scaled = np.empty((xs.shape[0], len(ctx.models)))
    for m, model in enumerate(ctx.models):
        mean, var = model.predict(xs)
        ucb = mean + sqrt_beta * np.sqrt(var)
        scaled[:, m] = ctx.theta[m] * (ucb - ctx.ref[m])
    return np.min(scaled, axis=1)


def scalarized_ucb(x: np.ndarray, ctx: AcquisitionContext) -> float:
    """Q at a single candidate."""
    return float(ucb_batch(np.asarray(x, dtype=float)[None, :], ctx)[0])


def acquisition_batch(
    xs: np.ndarray, ctx: AcquisitionContext
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(alpha, Q, C) rows for candidates xs; C is zero without cost inputs."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    q = ucb_batch(xs, ctx)
    if ctx.cost_aware:
        c = cost_batch(xs, ctx.t, ctx.constraint, ctx.weights)
        alpha = q * (1.0 - c)
    else:
        c = np.zeros(xs.shape[0])
        alpha = q.copy()
    return alpha, q, c


def ca_acquisition(x: np.ndarray, ctx: AcquisitionContext) -> tuple[float, float, float]:
    """(alpha, Q, C) at a single candidate, for logging."""
    alpha, q, c = acquisition_batch(np.asarray(x, dtype=float)[None, :], ctx)
    return float(alpha[0]), float(q[0]), float(c[0])


def _sobol_candidates(ctx: AcquisitionContext, rng: np.random.Generator) -> np.ndarray:
    engine = qmc.Sobol(d=ctx.n_dims, scramble=True, seed=rng)
    with warnings.catch_warnings():
        # candidate_count need not be a power of two
        warnings.simplefilter("ignore", UserWarning)
        return engine.random(ctx.candidate_count)


def _alpha_at(x: np.ndarray, ctx: AcquisitionContext) -> float:
    return float(acquisition_batch(x[None, :], ctx)[0][0])


def _golden_section_coordinate(
    x: np.ndarray, dim: int, ctx: AcquisitionContext, steps: int
) -> tuple[float, float]:
    """Maximize alpha along coordinate dim over [0, 1]; returns (value, coord)."""

    def g(coord: float) -> float:
        trial = x.copy()
        trial[dim] = coord
        return _alpha_at(trial, ctx)

    a, b = 0.0, 1.0
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = g(c), g(d)
    for _ in range(steps):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = g(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = g(d)
    return (fc, c) if fc > fd else (fd, d)


def maximize_acquisition(
    ctx: AcquisitionContext, rng: np.random.Generator
) -> tuple[np.ndarray, dict]:
    """Pick the acquisition argmax over Sobol candidates, then refine.

    Ties among candidates break toward the earliest in sequence order, and a
    refinement move is only accepted when it strictly improves alpha, so the
    returned incumbent is never worse than the best raw candidate.
    """
    candidates = _sobol_candidates(ctx, rng)
    alpha, q, c = acquisition_batch(candidates, ctx)
    finite = np.isfinite(alpha)
    if not finite.any():
        raise AcquisitionFailure(
            f"all {ctx.candidate_count} candidates evaluated to non-finite acquisition values"
        )
    masked = np.where(finite, alpha, -np.inf)
    best_idx = int(np.argmax(masked))
    incumbent = candidates[best_idx].copy()
    best_alpha = float(alpha[best_idx])
    raw_alpha = best_alpha

    moved = False
    for dim in range(ctx.n_dims):
        value, coord = _golden_section_coordinate(incumbent, dim, ctx, ctx.refine_steps)
        if math.isfinite(value) and value > best_alpha:
            incumbent[dim] = coord
            best_alpha = value
            moved = True

    if moved:
        final_alpha, final_q, final_c = ca_acquisition(incumbent, ctx)
    else:
        final_alpha, final_q, final_c = float(alpha[best_idx]), float(q[best_idx]), float(c[best_idx])
    diagnostics = {
        "alpha": final_alpha,
        "q": final_q,
        "c": final_c,
        "raw_alpha": raw_alpha,
        "raw_index": best_idx,
        "beta": ctx.beta_value,
    }
    return incumbent, diagnostics

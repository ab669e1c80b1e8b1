"""Synthetic multi-objective benchmark problems with normalization.

Each problem maps the normalized search cube [0,1]^N onto its raw box and
carries fixed objective-normalization bounds computed once from a large
low-discrepancy reference grid. Objectives are negated when minimized and
min-max scaled so the optimizer always maximizes values in [0, 1]; keeping
the bounds fixed (rather than tracking the running data) keeps the GP
targets stationary.

cross_in_tray and booth are implemented in two variants. The default forms
follow the source formula block used throughout the experiments (cross with
the "100" inside the exponential, booth as a DIFFERENCE of squares); the
``standard_forms`` switch flips cross to "1" and booth to the usual sum of
squares.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import qmc

REFERENCE_GRID_SIZE = 100_000
_EXP_ARG_CAP = 700.0  # keeps exp() finite for inputs far outside the box

PROBLEM_NAMES = ("zdt3", "cross_holder", "matyas_booth")


class InvalidProblemError(ValueError):
    """Degenerate normalization bounds or an unknown problem name."""


def zdt3(x: np.ndarray) -> np.ndarray:
    """ZDT3 with N inputs in [0,1]: disconnected front, both objectives minimized."""
    x = np.asarray(x, dtype=float).ravel()
    f1 = x[0]
    g = 1.0 + 9.0 * np.sum(x[1:]) / (len(x) - 1)
    h = 1.0 - math.sqrt(f1 / g) - (f1 / g) * math.sin(10.0 * math.pi * f1)
    return np.array([f1, g * h])


def _guarded_exp(arg: float) -> float:
    return math.exp(min(arg, _EXP_ARG_CAP))


def cross_in_tray(x: np.ndarray, standard_form: bool = False) -> float:
    """Cross-in-tray value at x (minimized).

    The default keeps the constant 100 inside the exponential; the standard
    variant replaces it with 1. The exponential argument is capped so the
    function stays finite everywhere.
    """
    x = np.asarray(x, dtype=float).ravel()
    const = 1.0 if standard_form else 100.0
    r = math.hypot(x[0], x[1])
    inner = abs(math.sin(x[0]) * math.sin(x[1]) * _guarded_exp(abs(const - r / math.pi)))
    return -1e-4 * (inner + 1.0) ** 0.1


def holder_table(x: np.ndarray) -> float:
    """Holder-table value at x (minimized)."""
    x = np.asarray(x, dtype=float).ravel()
    r = math.hypot(x[0], x[1])
    return -abs(math.sin(x[0]) * math.cos(x[1]) * _guarded_exp(abs(1.0 - r / math.pi)))


def matyas(x: np.ndarray) -> float:
    """Matyas value at x (minimized)."""
    x = np.asarray(x, dtype=float).ravel()
    return 0.26 * (x[0] ** 2 + x[1] ** 2) - 0.48 * x[0] * x[1]


def booth(x: np.ndarray, standard_form: bool = False) -> float:
    """Booth value at x (minimized).

    The default is the difference-of-squares form; the standard variant uses
    the usual sum of squares with minimum 0 at (1, 3).
    """
    x = np.asarray(x, dtype=float).ravel()
    a = (x[0] + 2.0 * x[1] - 7.0) ** 2
    b = (2.0 * x[0] + x[1] - 5.0) ** 2
    return a + b if standard_form else a - b


@dataclass(frozen=True)
class BenchmarkProblem:
    """A named objective suite with fixed scaling in and out of [0,1]."""

    name: str
    n_dims: int
    n_objectives: int
    raw_bounds: tuple[tuple[float, float], ...]
    senses: tuple[str, ...]
    evaluate_raw: Callable[[np.ndarray], np.ndarray]
    obj_lo: np.ndarray
    obj_hi: np.ndarray

    def denormalize_x(self, u: np.ndarray) -> np.ndarray:
        """Map normalized u in [0,1]^N to the raw box."""
        u = np.asarray(u, dtype=float).ravel()
        lo = np.array([b[0] for b in self.raw_bounds])
        hi = np.array([b[1] for b in self.raw_bounds])
        return lo + u * (hi - lo)

    def oriented(self, raw_y: np.ndarray) -> np.ndarray:
        """Flip minimized objectives so larger is always better."""
        raw_y = np.asarray(raw_y, dtype=float).ravel()
        signs = np.array([-1.0 if s == "min" else 1.0 for s in self.senses])
        return signs * raw_y

    def normalize_objectives(self, raw_y: np.ndarray) -> np.ndarray:
        """Orient then min-max scale by the grid bounds, clamped to [0,1]."""
        z = self.oriented(raw_y)
        return np.clip((z - self.obj_lo) / (self.obj_hi - self.obj_lo), 0.0, 1.0)

    def denormalize_objectives(self, norm_y: np.ndarray) -> np.ndarray:
        """Inverse of normalize_objectives for in-range values."""
        norm_y = np.asarray(norm_y, dtype=float).ravel()
        z = self.obj_lo + norm_y * (self.obj_hi - self.obj_lo)
        signs = np.array([-1.0 if s == "min" else 1.0 for s in self.senses])
        return z * signs

    def evaluate_normalized(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(raw objectives, normalized objectives) at a normalized input."""
        raw = np.asarray(self.evaluate_raw(self.denormalize_x(u)), dtype=float).ravel()
        return raw, self.normalize_objectives(raw)


def _reference_grid(n_dims: int, size: int) -> np.ndarray:
    engine = qmc.Sobol(d=n_dims, scramble=False)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        return engine.random(size)


def _build(
    name: str,
    n_dims: int,
    raw_bounds: tuple[tuple[float, float], ...],
    senses: tuple[str, ...],
    fn: Callable[[np.ndarray], np.ndarray],
    grid_size: int,
) -> BenchmarkProblem:
    lo = np.array([b[0] for b in raw_bounds])
    hi = np.array([b[1] for b in raw_bounds])
    grid = lo + _reference_grid(n_dims, grid_size) * (hi - lo)
    signs = np.array([-1.0 if s == "min" else 1.0 for s in senses])
    zs = np.array([signs * np.asarray(fn(row), dtype=float) for row in grid])
    obj_lo = zs.min(axis=0)
    obj_hi = zs.max(axis=0)
    if np.any(obj_hi - obj_lo < 1e-12):
        raise InvalidProblemError(
            f"problem {name!r} has a degenerate objective range on the reference grid"
        )
    return BenchmarkProblem(
        name=name,
        n_dims=n_dims,
        n_objectives=len(senses),
        raw_bounds=raw_bounds,
        senses=senses,
        evaluate_raw=fn,
        obj_lo=obj_lo,
        obj_hi=obj_hi,
    )


@functools.lru_cache(maxsize=None)
def make_problem(
    name: str, standard_forms: bool = False, grid_size: int = REFERENCE_GRID_SIZE
) -> BenchmarkProblem:
    """Build a benchmark by name: zdt3, cross_holder, or matyas_booth.

    Instances are immutable and cached, so repeated runs share the reference
    grid work.
    """
    if name == "zdt3":
        return _build(
            name,
            n_dims=5,
            raw_bounds=(((0.0, 1.0),) * 5),
            senses=("min", "min"),
            fn=zdt3,
            grid_size=grid_size,
        )
    if name == "cross_holder":
        def fn(x: np.ndarray) -> np.ndarray:
            return np.array([cross_in_tray(x, standard_forms), holder_table(x)])

        return _build(
            name,
            n_dims=2,
            raw_bounds=(((-10.0, 10.0),) * 2),
            senses=("min", "min"),
            fn=fn,
            grid_size=grid_size,
        )
    if name == "matyas_booth":
        def fn(x: np.ndarray) -> np.ndarray:
            return np.array([matyas(x), booth(x, standard_forms)])

        return _build(
            name,
            n_dims=2,
            raw_bounds=(((-10.0, 10.0),) * 2),
            senses=("min", "min"),
            fn=fn,
            grid_size=grid_size,
        )
    raise InvalidProblemError(
        f"unknown problem {name!r}; expected one of {PROBLEM_NAMES} or 'external'"
    )

"""Exact Gaussian-process regression with a squared-exponential kernel.

One :class:`GPModel` is fit per objective; a multi-objective run holds M
independent models. Inputs live in the normalized search space [0, 1]^N and
targets are mean-centered internally (zero prior mean), so predictions are
un-centered on the way out.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

JITTER_FLOOR = 1e-8
JITTER_MAX = 1e-4

LENGTHSCALE_BOUNDS = (0.01, 10.0)
SIGNAL_VARIANCE_BOUNDS = (0.01, 100.0)
NOISE_VARIANCE_BOUNDS = (1e-6, 1.0)

DEFAULT_HYPER_STARTS = 5


class FactorizationError(RuntimeError):
    """Raised when (K + sigma_n^2 I) cannot be factorized even at max jitter."""


@dataclass(frozen=True)
class KernelHyper:
    """SE-kernel hyperparameters (isotropic lengthscale).

    noise_variance is floored at the jitter floor 1e-8 so the Gram matrix
    always has a strictly positive diagonal shift.
    """

    lengthscale: float
    signal_variance: float
    noise_variance: float

    def __post_init__(self) -> None:
        if not (self.lengthscale > 0.0 and math.isfinite(self.lengthscale)):
            raise ValueError(f"lengthscale must be positive, got {self.lengthscale}")
        if not (self.signal_variance > 0.0 and math.isfinite(self.signal_variance)):
            raise ValueError(f"signal_variance must be positive, got {self.signal_variance}")
        if not (self.noise_variance >= 0.0 and math.isfinite(self.noise_variance)):
            raise ValueError(f"noise_variance must be non-negative, got {self.noise_variance}")
        if self.noise_variance < JITTER_FLOOR:
            object.__setattr__(self, "noise_variance", JITTER_FLOOR)


DEFAULT_HYPER = KernelHyper(lengthscale=0.5, signal_variance=1.0, noise_variance=1e-4)


def se_kernel(x: np.ndarray, x2: np.ndarray, hyper: KernelHyper) -> float:
    """Squared-exponential covariance sv * exp(-||x - x2||^2 / (2 l^2))."""
    x = np.asarray(x, dtype=float).ravel()
    x2 = np.asarray(x2, dtype=float).ravel()
    if x.shape != x2.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {x2.shape}")
    sq = float(np.sum((x - x2) ** 2))
    return hyper.signal_variance * math.exp(-sq / (2.0 * hyper.lengthscale**2))


def kernel_matrix(xa: np.ndarray, xb: np.ndarray, hyper: KernelHyper) -> np.ndarray:
    """Cross-covariance matrix between row sets xa (n, d) and xb (m, d)."""
    xa = np.atleast_2d(np.asarray(xa, dtype=float))
    xb = np.atleast_2d(np.asarray(xb, dtype=float))
    if xa.shape[1] != xb.shape[1]:
        raise ValueError(f"dimension mismatch: {xa.shape[1]} vs {xb.shape[1]}")
    sq = (
        np.sum(xa**2, axis=1)[:, None]
        + np.sum(xb**2, axis=1)[None, :]
        - 2.0 * (xa @ xb.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return hyper.signal_variance * np.exp(-sq / (2.0 * hyper.lengthscale**2))


def _factorize(k_mat: np.ndarray, noise_variance: float) -> tuple[np.ndarray, float]:
    """Lower Cholesky of K + (noise + jitter) I, escalating jitter 1e-8..1e-4."""
    n = k_mat.shape[0]
    eye = np.eye(n)
    jitter = 0.0
    while True:
        try:
            lower = cholesky(k_mat + (noise_variance + jitter) * eye, lower=True)
            return lower, jitter
        except np.linalg.LinAlgError:
            pass
        except ValueError:
            pass
        if jitter == 0.0:
            jitter = JITTER_FLOOR
        elif jitter < JITTER_MAX:
            jitter = min(jitter * 10.0, JITTER_MAX)
        else:
            eigs = np.linalg.eigvalsh(k_mat)
            raise FactorizationError(
                f"Cholesky failed for {n}x{n} Gram matrix at max jitter "
                f"{JITTER_MAX:g} (noise_variance={noise_variance:g}, "
                f"min eigenvalue={eigs[0]:.3e})"
            )


@dataclass(frozen=True)
class GPModel:
    """Immutable factorized GP posterior for one objective."""

    hyper: KernelHyper
    train_inputs: np.ndarray
    train_targets: np.ndarray
    target_mean: float
    factor: np.ndarray
    alpha: np.ndarray
    jitter: float

    def predict(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and variance at query rows x (q, d).

        Variance is clamped to [0, inf); it never exceeds the prior
        signal variance.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        k_star = kernel_matrix(self.train_inputs, x, self.hyper)
        mean = k_star.T @ self.alpha + self.target_mean
        v = solve_triangular(self.factor, k_star, lower=True)
        var = self.hyper.signal_variance - np.sum(v**2, axis=0)
        np.maximum(var, 0.0, out=var)
        return mean, var

    def posterior(self, x: np.ndarray) -> tuple[float, float]:
        """Posterior (mean, variance) at a single point."""
        mean, var = self.predict(np.asarray(x, dtype=float).reshape(1, -1))
        return float(mean[0]), float(var[0])


@dataclass(frozen=True)
class PriorModel:
    """No-data prior with the GPModel prediction interface: mean 0, var sv."""

    hyper: KernelHyper

    def predict(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        n = x.shape[0]
        return np.zeros(n), np.full(n, self.hyper.signal_variance)

    def posterior(self, x: np.ndarray) -> tuple[float, float]:
        return 0.0, self.hyper.signal_variance


def fit(x: np.ndarray, y: np.ndarray, hyper: KernelHyper) -> GPModel:
    """Fit an exact GP to inputs x (n, d) in [0,1]^d and targets y (n,).

    Targets are mean-centered before solving; the mean is restored by
    predict(). Gram factorization escalates jitter on failure and raises
    FactorizationError past the 1e-4 cap.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if x.shape[0] == 0:
        raise ValueError("fit requires at least one observation")
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"inputs/targets length mismatch: {x.shape[0]} vs {y.shape[0]}")
    target_mean = float(np.mean(y))
    centered = y - target_mean
    k_mat = kernel_matrix(x, x, hyper)
    lower, jitter = _factorize(k_mat, hyper.noise_variance)
    alpha = cho_solve((lower, True), centered)
    return GPModel(
        hyper=hyper,
        train_inputs=x,
        train_targets=y,
        target_mean=target_mean,
        factor=lower,
        alpha=alpha,
        jitter=jitter,
    )


def log_marginal_likelihood(x: np.ndarray, y: np.ndarray, hyper: KernelHyper) -> float:
    """Gaussian log evidence of the mean-centered targets under hyper.

    -1/2 y^T alpha - sum(log diag L) - (n/2) log(2 pi), with L the factor of
    K + sigma_n^2 I.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n = y.shape[0]
    if n < 2:
        raise ValueError("log marginal likelihood requires at least two observations")
    centered = y - float(np.mean(y))
    k_mat = kernel_matrix(x, x, hyper)
    lower, _ = _factorize(k_mat, hyper.noise_variance)
    alpha = cho_solve((lower, True), centered)
    return float(
        -0.5 * centered @ alpha
        - np.sum(np.log(np.diag(lower)))
        - 0.5 * n * math.log(2.0 * math.pi)
    )


def _clip_hyper(hyper: KernelHyper) -> KernelHyper:
    return KernelHyper(
        lengthscale=float(np.clip(hyper.lengthscale, *LENGTHSCALE_BOUNDS)),
        signal_variance=float(np.clip(hyper.signal_variance, *SIGNAL_VARIANCE_BOUNDS)),
        noise_variance=float(np.clip(hyper.noise_variance, *NOISE_VARIANCE_BOUNDS)),
    )


def _lml_or_ninf(x: np.ndarray, y: np.ndarray, hyper: KernelHyper) -> float:
    try:
        value = log_marginal_likelihood(x, y, hyper)
    except FactorizationError:
        return -math.inf
    return value if math.isfinite(value) else -math.inf


_BOUNDS = (LENGTHSCALE_BOUNDS, SIGNAL_VARIANCE_BOUNDS, NOISE_VARIANCE_BOUNDS)


def optimize_hyperparameters(
    x: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    current: KernelHyper | None = None,
    n_starts: int = DEFAULT_HYPER_STARTS,
    n_sweeps: int = 2,
) -> KernelHyper:
    """Maximize the log marginal likelihood by multi-start coordinate search.

    Each start runs coordinate descent over (lengthscale, signal_variance,
    noise_variance): a coarse log-grid over the full bound range followed by a
    finer log-grid around the coarse winner. Deterministic given the rng
    state. If every evaluation fails to factorize, the previous
    hyperparameters are returned with a warning.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] < 2:
        raise ValueError("hyperparameter optimization requires at least two observations")

    base = _clip_hyper(current if current is not None else DEFAULT_HYPER)
    starts = [np.array([base.lengthscale, base.signal_variance, base.noise_variance])]
    for _ in range(max(0, n_starts - 1)):
        draw = [
            math.exp(rng.uniform(math.log(lo), math.log(hi))) for lo, hi in _BOUNDS
        ]
        starts.append(np.array(draw))

    def score(params: np.ndarray) -> float:
        hyper = KernelHyper(*params)
        return _lml_or_ninf(x, y, hyper)

    best_params = starts[0].copy()
    best_score = -math.inf
    for start in starts:
        params = start.copy()
        value = score(params)
        for _ in range(n_sweeps):
            for coord, (lo, hi) in enumerate(_BOUNDS):
                coarse = np.geomspace(lo, hi, 13)
                grid = np.unique(np.append(coarse, params[coord]))
                vals = []
                for g in grid:
                    trial = params.copy()
                    trial[coord] = g
                    vals.append(score(trial))
                k = int(np.argmax(vals))
                center = grid[k]
                fine = np.clip(np.geomspace(center / 3.0, center * 3.0, 9), lo, hi)
                grid2 = np.unique(np.append(fine, center))
                vals2 = []
                for g in grid2:
                    trial = params.copy()
                    trial[coord] = g
                    vals2.append(score(trial))
                k2 = int(np.argmax(vals2))
                if vals2[k2] > -math.inf:
                    params[coord] = grid2[k2]
                    value = vals2[k2]
        if value > best_score:
            best_score = value
            best_params = params.copy()

    if not math.isfinite(best_score):
        warnings.warn(
            "all hyperparameter starts failed factorization; keeping previous values",
            RuntimeWarning,
        )
        return base
    return KernelHyper(*best_params)

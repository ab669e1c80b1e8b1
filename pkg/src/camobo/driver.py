"""The optimization loop: fit, scalarize, acquire, evaluate, account.

A run seeds the dataset with uniform-random initial observations, then for
t = 1..T refits hyperparameters on schedule, fits one GP per objective on
the normalized data, samples a fresh scalarization weight vector, maximizes
the (optionally cost-penalized) acquisition, evaluates the objectives at the
selected point, and updates the Pareto archive, hypervolume, and regret
ledger.

Determinism: a run consumes five independent RNG streams spawned from the
seed (initial design, cost weights, theta, acquisition candidates,
hyperparameter search). The cost-weight stream is drawn from only in
cost-aware mode, which leaves every other stream untouched, so a cost-aware
run with the penalty forced to zero reproduces the baseline trace exactly.
"""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from . import acquisition as acq
from . import benchmarks, costmodel, gp, metrics, scalarization

logger = logging.getLogger(__name__)

MODE_CA_MOBO = "ca_mobo"
MODE_MO_UCB = "mo_ucb"
MODES = (MODE_CA_MOBO, MODE_MO_UCB)

DEFAULT_ORACLE_GRID_SIZE = 10_000
DEFAULT_N_INIT = 5
DEFAULT_HYPER_REFIT_PERIOD = 10
EXTERNAL_TIMEOUT = 600.0


class RunAborted(RuntimeError):
    """A run failed mid-flight; carries the partial trace for flushing."""

    def __init__(self, message: str, partial: "RunTrace" | None = None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class ExternalSpec:
    """Configuration of an external objective child process."""

    command: tuple[str, ...]
    raw_bounds: tuple[tuple[float, float], ...]
    senses: tuple[str, ...] | None = None
    objective_bounds: tuple[tuple[float, float], ...] | None = None
    timeout: float = EXTERNAL_TIMEOUT

    def __post_init__(self) -> None:
        if len(self.command) == 0:
            raise ValueError("external command must be non-empty")
        for lo, hi in self.raw_bounds:
            if not hi > lo:
                raise ValueError(f"invalid raw bound ({lo}, {hi})")


@dataclass(frozen=True)
class RunConfig:
    """Full experiment specification for one run (or a family of repeats)."""

    problem: str
    iterations: int
    n_init: int = DEFAULT_N_INIT
    seed: int = 0
    mode: str = MODE_CA_MOBO
    cost_indices: tuple[int, ...] | None = None
    policy: str = costmodel.DEFAULT_POLICY
    candidate_count: int = acq.DEFAULT_CANDIDATE_COUNT
    refine_steps: int = acq.DEFAULT_REFINE_STEPS
    hyper_refit_period: int = DEFAULT_HYPER_REFIT_PERIOD
    repeats: int = 1
    force_zero_cost: bool = False
    standard_forms: bool = False
    oracle_grid_size: int = DEFAULT_ORACLE_GRID_SIZE
    benchmark_grid_size: int = benchmarks.REFERENCE_GRID_SIZE
    external: ExternalSpec | None = None

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.n_init < 2:
            raise ValueError(f"n_init must be >= 2, got {self.n_init}")
        if self.hyper_refit_period < 1:
            raise ValueError(f"hyper_refit_period must be >= 1, got {self.hyper_refit_period}")
        if self.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.policy not in costmodel.POLICIES:
            raise ValueError(f"policy must be one of {costmodel.POLICIES}, got {self.policy!r}")
        if self.mode == MODE_CA_MOBO:
            if not self.cost_indices:
                raise ValueError("ca_mobo mode requires cost_indices")
            costmodel.CostConstraint(indices=tuple(self.cost_indices))
        if self.problem == "external" and self.external is None:
            raise ValueError("problem 'external' requires an [external] section")


@dataclass
class IterationRecord:
    t: int
    x: np.ndarray
    y_raw: np.ndarray
    y_norm: np.ndarray
    theta: np.ndarray
    beta: float
    q: float
    c: float
    alpha: float
    regret_inst: float | None
    regret_cum: float | None
    regret_avg: float | None
    hypervolume: float


@dataclass
class RunTrace:
    config: RunConfig
    seed: int
    n_dims: int
    n_objectives: int
    init_x: np.ndarray
    init_y_raw: np.ndarray
    init_y_norm: np.ndarray
    records: list[IterationRecord] = field(default_factory=list)
    cost_weights: costmodel.CostWeights | None = None
    dominant: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)

    def selected_x(self) -> np.ndarray:
        if not self.records:
            return np.zeros((0, self.n_dims))
        return np.array([r.x for r in self.records])

    def usage(self) -> np.ndarray:
        return metrics.usage_sums(self.selected_x())


class _ExternalProblem:
    """Adapter giving an external objective the benchmark-problem surface.

    Objectives are oriented by the configured senses and normalized by fixed
    bounds when supplied, otherwise by the running min/max of the data seen
    so far (recomputed every observation; degenerate ranges map to 0.5).
    """

    def __init__(self, spec: ExternalSpec, n_objectives: int):
        self.spec = spec
        self.n_dims = len(spec.raw_bounds)
        self.n_objectives = n_objectives
        self.senses = spec.senses or ("min",) * n_objectives
        if len(self.senses) != n_objectives:
            raise ValueError(
                f"config declares {len(self.senses)} objective senses but the "
                f"evaluator declared {n_objectives} objectives"
            )
        self._signs = np.array([-1.0 if s == "min" else 1.0 for s in self.senses])
        self._seen_z: list[np.ndarray] = []
        if spec.objective_bounds is not None:
            if len(spec.objective_bounds) != n_objectives:
                raise ValueError("objective_bounds length must match objective count")
            lo = np.array([b[0] for b in spec.objective_bounds])
            hi = np.array([b[1] for b in spec.objective_bounds])
            zs = np.sort(np.stack([self._signs * lo, self._signs * hi]), axis=0)
            self._fixed = (zs[0], zs[1])
        else:
            self._fixed = None

    def denormalize_x(self, u: np.ndarray) -> np.ndarray:
        lo = np.array([b[0] for b in self.spec.raw_bounds])
        hi = np.array([b[1] for b in self.spec.raw_bounds])
        return lo + np.asarray(u, dtype=float).ravel() * (hi - lo)

    def oriented(self, raw_y: np.ndarray) -> np.ndarray:
        return self._signs * np.asarray(raw_y, dtype=float).ravel()

    def observe(self, raw_y: np.ndarray) -> None:
        self._seen_z.append(self.oriented(raw_y))

    def _bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if self._fixed is not None:
            return self._fixed
        zs = np.array(self._seen_z)
        return zs.min(axis=0), zs.max(axis=0)

    def normalize_objectives(self, raw_y: np.ndarray) -> np.ndarray:
        z = self.oriented(raw_y)
        lo, hi = self._bounds()
        span = hi - lo
        out = np.full(z.shape, 0.5)
        ok = span > 1e-12
        out[ok] = np.clip((z[ok] - lo[ok]) / span[ok], 0.0, 1.0)
        return out


def evaluate_objective(problem, u: np.ndarray, evaluate_external=None, retries: int = 1) -> np.ndarray:
    """Raw objective vector at a normalized input, clamped into the box."""
    u = np.asarray(u, dtype=float).ravel()
    if np.any(u < 0.0) or np.any(u > 1.0):
        logger.warning("input %s outside the unit box; clamping", u)
        u = np.clip(u, 0.0, 1.0)
    raw_x = problem.denormalize_x(u)
    if evaluate_external is None:
        return np.asarray(problem.evaluate_raw(raw_x), dtype=float).ravel()
    last_error: Exception | None = None
    for _ in range(retries + 1):
        try:
            return np.asarray(evaluate_external(raw_x), dtype=float).ravel()
        except Exception as exc:  # protocol failures surface here
            last_error = exc
            logger.warning("external evaluation failed (%s); retrying", exc)
    raise RunAborted(f"external objective evaluation failed twice: {last_error}")


def _oracle_grid(n_dims: int, size: int) -> np.ndarray:
    engine = qmc.Sobol(d=n_dims, scramble=False)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        return engine.random(size)


def run(config: RunConfig, problem=None, evaluate_external=None) -> RunTrace:
    """Execute one optimization run; deterministic given config.seed.

    problem defaults to the configured benchmark; pass an adapter plus
    evaluate_external for external objectives.
    """
    if problem is None:
        problem = benchmarks.make_problem(
            config.problem,
            standard_forms=config.standard_forms,
            grid_size=config.benchmark_grid_size,
        )
    n_dims = problem.n_dims
    n_objectives = problem.n_objectives
    synthetic = evaluate_external is None

    init_rng, weights_rng, theta_rng, acq_rng, hyper_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(5)
    )

    cost_weights = None
    constraint = None
    if config.mode == MODE_CA_MOBO:
        constraint = costmodel.CostConstraint(indices=tuple(config.cost_indices))
        constraint.validate_for(n_dims)
        cost_weights = costmodel.sample_weights(weights_rng, constraint.k, config.policy)
    apply_cost = config.mode == MODE_CA_MOBO and not config.force_zero_cost

    ref = scalarization.default_reference(n_objectives)

    oracle = None
    if synthetic:
        grid_x = _oracle_grid(n_dims, config.oracle_grid_size)
        grid_y = np.array([problem.evaluate_normalized(u)[1] for u in grid_x])
        oracle = metrics.RegretOracle(grid_x, grid_y)

    xs = init_rng.random((config.n_init, n_dims))
    raw_rows = []
    for u in xs:
        raw = evaluate_objective(problem, u, evaluate_external)
        raw_rows.append(raw)
        if not synthetic:
            problem.observe(raw)
    y_raw = np.array(raw_rows)

    archive = metrics.ParetoArchive()
    trace = RunTrace(
        config=config,
        seed=config.seed,
        n_dims=n_dims,
        n_objectives=n_objectives,
        init_x=xs.copy(),
        init_y_raw=y_raw.copy(),
        init_y_norm=np.array([problem.normalize_objectives(r) for r in y_raw]),
        cost_weights=cost_weights,
    )

    for i in range(config.n_init):
        archive.add(xs[i], problem.oriented(y_raw[i]))
        if oracle is not None:
            oracle.add_visited(xs[i], problem.normalize_objectives(y_raw[i]))

    ledger = metrics.RegretLedger()
    hypers = [gp.DEFAULT_HYPER] * n_objectives

    try:
        for t in range(1, config.iterations + 1):
            y_norm_all = np.array([problem.normalize_objectives(r) for r in y_raw])
            if (t - 1) % config.hyper_refit_period == 0:
                hypers = [
                    gp.optimize_hyperparameters(xs, y_norm_all[:, m], hyper_rng, current=hypers[m])
                    for m in range(n_objectives)
                ]
            models = [gp.fit(xs, y_norm_all[:, m], hypers[m]) for m in range(n_objectives)]
            if n_objectives >= 2:
                theta = scalarization.sample_theta(theta_rng, n_objectives)
            else:
                theta = np.ones(1)  # degenerate single-objective evaluator
            ctx = acq.AcquisitionContext(
                models=models,
                theta=theta,
                ref=ref,
                t=t,
                n_dims=n_dims,
                candidate_count=config.candidate_count,
                refine_steps=config.refine_steps,
                constraint=constraint if apply_cost else None,
                weights=cost_weights if apply_cost else None,
            )
            x_t, diag = acq.maximize_acquisition(ctx, acq_rng)
            raw_t = evaluate_objective(problem, x_t, evaluate_external)
            if not synthetic:
                problem.observe(raw_t)
            norm_t = problem.normalize_objectives(raw_t)

            xs = np.vstack([xs, x_t[None, :]])
            y_raw = np.vstack([y_raw, raw_t[None, :]])
            archive.add(x_t, problem.oriented(raw_t))

            r_inst = r_cum = r_avg = None
            if oracle is not None:
                r_t = oracle.instantaneous(
                    theta,
                    ref,
                    t,
                    x_t,
                    norm_t,
                    constraint if apply_cost else None,
                    cost_weights if apply_cost else None,
                )
                ledger.append(r_t)
                oracle.add_visited(x_t, norm_t)
                r_inst, r_cum, r_avg = (
                    ledger.instantaneous[-1],
                    ledger.cumulative[-1],
                    ledger.average[-1],
                )

            signs = _orient_signs(problem)
            dominant_norm = np.array(
                [problem.normalize_objectives(z * signs) for z in archive.dominant_ys()]
            )
            hv = _hypervolume_of_normalized(dominant_norm)

            trace.records.append(
                IterationRecord(
                    t=t,
                    x=x_t.copy(),
                    y_raw=raw_t.copy(),
                    y_norm=norm_t.copy(),
                    theta=theta.copy(),
                    beta=diag["beta"],
                    q=diag["q"],
                    c=diag["c"],
                    alpha=diag["alpha"],
                    regret_inst=r_inst,
                    regret_cum=r_cum,
                    regret_avg=r_avg,
                    hypervolume=hv,
                )
            )
    except RunAborted as exc:
        trace.dominant = _dominant_entries(archive, problem)
        raise RunAborted(str(exc), partial=trace) from exc

    trace.dominant = _dominant_entries(archive, problem)
    return trace


def _orient_signs(problem) -> np.ndarray:
    return np.array([-1.0 if s == "min" else 1.0 for s in problem.senses])


def _dominant_entries(archive, problem) -> list[tuple[np.ndarray, np.ndarray]]:
    signs = _orient_signs(problem)
    return [(x, z * signs) for x, z in archive.dominant_points()]


def _hypervolume_of_normalized(dominant_norm: np.ndarray) -> float:
    if dominant_norm.size == 0:
        return 0.0
    ref = np.zeros(dominant_norm.shape[1])
    usable = dominant_norm[np.any(dominant_norm > 0.0, axis=1)]
    if usable.shape[0] == 0:
        return 0.0
    if dominant_norm.shape[1] == 2:
        return metrics.hypervolume_2d(usable, ref)
    est, _ = metrics.hypervolume_monte_carlo(usable, ref, np.random.default_rng(0))
    return est


@dataclass
class Aggregates:
    """Per-iteration medians and interquartile ranges across repeats."""

    t: np.ndarray
    hypervolume: dict[str, np.ndarray]
    avg_regret: dict[str, np.ndarray] | None
    cum_regret: dict[str, np.ndarray] | None
    usage: dict[str, np.ndarray]


def _quartiles(stack: np.ndarray) -> dict[str, np.ndarray]:
    return {
        "median": np.median(stack, axis=0),
        "q25": np.quantile(stack, 0.25, axis=0),
        "q75": np.quantile(stack, 0.75, axis=0),
    }


def aggregate_traces(traces: Sequence[RunTrace]) -> Aggregates:
    t_axis = np.arange(1, len(traces[0].records) + 1)
    hv = np.array([[r.hypervolume for r in tr.records] for tr in traces])
    has_regret = all(r.regret_avg is not None for tr in traces for r in tr.records)
    avg = cum = None
    if has_regret:
        avg = _quartiles(np.array([[r.regret_avg for r in tr.records] for tr in traces]))
        cum = _quartiles(np.array([[r.regret_cum for r in tr.records] for tr in traces]))
    cum_usage = np.array([np.cumsum(tr.selected_x(), axis=0) for tr in traces])
    return Aggregates(
        t=t_axis,
        hypervolume=_quartiles(hv),
        avg_regret=avg,
        cum_regret=cum,
        usage=_quartiles(cum_usage),
    )


def _execute_single(args: tuple[RunConfig, int]) -> RunTrace:
    config, seed = args
    cfg = replace(config, seed=seed, repeats=1)
    if cfg.problem == "external":
        from .protocol import ExternalObjective

        spec = cfg.external
        with ExternalObjective(spec.command, n_dims=len(spec.raw_bounds), timeout=spec.timeout) as child:
            adapter = _ExternalProblem(spec, child.n_objectives)
            return run(cfg, problem=adapter, evaluate_external=child.evaluate)
    return run(cfg)


def run_repeats(
    config: RunConfig, workers: int = 1
) -> tuple[list[RunTrace], Aggregates, list[tuple[int, str]]]:
    """Run config.repeats independent seeds and aggregate the traces.

    Seeds are config.seed + 0..repeats-1. Individual failures are recorded
    and skipped as long as at least half the runs succeed.
    """
    seeds = [config.seed + i for i in range(config.repeats)]
    traces: list[RunTrace] = []
    failures: list[tuple[int, str]] = []
    jobs = [(config, s) for s in seeds]
    if len(jobs) == 1:
        # propagate aborts intact so callers can flush the partial trace
        traces.append(_execute_single(jobs[0]))
        return traces, aggregate_traces(traces), failures
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_execute_single_safe, jobs))
        for seed, outcome in zip(seeds, results):
            if isinstance(outcome, str):
                failures.append((seed, outcome))
            else:
                traces.append(outcome)
    else:
        for job in jobs:
            outcome = _execute_single_safe(job)
            if isinstance(outcome, str):
                failures.append((job[1], outcome))
            else:
                traces.append(outcome)
    if len(traces) < max(1, (len(seeds) + 1) // 2):
        raise RunAborted(
            f"only {len(traces)}/{len(seeds)} runs succeeded: {failures}"
        )
    for seed, message in failures:
        logger.warning("seed %d failed: %s", seed, message)
    return traces, aggregate_traces(traces), failures


def _execute_single_safe(args: tuple[RunConfig, int]):
    try:
        return _execute_single(args)
    except Exception as exc:
        return f"{type(exc).__name__}: {exc}"

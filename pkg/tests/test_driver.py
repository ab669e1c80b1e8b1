import numpy as np
import pytest

from camobo.benchmarks import make_problem
from camobo.costmodel import CostConstraint, cost
from camobo.driver import (
    ExternalSpec,
    RunConfig,
    _ExternalProblem,
    aggregate_traces,
    evaluate_objective,
    run,
    run_repeats,
)

FAST = dict(benchmark_grid_size=4096, oracle_grid_size=512, candidate_count=128, refine_steps=8)


def fast_config(**kw):
    base = dict(
        problem="zdt3",
        iterations=5,
        n_init=3,
        seed=11,
        mode="ca_mobo",
        cost_indices=(1, 2, 3, 4, 5),
        **FAST,
    )
    base.update(kw)
    return RunConfig(**base)


def records_equal(a, b):
    if len(a.records) != len(b.records):
        return False
    for ra, rb in zip(a.records, b.records):
        if not (
            np.array_equal(ra.x, rb.x)
            and np.array_equal(ra.y_raw, rb.y_raw)
            and np.array_equal(ra.theta, rb.theta)
            and ra.q == rb.q
            and ra.c == rb.c
            and ra.alpha == rb.alpha
            and ra.regret_inst == rb.regret_inst
            and ra.hypervolume == rb.hypervolume
        ):
            return False
    return True


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(problem="zdt3", iterations=0)
    with pytest.raises(ValueError):
        RunConfig(problem="zdt3", iterations=5, n_init=1)
    with pytest.raises(ValueError):
        RunConfig(problem="zdt3", iterations=5, mode="bogus")
    with pytest.raises(ValueError):
        RunConfig(problem="zdt3", iterations=5, mode="ca_mobo")  # no cost_indices
    with pytest.raises(ValueError):
        RunConfig(problem="external", iterations=5, mode="mo_ucb")  # no external table
    RunConfig(problem="zdt3", iterations=5, mode="mo_ucb")


def test_counts_and_record_shape():
    trace = run(fast_config(iterations=1, n_init=2))
    assert len(trace.records) == 1
    assert trace.init_x.shape == (2, 5)
    r = trace.records[0]
    assert r.t == 1
    assert r.x.shape == (5,) and r.y_raw.shape == (2,) and r.theta.shape == (2,)
    assert np.all((r.x >= 0) & (r.x <= 1))


def test_same_seed_reproduces_exactly():
    a = run(fast_config())
    b = run(fast_config())
    assert records_equal(a, b)
    assert np.array_equal(a.init_x, b.init_x)


def test_distinct_seeds_distinct_designs():
    a = run(fast_config(seed=1))
    b = run(fast_config(seed=2))
    assert not np.array_equal(a.init_x, b.init_x)


def test_mo_ucb_never_constructs_weights():
    trace = run(fast_config(mode="mo_ucb", cost_indices=None))
    assert trace.cost_weights is None
    assert all(r.c == 0.0 for r in trace.records)


def test_zero_cost_ca_mobo_equals_baseline():
    ca = run(fast_config(force_zero_cost=True))
    base = run(fast_config(mode="mo_ucb", cost_indices=None))
    assert ca.cost_weights is not None
    assert base.cost_weights is None
    assert records_equal(ca, base)
    assert np.array_equal(ca.init_x, base.init_x)


def test_dataset_growth_and_hypervolume_monotone():
    trace = run(fast_config(iterations=8))
    hv = [r.hypervolume for r in trace.records]
    assert all(b >= a - 1e-15 for a, b in zip(hv, hv[1:]))
    assert len(trace.records) == 8


def test_logged_cost_increases_in_t_at_probe_point():
    trace = run(fast_config(iterations=6))
    w = trace.cost_weights
    constraint = CostConstraint(indices=(1, 2, 3, 4, 5))
    probe = np.full(5, 0.5)
    values = [cost(probe, r.t, constraint, w) for r in trace.records]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_regret_fields_consistent():
    trace = run(fast_config(iterations=6))
    cum = 0.0
    for i, r in enumerate(trace.records, start=1):
        assert r.regret_inst >= 0.0
        cum += r.regret_inst
        assert r.regret_cum == pytest.approx(cum, abs=1e-12)
        assert r.regret_avg == pytest.approx(cum / i, abs=1e-12)


def test_evaluate_objective_clamps_and_warns(caplog):
    problem = make_problem("zdt3", grid_size=4096)
    with caplog.at_level("WARNING"):
        y = evaluate_objective(problem, np.array([1.3, -0.2, 0.5, 0.5, 0.5]))
    assert "clamping" in caplog.text
    expected = problem.evaluate_raw(np.array([1.0, 0.0, 0.5, 0.5, 0.5]))
    assert y == pytest.approx(expected)


def test_evaluate_objective_external_stub():
    spec = ExternalSpec(command=("true",), raw_bounds=((0.0, 2.0), (0.0, 2.0)))
    adapter = _ExternalProblem(spec, n_objectives=1)
    calls = []

    def fake_eval(raw_x):
        calls.append(raw_x.copy())
        return np.array([-np.sum(raw_x)])

    y = evaluate_objective(adapter, np.array([0.5, 1.0]), fake_eval)
    assert y == pytest.approx([-3.0])  # raw x = (1.0, 2.0)
    assert calls[0] == pytest.approx([1.0, 2.0])


def test_external_retry_then_abort():
    from camobo.driver import RunAborted

    spec = ExternalSpec(command=("true",), raw_bounds=((0.0, 1.0),))
    adapter = _ExternalProblem(spec, n_objectives=1)
    attempts = []

    def flaky(raw_x):
        attempts.append(1)
        raise RuntimeError("boom")

    with pytest.raises(RunAborted):
        evaluate_objective(adapter, np.array([0.5]), flaky)
    assert len(attempts) == 2  # one retry


def test_external_running_normalization():
    spec = ExternalSpec(command=("true",), raw_bounds=((0.0, 1.0),), senses=("min",))
    adapter = _ExternalProblem(spec, n_objectives=1)
    adapter.observe(np.array([4.0]))
    adapter.observe(np.array([2.0]))
    # minimization: raw 2.0 is the best seen -> 1.0, raw 4.0 the worst -> 0.0
    assert adapter.normalize_objectives(np.array([2.0])) == pytest.approx([1.0])
    assert adapter.normalize_objectives(np.array([4.0])) == pytest.approx([0.0])
    assert adapter.normalize_objectives(np.array([3.0])) == pytest.approx([0.5])


def test_external_fixed_objective_bounds():
    spec = ExternalSpec(
        command=("true",),
        raw_bounds=((0.0, 1.0),),
        senses=("min",),
        objective_bounds=((0.0, 10.0),),
    )
    adapter = _ExternalProblem(spec, n_objectives=1)
    assert adapter.normalize_objectives(np.array([0.0])) == pytest.approx([1.0])
    assert adapter.normalize_objectives(np.array([10.0])) == pytest.approx([0.0])


def test_run_repeats_aggregates():
    cfg = fast_config(repeats=3, iterations=4)
    traces, agg, failures = run_repeats(cfg)
    assert len(traces) == 3 and not failures
    assert sorted(t.seed for t in traces) == [11, 12, 13]
    hv = np.array([[r.hypervolume for r in t.records] for t in traces])
    assert np.array_equal(agg.hypervolume["median"], np.median(hv, axis=0))
    usage_last = np.array([np.cumsum(t.selected_x(), axis=0)[-1] for t in traces])
    assert np.allclose(agg.usage["median"][-1], np.median(usage_last, axis=0))
    for t in traces:
        assert np.allclose(np.cumsum(t.selected_x(), axis=0)[-1], t.usage())


def test_run_repeats_single_equals_run():
    cfg = fast_config(repeats=1)
    traces, agg, _ = run_repeats(cfg)
    solo = run(cfg)
    assert records_equal(traces[0], solo)
    assert np.array_equal(agg.hypervolume["median"], [r.hypervolume for r in solo.records])


def test_aggregate_usage_median_recomputable():
    cfg = fast_config(repeats=2, iterations=3)
    traces, agg, _ = run_repeats(cfg)
    stack = np.array([np.cumsum(t.selected_x(), axis=0) for t in traces])
    assert np.array_equal(agg.usage["median"], np.median(stack, axis=0))


def test_run_repeats_raises_when_all_runs_fail():
    from camobo.driver import RunAborted

    cfg = RunConfig(
        problem="external",
        iterations=2,
        n_init=2,
        repeats=2,
        mode="mo_ucb",
        external=ExternalSpec(command=("false",), raw_bounds=((0.0, 1.0),), timeout=5.0),
        **FAST,
    )
    with pytest.raises(RunAborted, match="0/2"):
        run_repeats(cfg)

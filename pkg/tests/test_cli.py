import json
import sys

import numpy as np
import pytest

from camobo.cli import (
    ConfigError,
    MalformedTraceError,
    cmd_plotdata,
    load_config,
    main,
    read_trace_csv,
    write_summary_json,
    write_trace_csv,
)
from camobo.driver import RunConfig, run
from camobo.metrics import pareto_filter

FAST_TOML = """
problem = "zdt3"
iterations = 4
n_init = 3
seed = 5
mode = "ca_mobo"
cost_indices = [1, 2, 3, 4, 5]
candidate_count = 128
refine_steps = 8
oracle_grid_size = 512
benchmark_grid_size = 4096
"""


@pytest.fixture()
def fast_cfg(tmp_path):
    path = tmp_path / "zdt3.toml"
    path.write_text(FAST_TOML)
    return path


def fast_trace(**kw):
    base = dict(
        problem="zdt3",
        iterations=4,
        n_init=3,
        seed=5,
        mode="ca_mobo",
        cost_indices=(1, 2, 3, 4, 5),
        candidate_count=128,
        refine_steps=8,
        oracle_grid_size=512,
        benchmark_grid_size=4096,
    )
    base.update(kw)
    return run(RunConfig(**base))


def test_load_config_round_trip(fast_cfg):
    config, out_dir = load_config(fast_cfg)
    assert config.problem == "zdt3"
    assert config.iterations == 4
    assert config.cost_indices == (1, 2, 3, 4, 5)
    assert out_dir is None


def test_missing_problem_key_named(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("iterations = 5\n")
    with pytest.raises(ConfigError, match="'problem'"):
        load_config(path)


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text('problem = "zdt3"\niterations = 5\nbogus_key = 1\n')
    with pytest.raises(ConfigError, match="bogus_key"):
        load_config(path)


def test_wrong_type_rejected(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text('problem = "zdt3"\niterations = "many"\n')
    with pytest.raises(ConfigError, match="iterations"):
        load_config(path)


def test_trace_round_trip(tmp_path):
    trace = fast_trace()
    path = tmp_path / "trace_5.csv"
    write_trace_csv(trace, path)
    back = read_trace_csv(path)
    assert back["n_dims"] == 5 and back["n_objectives"] == 2
    cols = back["columns"]
    for k, r in enumerate(trace.records):
        assert cols["t"][k] == r.t
        assert cols["x_1"][k] == r.x[0]
        assert cols["alpha"][k] == r.alpha
        assert cols["hypervolume"][k] == r.hypervolume
        assert cols["regret_avg"][k] == r.regret_avg


def test_malformed_trace_named(tmp_path):
    path = tmp_path / "trace_x.csv"
    path.write_text("not,a,real,header\n1,2,3,4\n")
    with pytest.raises(MalformedTraceError, match=str(path)):
        read_trace_csv(path)


def test_summary_contents(tmp_path):
    trace = fast_trace()
    path = tmp_path / "summary_5.json"
    write_summary_json(trace, path)
    payload = json.loads(path.read_text())
    assert payload["seed"] == 5
    assert payload["n_observations"] == 7
    assert len(payload["cost_weights"]) == 5
    assert payload["usage_sums"] == pytest.approx(trace.usage().tolist())
    assert payload["final_hypervolume"] == trace.records[-1].hypervolume
    for entry in payload["dominant"]:
        assert len(entry["x"]) == 5 and len(entry["y_raw"]) == 2


def test_summary_mo_ucb_has_no_weights(tmp_path):
    trace = fast_trace(mode="mo_ucb", cost_indices=None)
    path = tmp_path / "summary.json"
    write_summary_json(trace, path)
    assert json.loads(path.read_text())["cost_weights"] is None


def test_cmd_run_writes_artifacts(fast_cfg, tmp_path):
    out = tmp_path / "out"
    code = main(["run", "--config", str(fast_cfg), "--out", str(out)])
    assert code == 0
    assert (out / "trace_5.csv").exists()
    assert (out / "summary_5.json").exists()
    assert (out / "aggregate.csv").exists()


def test_cmd_run_deterministic_bytes(fast_cfg, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(fast_cfg), "--out", str(out1)]) == 0
    assert main(["run", "--config", str(fast_cfg), "--out", str(out2)]) == 0
    assert (out1 / "trace_5.csv").read_bytes() == (out2 / "trace_5.csv").read_bytes()


def test_cmd_run_seed_and_mode_overrides(fast_cfg, tmp_path):
    out = tmp_path / "o"
    code = main(
        ["run", "--config", str(fast_cfg), "--seed", "9", "--mode", "mo-ucb", "--out", str(out)]
    )
    assert code == 0
    payload = json.loads((out / "summary_9.json").read_text())
    assert payload["seed"] == 9
    assert payload["config"]["mode"] == "mo_ucb"
    assert payload["cost_weights"] is None


def test_cmd_run_config_error_exit_2(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text("iterations = 5\n")
    code = main(["run", "--config", str(path)])
    assert code == 2
    assert "problem" in capsys.readouterr().err


def test_plotdata_outputs(fast_cfg, tmp_path):
    out = tmp_path / "out"
    main(["run", "--config", str(fast_cfg), "--out", str(out), "--repeats", "2"])
    code = cmd_plotdata(out)
    assert code == 0
    plot = out / "plotdata"
    hv = (plot / "hypervolume_vs_t.csv").read_text().splitlines()
    assert hv[0] == "seed,t,hypervolume"
    assert len(hv) == 1 + 2 * 4  # two seeds, four iterations

    usage = (plot / "usage_sums_vs_t.csv").read_text().splitlines()
    assert len(usage) == 1 + 2 * 4
    # final usage row equals the trace's usage sums
    trace = read_trace_csv(out / "trace_5.csv")
    xs = np.array(
        [[trace["columns"][f"x_{i}"][k] for i in range(1, 6)] for k in range(4)]
    )
    final_row = [float(v) for v in usage[4].split(",")[2:]]
    assert final_row == pytest.approx(xs.sum(axis=0))

    pareto = (plot / "pareto_points.csv").read_text().splitlines()
    per_seed = {}
    for line in pareto[1:]:
        cells = line.split(",")
        per_seed.setdefault(cells[0], []).append([float(v) for v in cells[6:8]])
    for ys in per_seed.values():
        ys = np.array(ys)
        assert len(pareto_filter(ys)) == len(ys)  # mutually non-dominated


def test_plotdata_malformed_trace_exit_1(tmp_path, capsys):
    bad = tmp_path / "trace_1.csv"
    bad.write_text("t,x_1\nnot_an_int,0.5\n")
    code = cmd_plotdata(tmp_path)
    assert code == 1
    assert "trace_1.csv" in capsys.readouterr().err


def test_external_config_section(tmp_path):
    path = tmp_path / "ext.toml"
    path.write_text(
        f"""
problem = "external"
iterations = 3
n_init = 2
mode = "mo_ucb"
candidate_count = 64
refine_steps = 4

[external]
command = ["{sys.executable}", "-m", "camobo.stub_child"]
raw_bounds = [[0.0, 1.0], [0.0, 1.0]]
senses = ["min"]
timeout = 60.0
"""
    )
    config, _ = load_config(path)
    assert config.external is not None
    assert config.external.command[-1] == "camobo.stub_child"
    assert config.external.senses == ("min",)


def test_external_abort_flushes_partial_trace(tmp_path, capsys):
    # child completes the handshake and five evaluations, then starts
    # erroring: the run aborts at iteration 3 with two records flushed
    child = tmp_path / "flaky.py"
    child.write_text(
        "import sys, json\n"
        "n = 0\n"
        "for line in sys.stdin:\n"
        "    m = json.loads(line)\n"
        "    if m['type'] == 'hello':\n"
        "        print(json.dumps({'type': 'ready', 'n_objectives': 1}), flush=True)\n"
        "    elif m['type'] == 'eval':\n"
        "        n += 1\n"
        "        if n > 5:\n"
        "            print(json.dumps({'type': 'error', 'message': 'worn out'}), flush=True)\n"
        "        else:\n"
        "            print(json.dumps({'type': 'result', 'y': [-sum(m['x'])]}), flush=True)\n"
        "    else:\n"
        "        break\n"
    )
    cfg = tmp_path / "flaky.toml"
    cfg.write_text(
        f"""
problem = "external"
iterations = 10
n_init = 3
seed = 4
mode = "mo_ucb"
candidate_count = 64
refine_steps = 4

[external]
command = ["{sys.executable}", "{child}"]
raw_bounds = [[0.0, 1.0], [0.0, 1.0]]
timeout = 30.0
"""
    )
    out = tmp_path / "out"
    code = main(["run", "--config", str(cfg), "--out", str(out)])
    assert code == 1
    partial = out / "trace_4.partial.csv"
    assert partial.exists()
    assert "partial trace" in capsys.readouterr().err
    back = read_trace_csv(partial)
    assert list(back["t"]) == [1, 2]


def test_external_end_to_end(tmp_path):
    path = tmp_path / "ext.toml"
    path.write_text(
        f"""
problem = "external"
iterations = 3
n_init = 2
seed = 2
mode = "mo_ucb"
candidate_count = 64
refine_steps = 4

[external]
command = ["{sys.executable}", "-m", "camobo.stub_child"]
raw_bounds = [[0.0, 1.0], [0.0, 1.0]]
senses = ["max"]
timeout = 60.0
"""
    )
    out = tmp_path / "out"
    assert main(["run", "--config", str(path), "--out", str(out)]) == 0
    trace = read_trace_csv(out / "trace_2.csv")
    assert trace["n_objectives"] == 1
    # regret columns are absent for external objectives
    assert all(v is None for v in trace["columns"]["regret_avg"])

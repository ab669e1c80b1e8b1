import sys

import numpy as np
import pytest

from camobo.protocol import EvaluationFailure, ExternalObjective

STUB = [sys.executable, "-m", "camobo.stub_child"]


def child_script(tmp_path, body):
    path = tmp_path / "child.py"
    path.write_text("import sys, json\n" + body)
    return [sys.executable, str(path)]


def test_stub_handshake_evals_shutdown():
    with ExternalObjective(STUB, n_dims=3, timeout=30) as child:
        assert child.n_objectives == 1
        for i in range(10):
            x = np.array([i, 0.5, 1.0])
            y = child.evaluate(x)
            assert y == pytest.approx([-(i + 1.5)])
    assert child.shutdown() == 0


def test_stub_echo_contract():
    child = ExternalObjective(STUB, n_dims=2, timeout=30)
    child.start()
    y = child.evaluate(np.array([0.25, 0.5]))
    assert y == pytest.approx([-0.75])
    assert child.shutdown() == 0


def test_wrong_length_reply_fails(tmp_path):
    cmd = child_script(
        tmp_path,
        """
for line in sys.stdin:
    msg = json.loads(line)
    if msg["type"] == "hello":
        print(json.dumps({"type": "ready", "n_objectives": 2}), flush=True)
    elif msg["type"] == "eval":
        print(json.dumps({"type": "result", "y": [1.0, 2.0, 3.0]}), flush=True)
    else:
        break
""",
    )
    with ExternalObjective(cmd, n_dims=2, timeout=30) as child:
        assert child.n_objectives == 2
        with pytest.raises(EvaluationFailure, match="declared 2 objectives"):
            child.evaluate(np.array([0.1, 0.2]))


def test_malformed_line_fails(tmp_path):
    cmd = child_script(
        tmp_path,
        """
for line in sys.stdin:
    msg = json.loads(line)
    if msg["type"] == "hello":
        print(json.dumps({"type": "ready", "n_objectives": 1}), flush=True)
    elif msg["type"] == "eval":
        print("this is not json", flush=True)
    else:
        break
""",
    )
    with ExternalObjective(cmd, n_dims=2, timeout=30) as child:
        with pytest.raises(EvaluationFailure, match="malformed"):
            child.evaluate(np.array([0.1, 0.2]))


def test_timeout_fails(tmp_path):
    cmd = child_script(
        tmp_path,
        """
import time
for line in sys.stdin:
    msg = json.loads(line)
    if msg["type"] == "hello":
        print(json.dumps({"type": "ready", "n_objectives": 1}), flush=True)
    elif msg["type"] == "eval":
        time.sleep(60)
    else:
        break
""",
    )
    child = ExternalObjective(cmd, n_dims=1, timeout=0.5)
    child.start()
    with pytest.raises(EvaluationFailure, match="timed out"):
        child.evaluate(np.array([0.1]))
    child.shutdown(grace=0.2)


def test_error_reply_surfaces_message(tmp_path):
    cmd = child_script(
        tmp_path,
        """
for line in sys.stdin:
    msg = json.loads(line)
    if msg["type"] == "hello":
        print(json.dumps({"type": "ready", "n_objectives": 1}), flush=True)
    elif msg["type"] == "eval":
        print(json.dumps({"type": "error", "message": "fit exploded"}), flush=True)
    else:
        break
""",
    )
    with ExternalObjective(cmd, n_dims=1, timeout=30) as child:
        with pytest.raises(EvaluationFailure, match="fit exploded"):
            child.evaluate(np.array([0.1]))


def test_stderr_attached_to_diagnostics(tmp_path):
    cmd = child_script(
        tmp_path,
        """
print("I crashed because of reasons", file=sys.stderr, flush=True)
sys.exit(3)
""",
    )
    child = ExternalObjective(cmd, n_dims=1, timeout=5)
    with pytest.raises(EvaluationFailure, match="reasons|not running|closed"):
        child.start()

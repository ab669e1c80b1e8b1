"""JSON-lines wire protocol to external objective evaluators.

The parent launches the child from the configured command and speaks
line-delimited JSON over its standard streams, one request in flight at a
time:

    parent -> {"type": "hello", "n_dims": N}
    child  -> {"type": "ready", "n_objectives": M}
    parent -> {"type": "eval", "x": [...]}          # raw, denormalized units
    child  -> {"type": "result", "y": [...]}        # length M
    parent -> {"type": "shutdown"}                  # child exits 0

A child may reply {"type": "error", "message": ...} to report an evaluation
failure. Malformed lines, wrong-length replies, and timeouts raise
EvaluationFailure with the child's recent stderr attached.
"""

from __future__ import annotations

import json
import queue
import subprocess
import threading
from collections import deque
from typing import Sequence

import numpy as np

DEFAULT_TIMEOUT = 600.0
_STDERR_KEEP = 50


class EvaluationFailure(RuntimeError):
    """The external evaluator broke the wire contract or timed out."""


class ExternalObjective:
    """Client for one external evaluator process."""

    def __init__(self, command: Sequence[str], n_dims: int, timeout: float = DEFAULT_TIMEOUT):
        self.command = list(command)
        self.n_dims = int(n_dims)
        self.timeout = float(timeout)
        self.n_objectives: int | None = None
        self._proc: subprocess.Popen | None = None
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._stderr: deque[str] = deque(maxlen=_STDERR_KEEP)

    def __enter__(self) -> "ExternalObjective":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()

    def _pump_stdout(self) -> None:
        assert self._proc is not None and self._proc.stdout is not None
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _pump_stderr(self) -> None:
        assert self._proc is not None and self._proc.stderr is not None
        for line in self._proc.stderr:
            self._stderr.append(line.rstrip("\n"))

    def _diagnostics(self) -> str:
        if not self._stderr:
            return ""
        return " | child stderr: " + " / ".join(list(self._stderr)[-5:])

    def _send(self, message: dict) -> None:
        if self._proc is None or self._proc.stdin is None or self._proc.poll() is not None:
            raise EvaluationFailure(f"evaluator process is not running{self._diagnostics()}")
        try:
            self._proc.stdin.write(json.dumps(message) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise EvaluationFailure(f"failed to write to evaluator: {exc}{self._diagnostics()}")

    def _receive(self) -> dict:
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise EvaluationFailure(
                f"evaluator reply timed out after {self.timeout:g}s{self._diagnostics()}"
            )
        if line is None:
            raise EvaluationFailure(f"evaluator closed its output stream{self._diagnostics()}")
        try:
            message = json.loads(line)
        except json.JSONDecodeError as exc:
            raise EvaluationFailure(f"malformed reply {line!r}: {exc}{self._diagnostics()}")
        if not isinstance(message, dict) or "type" not in message:
            raise EvaluationFailure(f"reply is not a typed object: {line!r}{self._diagnostics()}")
        if message["type"] == "error":
            raise EvaluationFailure(
                f"evaluator reported an error: {message.get('message')}{self._diagnostics()}"
            )
        return message

    def start(self) -> int:
        """Launch the child and complete the hello/ready handshake."""
        self._proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        threading.Thread(target=self._pump_stdout, daemon=True).start()
        threading.Thread(target=self._pump_stderr, daemon=True).start()
        self._send({"type": "hello", "n_dims": self.n_dims})
        reply = self._receive()
        if reply.get("type") != "ready" or "n_objectives" not in reply:
            raise EvaluationFailure(f"handshake failed, got {reply!r}{self._diagnostics()}")
        self.n_objectives = int(reply["n_objectives"])
        if self.n_objectives < 1:
            raise EvaluationFailure(f"evaluator declared {self.n_objectives} objectives")
        return self.n_objectives

    def evaluate(self, x_raw: np.ndarray) -> np.ndarray:
        """One eval/result round trip; validates the reply length."""
        if self.n_objectives is None:
            raise EvaluationFailure("handshake not completed before evaluate()")
        x_list = [float(v) for v in np.asarray(x_raw, dtype=float).ravel()]
        self._send({"type": "eval", "x": x_list})
        reply = self._receive()
        if reply.get("type") != "result" or "y" not in reply:
            raise EvaluationFailure(f"expected a result reply, got {reply!r}{self._diagnostics()}")
        y = reply["y"]
        if not isinstance(y, list) or len(y) != self.n_objectives:
            raise EvaluationFailure(
                f"evaluator declared {self.n_objectives} objectives but replied "
                f"with {y!r}{self._diagnostics()}"
            )
        try:
            return np.array([float(v) for v in y])
        except (TypeError, ValueError) as exc:
            raise EvaluationFailure(f"non-numeric objective values {y!r}: {exc}")

    def shutdown(self, grace: float = 10.0) -> int | None:
        """Send shutdown and reap the child; kills it if it lingers."""
        if self._proc is None:
            return None
        if self._proc.poll() is None:
            try:
                self._proc.stdin.write(json.dumps({"type": "shutdown"}) + "\n")
                self._proc.stdin.flush()
                self._proc.stdin.close()
            except (BrokenPipeError, OSError):
                pass
            try:
                self._proc.wait(timeout=grace)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
        return self._proc.returncode

"""JSON-lines evaluator server loop shared by the example evaluators.

Protocol (one request in flight at a time, stdout reserved for replies):

    {"type": "hello", "n_dims": N}   -> {"type": "ready", "n_objectives": M}
    {"type": "eval", "x": [...]}     -> {"type": "result", "y": [...]}
                                        or {"type": "error", "message": ...}
    {"type": "shutdown"}             -> exit 0
"""

import json
import sys


def serve(n_objectives, evaluate):
    """Run the request loop; evaluate maps a raw x list to a list of floats."""
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            _reply({"type": "error", "message": f"bad request: {exc}"})
            continue
        kind = msg.get("type")
        if kind == "hello":
            _reply({"type": "ready", "n_objectives": n_objectives})
        elif kind == "eval":
            try:
                y = [float(v) for v in evaluate(msg["x"])]
                if len(y) != n_objectives:
                    raise ValueError(f"evaluator produced {len(y)} objectives")
                _reply({"type": "result", "y": y})
            except Exception as exc:  # report, keep serving
                _reply({"type": "error", "message": f"{type(exc).__name__}: {exc}"})
        elif kind == "shutdown":
            return 0
        else:
            _reply({"type": "error", "message": f"unknown request type {kind!r}"})
    return 0


def _reply(payload):
    print(json.dumps(payload), flush=True)


def log(message):
    print(message, file=sys.stderr, flush=True)

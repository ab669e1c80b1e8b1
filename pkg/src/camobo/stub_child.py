"""Minimal external evaluator: one objective, y = -sum(x).

Usable as a smoke target for the wire protocol: run with
``python -m camobo.stub_child``.
"""

import json
import sys


def main() -> int:
    for line in sys.stdin:
        msg = json.loads(line)
        if msg["type"] == "hello":
            print(json.dumps({"type": "ready", "n_objectives": 1}), flush=True)
        elif msg["type"] == "eval":
            print(json.dumps({"type": "result", "y": [-sum(msg["x"])]}), flush=True)
        elif msg["type"] == "shutdown":
            return 0
    return 0


if __name__ == "__main__":
    sys.exit(main())

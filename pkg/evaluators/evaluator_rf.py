#!/usr/bin/env python3
"""Random-forest tuning evaluator speaking the JSON-lines protocol.

Inputs (raw units): x1 = number of estimators in [1, 100], x2 = depth of
estimators in [1, 100]. Objectives: [training time in seconds, prediction
error on a held-out split]; both minimized.

Defaults use the bundled scikit-learn digits set (1797 samples) so a single
evaluation costs well under a second; pass --dataset mnist for the
full-scale problem (downloads via OpenML). Model fitting is seeded, so the
error objective is reproducible; the timing objective is wall-clock.
"""

import argparse
import sys
import time

import numpy as np
from sklearn.datasets import load_digits
from sklearn.ensemble import RandomForestClassifier
from sklearn.model_selection import train_test_split

from serve_common import log, serve

SPLIT_SEED = 0
MODEL_SEED = 0
TEST_FRACTION = 0.25

ESTIMATOR_RANGE = (1, 100)
DEPTH_RANGE = (1, 100)


def load_dataset(name: str):
    if name == "digits":
        data = load_digits()
        x, y = data.data, data.target
    elif name == "mnist":
        from sklearn.datasets import fetch_openml

        data = fetch_openml("mnist_784", version=1, as_frame=False)
        x, y = data.data, data.target.astype(int)
    else:
        raise ValueError(f"unknown dataset {name!r}")
    return train_test_split(x, y, test_size=TEST_FRACTION, random_state=SPLIT_SEED)


def clip_int(value: float, lo: int, hi: int) -> int:
    return int(np.clip(round(float(value)), lo, hi))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dataset", choices=["digits", "mnist"], default="digits")
    args = parser.parse_args()

    x_train, x_test, y_train, y_test = load_dataset(args.dataset)
    log(f"evaluator_rf: {args.dataset} train={len(x_train)} test={len(x_test)}")

    def evaluate(x):
        n_estimators = clip_int(x[0], *ESTIMATOR_RANGE)
        depth = clip_int(x[1], *DEPTH_RANGE)
        model = RandomForestClassifier(
            n_estimators=n_estimators,
            max_depth=depth,
            random_state=MODEL_SEED,
            n_jobs=1,
        )
        start = time.perf_counter()
        model.fit(x_train, y_train)
        train_time = time.perf_counter() - start
        error = 1.0 - model.score(x_test, y_test)
        return [train_time, error]

    return serve(n_objectives=2, evaluate=evaluate)


if __name__ == "__main__":
    sys.exit(main())

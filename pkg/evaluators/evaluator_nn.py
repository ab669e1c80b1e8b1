#!/usr/bin/env python3
"""Feed-forward-network tuning evaluator speaking the JSON-lines protocol.

Six hyperparameters (raw units): number of hidden layers in [1, 4], hidden
units per layer in [50, 300], learning rate in (0, 0.2], dropout in
[0.4, 0.8], and l1 / l2 regularization levels in (0, 0.1]. Objectives:
[prediction error, prediction time in seconds]; both minimized.

The network is ReLU hidden layers plus a soft-max output, trained with Adam
at a batch size of 4000 for 64 epochs. Defaults use the bundled digits set
so an evaluation costs a few seconds on CPU; pass --dataset mnist for the
full-scale problem. Training is seeded; prediction time is wall-clock.
"""

import argparse
import os
import sys
import time

os.environ.setdefault("TF_CPP_MIN_LOG_LEVEL", "3")

import numpy as np
from sklearn.model_selection import train_test_split

from serve_common import log, serve

SPLIT_SEED = 0
MODEL_SEED = 0
TEST_FRACTION = 0.25

LAYER_RANGE = (1, 4)
UNIT_RANGE = (50, 300)
LEARNING_RATE_RANGE = (1e-5, 0.2)
DROPOUT_RANGE = (0.4, 0.8)
REG_RANGE = (1e-8, 0.1)


def load_dataset(name: str):
    if name == "digits":
        from sklearn.datasets import load_digits

        data = load_digits()
        x = data.data.astype("float32") / 16.0
        y = data.target
    elif name == "mnist":
        from sklearn.datasets import fetch_openml

        data = fetch_openml("mnist_784", version=1, as_frame=False)
        x = data.data.astype("float32") / 255.0
        y = data.target.astype(int)
    else:
        raise ValueError(f"unknown dataset {name!r}")
    return train_test_split(x, y, test_size=TEST_FRACTION, random_state=SPLIT_SEED)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dataset", choices=["digits", "mnist"], default="digits")
    parser.add_argument("--epochs", type=int, default=64)
    parser.add_argument("--batch-size", type=int, default=4000)
    args = parser.parse_args()

    import tensorflow as tf  # deferred: slow import, stderr logging configured above

    x_train, x_test, y_train, y_test = load_dataset(args.dataset)
    n_classes = int(np.max(y_train)) + 1
    log(
        f"evaluator_nn: {args.dataset} train={len(x_train)} test={len(x_test)} "
        f"epochs={args.epochs} batch={args.batch_size}"
    )

    def evaluate(x):
        layers = int(np.clip(round(float(x[0])), *LAYER_RANGE))
        units = int(np.clip(round(float(x[1])), *UNIT_RANGE))
        lr = float(np.clip(float(x[2]), *LEARNING_RATE_RANGE))
        dropout = float(np.clip(float(x[3]), *DROPOUT_RANGE))
        l1 = float(np.clip(float(x[4]), *REG_RANGE))
        l2 = float(np.clip(float(x[5]), *REG_RANGE))

        tf.keras.utils.set_random_seed(MODEL_SEED)
        model = tf.keras.Sequential()
        model.add(tf.keras.layers.Input(shape=(x_train.shape[1],)))
        for _ in range(layers):
            model.add(
                tf.keras.layers.Dense(
                    units,
                    activation="relu",
                    kernel_regularizer=tf.keras.regularizers.l1_l2(l1=l1, l2=l2),
                )
            )
            model.add(tf.keras.layers.Dropout(dropout))
        model.add(tf.keras.layers.Dense(n_classes, activation="softmax"))
        model.compile(
            optimizer=tf.keras.optimizers.Adam(learning_rate=lr),
            loss="sparse_categorical_crossentropy",
            metrics=["accuracy"],
        )
        model.fit(
            x_train,
            y_train,
            batch_size=args.batch_size,
            epochs=args.epochs,
            verbose=0,
        )
        model.predict(x_test[:1], verbose=0)  # warm the graph before timing
        start = time.perf_counter()
        probs = model.predict(x_test, batch_size=len(x_test), verbose=0)
        predict_time = time.perf_counter() - start
        error = float(np.mean(np.argmax(probs, axis=1) != y_test))
        return [error, predict_time]

    return serve(n_objectives=2, evaluate=evaluate)


if __name__ == "__main__":
    sys.exit(main())

"""Recover planted hyperparameter effects with the dummy-coded least-squares fit."""
import math

import numpy as np

from actbench import report


def main():
    rng = np.random.default_rng(1)
    records = []
    for _ in range(300):
        h = {"layers": int(rng.integers(1, 5)), "dropout": float(rng.uniform(0.1, 0.75)),
             "hidden_units": int(rng.integers(30, 501)), "learning_rate": float(rng.uniform(1e-4, 1e-2)),
             "optimizer": str(rng.choice(["adam", "rmsprop", "sgd"])),
             "initializer": str(rng.choice(["glorot-uniform", "he-normal"]))}
        score = 0.9 - 0.08 * math.log(h["layers"]) - 0.2 * h["dropout"] + (h["optimizer"] == "sgd") * -0.1
        records.append(dict(h, score=score + rng.normal(scale=0.01)))

    fit = report.fit_regression(records, family="mlp")
    print("planted: log layers -0.08, dropout -0.2, optimizer=sgd -0.1, intercept 0.9")
    for name, value in {**fit.coefficients, **fit.dummies}.items():
        print(f"  {name:<24} {value:+.4f}")
    print(f"  {'intercept':<24} {fit.intercept:+.4f}")
    print("reference levels:", fit.reference_levels)


if __name__ == "__main__":
    main()

"""Fast self-tests behind ``actbench check``: activation values, gradients, protocol oracles."""
from __future__ import annotations

import itertools
from typing import NamedTuple

import numpy as np

from . import activations as act
from . import report
from .models import CNN, MLP, DocumentData, ModelSpec, SequenceData, Tagger, VectorData, batch_loss
from .netcore.gradcheck import check_gradients
from .reference import reference_value

GRAD_TOL = 1e-4
VALUE_TOL = 1e-12


class Check(NamedTuple):
    name: str
    passed: bool
    detail: str


def check_values(points=50, seed=0) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    for name in act.scalar_names():
        xs = rng.uniform(-5, 5, points)
        got = act.evaluate(name, xs)
        err = max(abs(g - reference_value(name, x)) for g, x in zip(got, xs))
        out.append(Check(f"value:{name}", err < VALUE_TOL, f"max abs err {err:.2e}"))
    return out


def _grad_check(name, model, loss):
    errs = check_gradients(loss, model.parameters())
    worst = max(errs.values())
    return Check(name, worst < GRAD_TOL, f"max rel err {worst:.2e}")


def mlp_gradients(activation, seed=0):
    rng = np.random.default_rng(seed)
    data = VectorData(rng.normal(size=(6, 4)), rng.integers(0, 3, 6))
    model = MLP(ModelSpec("mlp", layers=2, hidden_units=5, activation=activation,
                          initializer="glorot-normal"), 4, 3, np.random.default_rng(seed + 1))
    return _grad_check(f"grad:mlp:{activation}", model,
                       lambda: batch_loss(model, data, np.arange(6), training=False))


def cnn_gradients(activation, seed=0):
    rng = np.random.default_rng(seed)
    data = DocumentData(rng.integers(0, 12, (4, 7)), rng.integers(0, 3, 4))
    model = CNN(ModelSpec("cnn", layers=2, hidden_units=3, filter_size=2, embedding_dim=4,
                          activation=activation, initializer="glorot-normal"), 12, 3, np.random.default_rng(seed + 1))
    return _grad_check(f"grad:cnn:{activation}", model,
                       lambda: batch_loss(model, data, np.arange(4), training=False))


def tagger_gradients(family, activation, seed=0, gate_sigma="sigmoid"):
    rng = np.random.default_rng(seed)
    seqs = [rng.integers(0, 10, n) for n in (4, 4, 3)]
    tags = [rng.integers(0, 3, len(s)) for s in seqs]
    data = SequenceData(seqs, tags)
    kw = {"activation": activation} if family == "rnn" else {"gate_tau": activation, "gate_sigma": gate_sigma}
    spec = ModelSpec(family, layers=2, hidden_units=3, embedding_dim=3, initializer="glorot-normal", **kw)
    model = Tagger(spec, 10, 3, np.random.default_rng(seed + 1))
    label = f"grad:{family}:{activation}" + (f":sigma={gate_sigma}" if family == "lstm" else "")
    return _grad_check(label, model, lambda: batch_loss(model, data, np.arange(3), training=False))


def check_gradients_all(full=False) -> list[Check]:
    out = [mlp_gradients(a) for a in act.NAMES]
    subset = act.NAMES if full else ("relu", "penalized-tanh", "maxout-3", "prelu", "swish")
    out += [cnn_gradients(a) for a in subset]
    out += [tagger_gradients("rnn", a) for a in subset]
    out += [tagger_gradients("lstm", a) for a in subset if not a.startswith("maxout")]
    out.append(tagger_gradients("lstm", "penalized-tanh", gate_sigma="penalized-tanh"))
    return out


def _brute_best(dev, test):
    best_i, best_v = 0, None
    for i in range(dev.shape[0]):
        v = sum(dev[i]) / dev.shape[1]
        if best_v is None or v > best_v:
            best_i, best_v = i, v
    return sum(test[best_i]) / test.shape[1]


def _brute_spearman(a, b):
    def ranks(v):
        return [sum(1 for w in v if w < x) + 1 for x in v]

    ra, rb = ranks(a), ranks(b)
    n = len(a)
    return 1 - 6 * sum((x - y) ** 2 for x, y in zip(ra, rb)) / (n * (n * n - 1))


def check_protocol(seed=0, fixtures=20) -> list[Check]:
    rng = np.random.default_rng(seed)
    ok_best = ok_rank = True
    for _ in range(fixtures):
        dev, test = rng.random((8, 3)), rng.random((8, 3))
        ok_best &= abs(report.best_of(dev, test) - _brute_best(dev, test)) < 1e-12
        a, b = rng.permutation(9), rng.permutation(9)
        ok_rank &= abs(report.spearman(a, b) - _brute_spearman(a, b)) < 1e-12
    layers = rng.integers(1, 5, 40)
    drop = rng.uniform(0.1, 0.75, 40)
    recs = [{"layers": int(n), "dropout": float(d), "score": 2 * np.log(n) + 3 * d + 1} for n, d in zip(layers, drop)]
    fit = report.fit_regression(recs, numeric=[("layers", "log"), ("dropout", "identity")], categorical=[])
    ok_reg = (abs(fit.coefficients["layers"] - 2) < 1e-8 and abs(fit.coefficients["dropout"] - 3) < 1e-8
              and abs(fit.intercept - 1) < 1e-8)
    return [
        Check("oracle:best_of", bool(ok_best), f"{fixtures} random fixtures"),
        Check("oracle:spearman", bool(ok_rank), f"{fixtures} random permutations"),
        Check("oracle:regression", ok_reg, f"recovered {fit.coefficients}, intercept {fit.intercept:.10f}"),
    ]


def run_all(full=False) -> list[Check]:
    return list(itertools.chain(check_values(), check_gradients_all(full), check_protocol()))

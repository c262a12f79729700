"""First-order optimizers with keras-default learning rates.

State lives on each :class:`Parameter` (``param.state``) so a parameter list
can be checkpointed or inspected without the optimizer object.
"""
from __future__ import annotations

import numpy as np

DEFAULT_LR = {
    "sgd": 0.01,
    "adam": 0.001,
    "rmsprop": 0.001,
    "adagrad": 0.01,
    "adadelta": 1.0,
    "adamax": 0.002,
    "nadam": 0.002,
}
OPTIMIZERS = ("adam", "rmsprop", "adagrad", "adadelta", "adamax", "nadam", "sgd")

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8
RMSPROP_RHO = 0.9
ADADELTA_RHO = 0.95


class NonFiniteGradient(FloatingPointError):
    pass


def _slot(p, name):
    s = p.state.get(name)
    if s is None:
        s = p.state[name] = np.zeros_like(p.data)
    return s


def _sgd(p, g, lr, t):
    p.data -= lr * g


def _adam(p, g, lr, t):
    m, v = _slot(p, "m"), _slot(p, "v")
    m += (1 - BETA1) * (g - m)
    v += (1 - BETA2) * (g * g - v)
    m_hat = m / (1 - BETA1 ** t)
    v_hat = v / (1 - BETA2 ** t)
    p.data -= lr * m_hat / (np.sqrt(v_hat) + EPS)


def _nadam(p, g, lr, t):
    m, v = _slot(p, "m"), _slot(p, "v")
    m += (1 - BETA1) * (g - m)
    v += (1 - BETA2) * (g * g - v)
    m_hat = m / (1 - BETA1 ** t)
    v_hat = v / (1 - BETA2 ** t)
    nesterov = BETA1 * m_hat + (1 - BETA1) * g / (1 - BETA1 ** t)
    p.data -= lr * nesterov / (np.sqrt(v_hat) + EPS)


def _adamax(p, g, lr, t):
    m, u = _slot(p, "m"), _slot(p, "u")
    m += (1 - BETA1) * (g - m)
    np.maximum(BETA2 * u, np.abs(g), out=u)
    p.data -= (lr / (1 - BETA1 ** t)) * m / (u + EPS)


def _rmsprop(p, g, lr, t):
    v = _slot(p, "v")
    v += (1 - RMSPROP_RHO) * (g * g - v)
    p.data -= lr * g / (np.sqrt(v) + EPS)


def _adagrad(p, g, lr, t):
    a = _slot(p, "accum")
    a += g * g
    p.data -= lr * g / (np.sqrt(a) + EPS)


def _adadelta(p, g, lr, t):
    a, d = _slot(p, "accum"), _slot(p, "delta_accum")
    a += (1 - ADADELTA_RHO) * (g * g - a)
    step = g * np.sqrt(d + EPS) / np.sqrt(a + EPS)
    p.data -= lr * step
    d += (1 - ADADELTA_RHO) * (step * step - d)


_RULES = {
    "sgd": _sgd,
    "adam": _adam,
    "nadam": _nadam,
    "adamax": _adamax,
    "rmsprop": _rmsprop,
    "adagrad": _adagrad,
    "adadelta": _adadelta,
}


class Optimizer:
    def __init__(self, kind: str, params, lr: float | None = None):
        if kind not in _RULES:
            raise ValueError(f"unknown optimizer {kind!r}")
        lr = DEFAULT_LR[kind] if lr is None else lr
        if not lr >= 0:
            raise ValueError(f"learning rate must be non-negative, got {lr}")
        self.kind = kind
        self.lr = lr
        self.params = list(params)
        self.t = 0

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self):
        for p in self.params:
            if not np.all(np.isfinite(p.grad)):
                raise NonFiniteGradient(f"non-finite gradient in {p.name or p}")
        self.t += 1
        rule = _RULES[self.kind]
        for p in self.params:
            rule(p, p.grad, self.lr, self.t)


def optimizer_step(kind: str, params, lr: float | None = None, t: int = 1):
    """One stateless-call update; ``t`` is the step count used for bias correction."""
    opt = Optimizer(kind, params, lr)
    opt.t = t - 1
    opt.step()

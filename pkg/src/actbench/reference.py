"""High-precision (mpmath) reference values for the scalar activations.

Written directly from the closed forms, independently of the numpy code in
:mod:`actbench.activations`; used as the oracle by self-checks and tests.
"""
from __future__ import annotations

import mpmath as mp

from .activations import ELU_ALPHA, PENALTY, PRELU_INIT, SELU_ALPHA, SELU_LAMBDA

DIGITS = 40


def _sig(x):
    return 1 / (1 + mp.exp(-x))


def _elu(x, alpha):
    return x if x > 0 else alpha * (mp.exp(x) - 1)


_REF = {
    "sigmoid": _sig,
    "tanh": mp.tanh,
    "sin": mp.sin,
    "relu": lambda x: max(x, mp.mpf(0)),
    "lrelu-0.01": lambda x: max(x, mp.mpf("0.01") * x),
    "lrelu-0.30": lambda x: max(x, mp.mpf("0.3") * x),
    "prelu": lambda x: x if x >= 0 else mp.mpf(PRELU_INIT) * x,
    "penalized-tanh": lambda x: mp.tanh(x) if x > 0 else mp.mpf(PENALTY) * mp.tanh(x),
    "swish": lambda x: x * _sig(x),
    "maxsig": lambda x: max(x, _sig(x)),
    "cosid": lambda x: mp.cos(x) - x,
    "minsin": lambda x: min(x, mp.sin(x)),
    "arctid": lambda x: mp.atan(x) ** 2 - x,
    "maxtanh": lambda x: max(x, mp.tanh(x)),
    "linear": lambda x: x,
    "cube": lambda x: x ** 3,
    "elu": lambda x: _elu(x, mp.mpf(ELU_ALPHA)),
    "selu": lambda x: mp.mpf(SELU_LAMBDA) * _elu(x, mp.mpf(SELU_ALPHA)),
}


def reference_value(kind: str, x: float) -> float:
    with mp.workdps(DIGITS):
        return float(_REF[kind](mp.mpf(x)))


def reference_maxout(z) -> tuple[float, int]:
    """Brute-force max and first argmax."""
    best, where = None, None
    for i, v in enumerate(z):
        if best is None or v > best:
            best, where = v, i
    return float(best), where

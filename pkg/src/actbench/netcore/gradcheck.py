"""Central finite-difference checks of reverse-mode gradients."""
from __future__ import annotations

import numpy as np

from .tensor import backward


def relative_error(analytic, numeric):
    """Elementwise ``|a - n| / max(1, |a|, |n|)``."""
    analytic, numeric = np.asarray(analytic), np.asarray(numeric)
    return np.abs(analytic - numeric) / np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))


def numeric_gradient(f, param, h=1e-5):
    grad = np.zeros_like(param.data)
    flat = param.data.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        up = f()
        flat[i] = old - h
        down = f()
        flat[i] = old
        grad.reshape(-1)[i] = (up - down) / (2 * h)
    return grad


def check_gradients(loss_fn, params, h=1e-5) -> dict[str, float]:
    """Max relative error per parameter between backward() and central differences.

    ``loss_fn`` builds a fresh graph and returns the scalar loss Tensor.
    """
    for p in params:
        p.zero_grad()
    backward(loss_fn())
    analytic = {id(p): p.grad.copy() for p in params}

    def value():
        return float(loss_fn().data)

    report = {}
    for k, p in enumerate(params):
        numeric = numeric_gradient(value, p, h)
        key = p.name or f"param{k}"
        report[key] = float(relative_error(analytic[id(p)], numeric).max()) if p.data.size else 0.0
    return report

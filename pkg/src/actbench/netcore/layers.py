"""Parameterised building blocks shared by the three model families."""
from __future__ import annotations

import numpy as np

from .. import activations as act
from .init import init_blockwise, init_tensor
from .tensor import (
    Parameter,
    ShapeError,
    activate,
    add,
    conv1d,
    linear,
    maxout,
    mul,
    split,
)


class Module:
    def parameters(self) -> list[Parameter]:
        params = []
        for value in vars(self).values():
            if isinstance(value, Parameter):
                params.append(value)
            elif isinstance(value, Module):
                params.extend(value.parameters())
            elif isinstance(value, (list, tuple)):
                for item in value:
                    if isinstance(item, Module):
                        params.extend(item.parameters())
        return params


class Nonlinearity(Module):
    """Applies an activation to a pre-activation whose width is ``units * arity``.

    Owns the shared prelu slope when the activation is prelu.
    """

    def __init__(self, spec, name=""):
        self.spec = act.get(spec)
        self.slope = Parameter(np.array(self.spec.slope), f"{name}.slope") if self.spec.kind == "prelu" else None

    @property
    def arity(self) -> int:
        return self.spec.arity

    def __call__(self, z):
        if self.spec.is_maxout:
            return maxout(z, self.spec.arity)
        return activate(z, self.spec, self.slope)


class Dense(Module):
    """``f(x W + b)``; with maxout-k the layer keeps k affine maps per unit."""

    def __init__(self, d_in, units, activation, initializer, rng, name="dense"):
        self.nonlin = Nonlinearity(activation, name) if activation is not None else None
        k = self.nonlin.arity if self.nonlin else 1
        self.W = Parameter(init_tensor(initializer, (d_in, units * k), d_in, units, rng), f"{name}.W")
        self.b = Parameter(np.zeros(units * k), f"{name}.b")
        self.units = units

    def __call__(self, x):
        z = linear(x, self.W, self.b)
        return self.nonlin(z) if self.nonlin else z


class Embedding(Module):
    def __init__(self, vocab_size, dim, rng, initial=None, name="embedding"):
        if initial is None:
            initial = init_tensor("random-uniform", (vocab_size, dim), vocab_size, dim, rng)
        self.table = Parameter(initial, f"{name}.table")


class Conv1D(Module):
    def __init__(self, d_in, n_filters, size, activation, initializer, rng, name="conv"):
        self.nonlin = Nonlinearity(activation, name)
        k = self.nonlin.arity
        # filters are [n_k * arity, h, d]; fans follow the keras convention
        flat = init_tensor(initializer, (size * d_in, n_filters * k), size * d_in, size * n_filters, rng)
        self.filters = Parameter(flat.T.reshape(n_filters * k, size, d_in).copy(), f"{name}.filters")
        self.bias = Parameter(np.zeros(n_filters * k), f"{name}.bias")
        self.size = size

    def __call__(self, x):
        return self.nonlin(conv1d(x, self.filters, self.bias))


class RNNCell(Module):
    """``h_i = f(h_{i-1} W + w_i U + b)``."""

    def __init__(self, d_in, units, activation, initializer, recurrent_initializer, rng, name="rnn"):
        self.nonlin = Nonlinearity(activation, name)
        k = self.nonlin.arity
        self.units = units
        self.U = Parameter(init_tensor(initializer, (d_in, units * k), d_in, units, rng), f"{name}.U")
        self.W = Parameter(init_blockwise(recurrent_initializer, units, k, rng), f"{name}.W")
        self.b = Parameter(np.zeros(units * k), f"{name}.b")

    def zero_state(self, batch):
        return np.zeros((batch, self.units))

    def step(self, h_prev, w_i):
        if h_prev.shape[-1] != self.units:
            raise ShapeError(f"state width {h_prev.shape[-1]} != {self.units}")
        z = add(linear(h_prev, self.W), linear(w_i, self.U, self.b))
        return self.nonlin(z)


class LSTMCell(Module):
    """LSTM block with swappable gate (sigma) and squashing (tau) activations.

    f, i, o = sigma([h; x] W_{f,i,o});  c = f*c + i*tau([h; x] W_c);  h = o*tau(c)
    """

    def __init__(self, d_in, units, gate_sigma, gate_tau, initializer, recurrent_initializer, rng, name="lstm"):
        self.sigma = act.get(gate_sigma)
        self.tau = act.get(gate_tau)
        if self.sigma.is_maxout or self.tau.is_maxout:
            raise ValueError("LSTM gate activations must be scalar functions")
        self.units = units
        self.Wx = Parameter(init_tensor(initializer, (d_in, 4 * units), d_in, units, rng), f"{name}.Wx")
        self.Wh = Parameter(init_blockwise(recurrent_initializer, units, 4, rng), f"{name}.Wh")

    def zero_state(self, batch):
        return np.zeros((batch, self.units)), np.zeros((batch, self.units))

    def step(self, h_prev, c_prev, x_t):
        if h_prev.shape[-1] != self.units or c_prev.shape[-1] != self.units:
            raise ShapeError(f"state width does not match {self.units} units")
        return self.step_from_preactivation(add(linear(h_prev, self.Wh), linear(x_t, self.Wx)), c_prev)

    def step_from_preactivation(self, z, c_prev):
        zf, zi, zo, zc = split(z, 4)
        f = activate(zf, self.sigma)
        i = activate(zi, self.sigma)
        o = activate(zo, self.sigma)
        c = add(mul(f, c_prev), mul(i, activate(zc, self.tau)))
        return mul(o, activate(c, self.tau)), c

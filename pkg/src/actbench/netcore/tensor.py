"""Dense float64 tensors with a recorded computation graph.

Each op returns a new :class:`Tensor` holding its parents and a closure that
maps the output gradient to one gradient per parent. :func:`backward` walks
that graph once, accumulates into every reachable :class:`Parameter` and then
releases the graph, so a second call without a fresh forward pass fails.
"""
from __future__ import annotations

import numpy as np

from .. import activations as act


class GraphError(RuntimeError):
    """Raised by backward() when no forward graph is recorded."""


class ShapeError(ValueError):
    pass


class Tensor:
    __slots__ = ("data", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, _parents=(), _backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.shape})"

    def item(self) -> float:
        return float(self.data)

    def backward(self):
        backward(self)

    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


class Parameter(Tensor):
    """A trainable leaf: value, gradient and optimizer state of equal shape."""

    __slots__ = ("grad", "state", "name")

    def __init__(self, data, name=""):
        super().__init__(data, requires_grad=True)
        self.grad = np.zeros_like(self.data)
        self.state: dict[str, np.ndarray] = {}
        self.name = name

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.shape})"

    def zero_grad(self):
        self.grad.fill(0.0)


def _node(data, parents, fn):
    parents = tuple(parents)
    if any(p.requires_grad for p in parents):
        return Tensor(data, True, parents, fn)
    return Tensor(data)


def _wrap(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, n in enumerate(shape):
        if n == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


def backward(loss: Tensor):
    """Accumulate d(loss)/d(param) into ``param.grad`` for all reachable parameters."""
    if loss._backward is None:
        raise GraphError("no computation graph recorded; run a forward pass first")
    order, seen = [], set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))

    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._backward is None:
            if isinstance(node, Parameter):
                node.grad += g
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg
    for node in order:
        if not isinstance(node, Parameter):
            node._parents = ()
            node._backward = None


# --- elementwise and linear algebra -----------------------------------------

def add(a, b):
    a, b = _wrap(a), _wrap(b)

    def fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _node(a.data + b.data, (a, b), fn)


def mul(a, b):
    a, b = _wrap(a), _wrap(b)

    def fn(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _node(a.data * b.data, (a, b), fn)


def one_minus(a):
    return _node(1.0 - a.data, (a,), lambda g: (-g,))


def matmul(a, b):
    a, b = _wrap(a), _wrap(b)
    if a.shape[-1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")

    def fn(g):
        ga = g @ b.data.T
        gb = a.data.reshape(-1, a.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        return ga, gb

    return _node(a.data @ b.data, (a, b), fn)


def linear(x, W, b=None):
    """Row-wise affine map ``x @ W + b`` over the last axis of ``x``."""
    x, W = _wrap(x), _wrap(W)
    b = None if b is None else _wrap(b)
    if x.shape[-1] != W.shape[0]:
        raise ShapeError(f"input width {x.shape[-1]} does not match weights {W.shape}")
    if b is not None and b.shape != (W.shape[1],):
        raise ShapeError(f"bias shape {b.shape} does not match weights {W.shape}")
    out = x.data @ W.data
    if b is not None:
        out = out + b.data

    def fn(g):
        g2 = g.reshape(-1, g.shape[-1])
        gx = g @ W.data.T if x.requires_grad else None
        gW = x.data.reshape(-1, x.shape[-1]).T @ g2
        if b is None:
            return gx, gW
        return gx, gW, g2.sum(axis=0)

    parents = (x, W) if b is None else (x, W, b)
    return _node(out, parents, fn)


def total(a):
    a = _wrap(a)
    return _node(a.data.sum(), (a,), lambda g: (np.broadcast_to(g, a.shape).copy(),))


def scale(a, c: float):
    return _node(a.data * c, (a,), lambda g: (g * c,))


def concat(tensors, axis=-1):
    tensors = [_wrap(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    cuts = np.cumsum(sizes)[:-1]

    def fn(g):
        return tuple(np.split(g, cuts, axis=axis))

    return _node(np.concatenate([t.data for t in tensors], axis=axis), tensors, fn)


def stack(tensors, axis=1):
    tensors = [_wrap(t) for t in tensors]

    def fn(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(tensors)))

    return _node(np.stack([t.data for t in tensors], axis=axis), tensors, fn)


def select(a, index, axis=1):
    """``a`` indexed at ``index`` along ``axis`` (the axis is dropped)."""
    a = _wrap(a)

    def fn(g):
        full = np.zeros_like(a.data)
        sl = [slice(None)] * a.data.ndim
        sl[axis] = index
        full[tuple(sl)] = g
        return (full,)

    return _node(np.take(a.data, index, axis=axis), (a,), fn)


def split(a, n, axis=-1):
    """Split the last axis into ``n`` equal chunks, each its own node."""
    width = a.shape[axis] // n
    return [_slice_last(a, i * width, (i + 1) * width) for i in range(n)]


def _slice_last(a, lo, hi):
    def fn(g):
        full = np.zeros_like(a.data)
        full[..., lo:hi] = g
        return (full,)

    return _node(a.data[..., lo:hi], (a,), fn)


def reverse_time(a):
    """Flip axis 1 (time) of a [batch, time, ...] tensor."""
    return _node(a.data[:, ::-1], (a,), lambda g: (g[:, ::-1].copy(),))


def embedding(table, ids):
    """Rows of ``table`` gathered at integer ``ids`` (any shape)."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise IndexError(f"token id out of range for vocabulary of {table.shape[0]}")

    def fn(g):
        full = np.zeros_like(table.data)
        np.add.at(full, ids.ravel(), g.reshape(-1, table.shape[1]))
        return (full,)

    return _node(table.data[ids], (table,), fn)


# --- activations ---------------------------------------------------------------

def activate(x, spec, slope=None):
    """Apply a scalar activation elementwise.

    For prelu, ``slope`` is the layer's shared learnable :class:`Parameter`;
    without one the ActivationSpec's fixed slope is used.
    """
    spec = act.get(spec)
    x = _wrap(x)
    if spec.kind == "prelu" and slope is not None:
        a = slope.data
        neg = np.minimum(x.data, 0.0)
        out = np.maximum(x.data, 0.0) + a * neg

        def fn(g):
            return g * np.where(x.data >= 0, 1.0, a), np.sum(g * neg).reshape(slope.shape)

        return _node(out, (x, slope), fn)

    with np.errstate(over="ignore", invalid="ignore"):
        out = act.evaluate(spec, x.data)

    def fn(g):
        with np.errstate(over="ignore", invalid="ignore"):
            return (g * act.derivative(spec, x.data),)

    return _node(out, (x,), fn)


def maxout(z, k: int):
    """Max over ``k`` branches; the last axis of ``z`` is laid out as [unit, branch].

    The gradient flows only to the winning branch (lowest index on ties).
    """
    z = _wrap(z)
    if z.shape[-1] % k:
        raise ShapeError(f"width {z.shape[-1]} not divisible by maxout arity {k}")
    grouped = z.data.reshape(*z.shape[:-1], z.shape[-1] // k, k)
    winner = grouped.argmax(axis=-1)
    out = np.take_along_axis(grouped, winner[..., None], axis=-1)[..., 0]

    def fn(g):
        full = np.zeros_like(grouped)
        np.put_along_axis(full, winner[..., None], g[..., None], axis=-1)
        return (full.reshape(z.shape),)

    return _node(out, (z,), fn)


# --- conv / pooling -------------------------------------------------------------

class SequenceTooShort(ValueError):
    pass


class EmptyPool(ValueError):
    pass


def conv1d(x, filters, bias):
    """Valid 1-D convolution (pre-activation).

    ``x`` is [batch, T, d] (or [T, d]), ``filters`` [n_k, h, d], ``bias`` [n_k];
    the result is [batch, T-h+1, n_k].
    """
    x, filters, bias = _wrap(x), _wrap(filters), _wrap(bias)
    squeeze = x.data.ndim == 2
    xd = x.data[None] if squeeze else x.data
    n_k, h, d = filters.shape
    B, T, dx = xd.shape
    if dx != d:
        raise ShapeError(f"input width {dx} does not match filter width {d}")
    if T < h:
        raise SequenceTooShort(f"sequence of length {T} shorter than filter size {h}")
    windows = np.lib.stride_tricks.sliding_window_view(xd, h, axis=1)  # [B, T', d, h]
    windows = windows.transpose(0, 1, 3, 2).reshape(B, T - h + 1, h * d)
    Wf = filters.data.reshape(n_k, h * d).T
    out = windows @ Wf + bias.data

    def fn(g):
        gw = (windows.reshape(-1, h * d).T @ g.reshape(-1, n_k)).T.reshape(filters.shape)
        gb = g.reshape(-1, n_k).sum(axis=0)
        gx = None
        if x.requires_grad:
            gwin = (g @ Wf.T).reshape(B, T - h + 1, h, d)
            gx = np.zeros_like(xd)
            for j in range(h):
                gx[:, j:j + T - h + 1] += gwin[:, :, j]
            if squeeze:
                gx = gx[0]
        return gx, gw, gb

    return _node(out[0] if squeeze else out, (x, filters, bias), fn)


def global_max_pool(x):
    """Max over the time axis (-2); ties route the gradient to the earliest position."""
    x = _wrap(x)
    if x.shape[-2] == 0:
        raise EmptyPool("cannot pool over zero positions")
    winner = x.data.argmax(axis=-2)
    out = np.take_along_axis(x.data, np.expand_dims(winner, -2), axis=-2).squeeze(-2)

    def fn(g):
        full = np.zeros_like(x.data)
        np.put_along_axis(full, np.expand_dims(winner, -2), np.expand_dims(g, -2), axis=-2)
        return (full,)

    return _node(out, (x,), fn)


# --- loss & regularisation ------------------------------------------------------

class LabelError(ValueError):
    pass


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits, labels, reduction="mean"):
    """Negative log-likelihood of ``labels`` under softmax(``logits``).

    ``logits`` may carry any number of leading axes matching ``labels``.
    Returns ``(loss, probs)``.
    """
    logits = _wrap(logits)
    labels = np.asarray(labels, dtype=np.int64)
    C = logits.shape[-1]
    if labels.shape != logits.shape[:-1]:
        raise ShapeError(f"labels {labels.shape} do not match logits {logits.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= C):
        raise LabelError(f"labels must lie in [0, {C})")
    flat = logits.data.reshape(-1, C)
    y = labels.ravel()
    z = flat - flat.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    nll = logsum - z[np.arange(len(y)), y]
    probs = np.exp(z - logsum[:, None])
    n = max(len(y), 1)
    norm = n if reduction == "mean" else 1.0

    def fn(g):
        d = probs.copy()
        d[np.arange(len(y)), y] -= 1.0
        return ((g / norm) * d.reshape(logits.shape),)

    loss = _node(np.asarray(nll.sum() / norm), (logits,), fn)
    return loss, probs.reshape(logits.shape)


class InvalidRate(ValueError):
    pass


def dropout(x, rate: float, rng: np.random.Generator | None, training: bool):
    """Inverted dropout; identity at inference or when ``rate`` is 0."""
    if not 0.0 <= rate < 1.0:
        raise InvalidRate(f"dropout rate must lie in [0, 1), got {rate}")
    x = _wrap(x)
    if not training or rate == 0.0:
        return x
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return mul(x, mask)

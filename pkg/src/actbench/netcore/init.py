"""Weight initializers, all drawn from an explicit numpy Generator."""
from __future__ import annotations

import math

import numpy as np

from .tensor import ShapeError

INITIALIZERS = (
    "random-normal",
    "random-uniform",
    "variance-scaling",
    "orthogonal",
    "lecun-uniform",
    "glorot-normal",
    "glorot-uniform",
    "he-normal",
    "he-uniform",
)
RECURRENT_INITIALIZERS = INITIALIZERS + ("identity",)


def _truncated_normal(rng, std, shape, bound=2.0):
    out = rng.normal(0.0, std, size=shape)
    bad = np.abs(out) > bound * std
    while bad.any():
        out[bad] = rng.normal(0.0, std, size=int(bad.sum()))
        bad = np.abs(out) > bound * std
    return out


def _orthogonal(rng, shape):
    rows = shape[0]
    cols = int(np.prod(shape[1:])) if len(shape) > 1 else 1
    flat = rng.normal(size=(max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(flat)
    q = q * np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return q.reshape(shape)


def init_tensor(kind: str, shape, fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    shape = tuple(int(s) for s in shape)
    if kind == "identity":
        if len(shape) != 2 or shape[0] != shape[1]:
            raise ShapeError(f"identity initializer needs a square matrix, got {shape}")
        return np.eye(shape[0])
    if kind == "random-normal":
        return rng.normal(0.0, 0.05, size=shape)
    if kind == "random-uniform":
        return rng.uniform(-0.05, 0.05, size=shape)
    if kind == "variance-scaling":
        return _truncated_normal(rng, math.sqrt(1.0 / fan_in), shape)
    if kind == "orthogonal":
        return _orthogonal(rng, shape)
    if kind == "lecun-uniform":
        limit = math.sqrt(3.0 / fan_in)
        return rng.uniform(-limit, limit, size=shape)
    if kind == "glorot-normal":
        return rng.normal(0.0, math.sqrt(2.0 / (fan_in + fan_out)), size=shape)
    if kind == "glorot-uniform":
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=shape)
    if kind == "he-normal":
        return rng.normal(0.0, math.sqrt(2.0 / fan_in), size=shape)
    if kind == "he-uniform":
        limit = math.sqrt(6.0 / fan_in)
        return rng.uniform(-limit, limit, size=shape)
    raise ValueError(f"unknown initializer {kind!r}")


def init_blockwise(kind: str, rows: int, blocks: int, rng: np.random.Generator) -> np.ndarray:
    """A [rows, rows*blocks] recurrent matrix initialized one square block at a time."""
    return np.concatenate(
        [init_tensor(kind, (rows, rows), rows, rows, rng) for _ in range(blocks)], axis=1
    )

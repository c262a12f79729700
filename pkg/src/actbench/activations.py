"""The 21 activation functions, their analytic derivatives and property catalog.

Every scalar function works elementwise on floats or numpy arrays. Maxout is
the one family that does not act on a scalar: it takes the maximum over ``k``
affine pre-activations, see :func:`eval_maxout`.

At non-differentiable points the right-hand derivative is returned, so
``derivative("relu", 0.0) == 1.0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np
from scipy.special import expit

ArrayLike = Union[float, np.ndarray]

ELU_ALPHA = 1.0
SELU_LAMBDA = 1.0507009873554805
SELU_ALPHA = 1.6732632423543772
PRELU_INIT = 0.25
PENALTY = 0.25

# minimum of x * sigmoid(x), attained at x = -1.27846...
_SWISH_MIN = -0.27846454276107379

NAMES = (
    "sigmoid",
    "tanh",
    "sin",
    "relu",
    "lrelu-0.01",
    "lrelu-0.30",
    "prelu",
    "penalized-tanh",
    "swish",
    "maxsig",
    "cosid",
    "minsin",
    "arctid",
    "maxtanh",
    "maxout-2",
    "maxout-3",
    "maxout-4",
    "linear",
    "cube",
    "elu",
    "selu",
)


class UnknownActivation(KeyError):
    pass


class MaxoutInputError(ValueError):
    pass


@dataclass(frozen=True)
class ActivationSpec:
    kind: str
    slope: float = PRELU_INIT
    arity: int = 1

    def __post_init__(self):
        if self.kind not in NAMES:
            raise UnknownActivation(self.kind)
        expected = int(self.kind.split("-")[1]) if self.kind.startswith("maxout") else 1
        if self.arity != expected:
            raise ValueError(f"{self.kind} requires arity {expected}, got {self.arity}")

    @property
    def is_maxout(self) -> bool:
        return self.arity > 1

    @property
    def leak(self) -> float | None:
        """Negative-region slope for the LReLU family (and prelu), else None."""
        if self.kind == "lrelu-0.01":
            return 0.01
        if self.kind == "lrelu-0.30":
            return 0.3
        if self.kind == "prelu":
            return self.slope
        return None

    @property
    def penalty(self) -> float | None:
        return PENALTY if self.kind == "penalized-tanh" else None

    def __str__(self):
        return self.kind


def get(spec: ActivationSpec | str) -> ActivationSpec:
    """Coerce an activation name to its spec. Specs pass through untouched."""
    if isinstance(spec, ActivationSpec):
        return spec
    if spec not in NAMES:
        raise UnknownActivation(spec)
    if spec.startswith("maxout"):
        return ActivationSpec(spec, arity=int(spec.split("-")[1]))
    return ActivationSpec(spec)


def catalog() -> list[ActivationSpec]:
    return [get(name) for name in NAMES]


def scalar_names() -> list[str]:
    return [name for name in NAMES if not name.startswith("maxout")]


# --- forward ---------------------------------------------------------------

def _leaky(x, a):
    return np.where(x >= 0, x, a * x)


def _penalized_tanh(x):
    t = np.tanh(x)
    return np.where(x > 0, t, PENALTY * t)


def _elu(x, alpha=ELU_ALPHA):
    return np.where(x > 0, x, alpha * np.expm1(np.minimum(x, 0.0)))


_FORWARD: dict[str, Callable] = {
    "sigmoid": expit,
    "tanh": np.tanh,
    "sin": np.sin,
    "relu": lambda x: np.maximum(x, 0.0),
    "lrelu-0.01": lambda x: _leaky(x, 0.01),
    "lrelu-0.30": lambda x: _leaky(x, 0.3),
    "penalized-tanh": _penalized_tanh,
    "swish": lambda x: x * expit(x),
    "maxsig": lambda x: np.maximum(x, expit(x)),
    "cosid": lambda x: np.cos(x) - x,
    "minsin": lambda x: np.minimum(x, np.sin(x)),
    "arctid": lambda x: np.arctan(x) ** 2 - x,
    "maxtanh": lambda x: np.maximum(x, np.tanh(x)),
    "linear": lambda x: x,
    "cube": lambda x: x ** 3,
    "elu": _elu,
    "selu": lambda x: SELU_LAMBDA * _elu(x, SELU_ALPHA),
}


# --- derivatives (right-hand at kinks) --------------------------------------

def _dsigmoid(x):
    s = expit(x)
    return s * (1.0 - s)


def _dtanh(x):
    return 1.0 - np.tanh(x) ** 2


def _delu(x, alpha=ELU_ALPHA):
    return np.where(x >= 0, 1.0, alpha * np.exp(np.minimum(x, 0.0)))


def _dswish(x):
    s = expit(x)
    return s + x * s * (1.0 - s)


_DERIVATIVE: dict[str, Callable] = {
    "sigmoid": _dsigmoid,
    "tanh": _dtanh,
    "sin": np.cos,
    "relu": lambda x: np.where(x >= 0, 1.0, 0.0),
    "lrelu-0.01": lambda x: np.where(x >= 0, 1.0, 0.01),
    "lrelu-0.30": lambda x: np.where(x >= 0, 1.0, 0.3),
    "penalized-tanh": lambda x: np.where(x >= 0, 1.0, PENALTY) * _dtanh(x),
    "swish": _dswish,
    # x - sigmoid(x), x - tanh(x) and x - sin(x) are all increasing, so the
    # identity branch is the one to the right of each crossing.
    "maxsig": lambda x: np.where(x >= expit(x), 1.0, _dsigmoid(x)),
    "cosid": lambda x: -np.sin(x) - 1.0,
    "minsin": lambda x: np.where(x >= np.sin(x), np.cos(x), 1.0),
    "arctid": lambda x: 2.0 * np.arctan(x) / (1.0 + x * x) - 1.0,
    "maxtanh": lambda x: np.where(x >= np.tanh(x), 1.0, _dtanh(x)),
    "linear": lambda x: np.ones_like(x),
    "cube": lambda x: 3.0 * x * x,
    "elu": _delu,
    "selu": lambda x: SELU_LAMBDA * _delu(x, SELU_ALPHA),
}


def _scalar_spec(spec) -> ActivationSpec:
    spec = get(spec)
    if spec.is_maxout:
        raise MaxoutInputError("maxout requires vector input")
    return spec


def _out(x, y):
    # keep python floats in, python floats out
    return float(y) if np.ndim(x) == 0 else y


def evaluate(spec: ActivationSpec | str, x: ArrayLike) -> ArrayLike:
    """Value of a scalar activation, elementwise over ``x``."""
    spec = _scalar_spec(spec)
    xa = np.asarray(x, dtype=np.float64)
    if spec.kind == "prelu":
        y = _leaky(xa, spec.slope)
    else:
        y = _FORWARD[spec.kind](xa)
    return _out(x, y)


def derivative(spec: ActivationSpec | str, x: ArrayLike) -> ArrayLike:
    spec = _scalar_spec(spec)
    xa = np.asarray(x, dtype=np.float64)
    if spec.kind == "prelu":
        y = np.where(xa >= 0, 1.0, spec.slope)
    else:
        y = _DERIVATIVE[spec.kind](xa)
    return _out(x, y)


class MaxoutResult(NamedTuple):
    value: float
    argmax: int


def eval_maxout(spec: ActivationSpec | str, z) -> MaxoutResult:
    """Maximum over the ``k`` pre-activations in ``z``; ties go to the lowest index."""
    spec = get(spec)
    if not spec.is_maxout:
        raise MaxoutInputError(f"{spec.kind} is not a maxout activation")
    z = np.asarray(z, dtype=np.float64).ravel()
    if z.size != spec.arity:
        raise MaxoutInputError(f"{spec.kind} expects {spec.arity} inputs, got {z.size}")
    i = int(np.argmax(z))
    return MaxoutResult(float(z[i]), i)


# --- properties --------------------------------------------------------------

@dataclass(frozen=True)
class PropertyRecord:
    saturating: bool
    monotone: bool
    zero_centered: bool
    range_lo: float
    range_hi: float


_INF = math.inf


def _record(lo, hi, monotone=True, saturating=None):
    if saturating is None:
        saturating = math.isfinite(lo) and math.isfinite(hi)
    return PropertyRecord(saturating, monotone, lo == -hi, lo, hi)


_PROPERTIES = {
    "sigmoid": _record(0.0, 1.0),
    "tanh": _record(-1.0, 1.0),
    # bounded but oscillating: no limits at infinity, hence not saturating
    "sin": _record(-1.0, 1.0, monotone=False, saturating=False),
    "relu": _record(0.0, _INF),
    "lrelu-0.01": _record(-_INF, _INF),
    "lrelu-0.30": _record(-_INF, _INF),
    "prelu": _record(-_INF, _INF),
    "penalized-tanh": _record(-PENALTY, 1.0),
    "swish": _record(_SWISH_MIN, _INF, monotone=False),
    "maxsig": _record(0.0, _INF),
    "cosid": _record(-_INF, _INF, monotone=False),
    "minsin": _record(-_INF, 1.0, monotone=False),
    "arctid": _record(-_INF, _INF, monotone=False),
    "maxtanh": _record(-1.0, _INF),
    "maxout-2": _record(-_INF, _INF),
    "maxout-3": _record(-_INF, _INF),
    "maxout-4": _record(-_INF, _INF),
    "linear": _record(-_INF, _INF),
    "cube": _record(-_INF, _INF),
    "elu": _record(-ELU_ALPHA, _INF),
    "selu": _record(-SELU_LAMBDA * SELU_ALPHA, _INF),
}


def properties(kind: ActivationSpec | str) -> PropertyRecord:
    name = kind.kind if isinstance(kind, ActivationSpec) else kind
    try:
        return _PROPERTIES[name]
    except KeyError:
        raise UnknownActivation(name) from None

"""Minimal tensor engine: reverse-mode differentiation, layers, initializers, optimizers."""
from .init import INITIALIZERS, RECURRENT_INITIALIZERS, init_tensor
from .layers import Conv1D, Dense, Embedding, LSTMCell, Module, Nonlinearity, RNNCell
from .optim import DEFAULT_LR, OPTIMIZERS, NonFiniteGradient, Optimizer, optimizer_step
from .tensor import (
    EmptyPool,
    GraphError,
    InvalidRate,
    LabelError,
    Parameter,
    SequenceTooShort,
    ShapeError,
    Tensor,
    activate,
    backward,
    conv1d,
    dropout,
    global_max_pool,
    linear,
    softmax,
    softmax_cross_entropy,
)


def linear_forward(x, W, b):
    return linear(x, W, b)


def conv1d_forward(seq, filters, bias, activation):
    """Activated valid convolution of a [T, d] sequence: [T-h+1, n_k]."""
    return activate(conv1d(seq, filters, bias), activation)


dropout_apply = dropout

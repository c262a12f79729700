"""MLP sentence classifier, 1-D CNN document classifier and bidirectional RNN/LSTM tagger."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import activations as act
from .netcore import (
    Conv1D,
    Dense,
    Embedding,
    LSTMCell,
    Module,
    NonFiniteGradient,
    RNNCell,
    SequenceTooShort,
    ShapeError,
    backward,
    dropout,
    global_max_pool,
    softmax,
    softmax_cross_entropy,
)
from .netcore.tensor import add, concat, embedding, linear, select, stack

FAMILIES = ("mlp", "cnn", "rnn", "lstm")
LAYER_RANGE = {"mlp": (1, 4), "cnn": (1, 3), "rnn": (1, 4), "lstm": (1, 4)}


@dataclass
class ModelSpec:
    family: str
    layers: int = 1
    hidden_units: int = 32  # filters n_k for the CNN
    filter_size: int = 1
    embedding_dim: int = 50
    activation: act.ActivationSpec | str = "relu"
    gate_sigma: act.ActivationSpec | str = "sigmoid"
    gate_tau: act.ActivationSpec | str = "tanh"
    bidirectional: bool = True
    dropout: float = 0.0
    initializer: str = "glorot-uniform"
    recurrent_initializer: str = "orthogonal"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown model family {self.family!r}")
        lo, hi = LAYER_RANGE[self.family]
        if not lo <= self.layers <= hi:
            raise ValueError(f"{self.family} supports {lo}..{hi} layers, got {self.layers}")
        self.activation = act.get(self.activation)
        self.gate_sigma = act.get(self.gate_sigma)
        self.gate_tau = act.get(self.gate_tau)


class TrialDiverged(FloatingPointError):
    """Non-finite loss or gradient; carries the (0-based) epoch it happened in."""

    def __init__(self, epoch, reason="non-finite loss"):
        super().__init__(f"{reason} in epoch {epoch}")
        self.epoch = epoch


# --- models -----------------------------------------------------------------------

class MLP(Module):
    def __init__(self, spec: ModelSpec, d_in: int, n_classes: int, rng: np.random.Generator):
        self.spec = spec
        self.d_in = d_in
        self.hidden = []
        width = d_in
        for i in range(spec.layers):
            self.hidden.append(Dense(width, spec.hidden_units, spec.activation, spec.initializer, rng, f"hidden{i}"))
            width = spec.hidden_units
        self.out = Dense(width, n_classes, None, spec.initializer, rng, "out")

    def logits(self, x, rng=None, training=False):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.d_in:
            raise ShapeError(f"expected input of width {self.d_in}, got shape {x.shape}")
        h = x
        for layer in self.hidden:
            h = dropout(layer(h), self.spec.dropout, rng, training)
        return self.out(h)


class CNN(Module):
    def __init__(self, spec: ModelSpec, vocab_size: int, n_classes: int, rng: np.random.Generator):
        self.spec = spec
        self.embed = Embedding(vocab_size, spec.embedding_dim, rng)
        self.convs = []
        width = spec.embedding_dim
        for i in range(spec.layers):
            self.convs.append(Conv1D(width, spec.hidden_units, spec.filter_size, spec.activation, spec.initializer, rng, f"conv{i}"))
            width = spec.hidden_units
        self.out = Dense(width, n_classes, None, spec.initializer, rng, "out")

    @property
    def receptive_field(self) -> int:
        return self.spec.layers * (self.spec.filter_size - 1) + 1

    def pooled(self, ids, rng=None, training=False):
        ids = np.atleast_2d(np.asarray(ids, dtype=np.int64))
        if ids.shape[1] < self.receptive_field:
            raise SequenceTooShort(
                f"sequence of length {ids.shape[1]} shorter than receptive field {self.receptive_field}"
            )
        h = embedding(self.embed.table, ids)
        for conv in self.convs:
            h = conv(h)
        return dropout(global_max_pool(h), self.spec.dropout, rng, training)

    def logits(self, ids, rng=None, training=False):
        return self.out(self.pooled(ids, rng, training))


class Tagger(Module):
    """Stacked (bi)directional RNN or LSTM with a per-token softmax output."""

    def __init__(self, spec: ModelSpec, vocab_size: int, n_classes: int, rng: np.random.Generator,
                 embeddings: np.ndarray | None = None):
        if spec.family not in ("rnn", "lstm"):
            raise ValueError("Tagger needs family rnn or lstm")
        self.spec = spec
        if embeddings is not None and embeddings.shape != (vocab_size, spec.embedding_dim):
            raise ShapeError(f"embedding matrix {embeddings.shape} != ({vocab_size}, {spec.embedding_dim})")
        self.embed = Embedding(vocab_size, spec.embedding_dim, rng, initial=embeddings)
        self.fwd, self.bwd = [], []
        width = spec.embedding_dim
        for i in range(spec.layers):
            self.fwd.append(self._cell(width, rng, f"fwd{i}"))
            if spec.bidirectional:
                self.bwd.append(self._cell(width, rng, f"bwd{i}"))
            width = spec.hidden_units * (2 if spec.bidirectional else 1)
        self.out = Dense(width, n_classes, None, spec.initializer, rng, "out")

    def _cell(self, d_in, rng, name):
        s = self.spec
        if s.family == "lstm":
            return LSTMCell(d_in, s.hidden_units, s.gate_sigma, s.gate_tau, s.initializer, s.recurrent_initializer, rng, name)
        return RNNCell(d_in, s.hidden_units, s.activation, s.initializer, s.recurrent_initializer, rng, name)

    def _run(self, cell, x, reverse):
        B, T = x.shape[0], x.shape[1]
        steps = range(T - 1, -1, -1) if reverse else range(T)
        outputs = [None] * T
        if isinstance(cell, LSTMCell):
            xw = linear(x, cell.Wx)
            h, c = cell.zero_state(B)
            for t in steps:
                z = add(linear(h, cell.Wh), select(xw, t))
                h, c = cell.step_from_preactivation(z, c)
                outputs[t] = h
        else:
            xu = linear(x, cell.U, cell.b)
            h = cell.zero_state(B)
            for t in steps:
                h = cell.nonlin(add(linear(h, cell.W), select(xu, t)))
                outputs[t] = h
        return stack(outputs, axis=1)

    def encode(self, ids, rng=None, training=False):
        """Top-layer states [B, T, H or 2H]; forward stream first when bidirectional."""
        ids = np.atleast_2d(np.asarray(ids, dtype=np.int64))
        if ids.shape[1] == 0:
            raise ValueError("cannot tag an empty sequence")
        h = embedding(self.embed.table, ids)
        for i, fwd in enumerate(self.fwd):
            streams = [self._run(fwd, h, reverse=False)]
            if self.spec.bidirectional:
                streams.append(self._run(self.bwd[i], h, reverse=True))
            h = concat(streams, axis=-1) if len(streams) > 1 else streams[0]
            h = dropout(h, self.spec.dropout, rng, training)
        return h

    def logits(self, ids, rng=None, training=False):
        return self.out(self.encode(ids, rng, training))


def build_model(spec: ModelSpec, n_classes: int, rng: np.random.Generator, *, d_in=None,
                vocab_size=None, embeddings=None):
    if spec.family == "mlp":
        return MLP(spec, d_in, n_classes, rng)
    if spec.family == "cnn":
        return CNN(spec, vocab_size, n_classes, rng)
    return Tagger(spec, vocab_size, n_classes, rng, embeddings)


def probabilities(model, inputs) -> np.ndarray:
    """Class (or per-token label) distribution at inference."""
    return softmax(model.logits(inputs, training=False).data)


def mlp_forward(model: MLP, x0) -> np.ndarray:
    return probabilities(model, x0)


def cnn_forward(model: CNN, tokens) -> np.ndarray:
    return probabilities(model, np.atleast_2d(tokens))[0]


def rnn_step(cell: RNNCell, h_prev, w_i):
    return cell.step(h_prev, w_i)


def lstm_step(cell: LSTMCell, h_prev, c_prev, x_t):
    return cell.step(h_prev, c_prev, x_t)


def birnn_tag_forward(model: Tagger, tokens) -> np.ndarray:
    """Per-token label probabilities [T, C] for one sequence."""
    return probabilities(model, np.atleast_2d(tokens))[0]


# --- datasets and training ---------------------------------------------------------------

@dataclass
class VectorData:
    X: np.ndarray
    y: np.ndarray

    def __len__(self):
        return len(self.y)

    def groups(self, idx):
        yield self.X[idx], self.y[idx]


@dataclass
class DocumentData:
    ids: np.ndarray  # [n, L], padded
    y: np.ndarray

    def __len__(self):
        return len(self.y)

    def groups(self, idx):
        yield self.ids[idx], self.y[idx]


@dataclass
class SequenceData:
    """Variable-length sequences; a batch is split into equal-length groups."""

    ids: list
    tags: list
    _lengths: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self._lengths = np.array([len(s) for s in self.ids], dtype=np.int64)

    def __len__(self):
        return len(self.ids)

    def groups(self, idx):
        idx = np.asarray(idx)
        lengths = self._lengths[idx]
        for n in np.unique(lengths):
            members = idx[lengths == n]
            yield (np.array([self.ids[i] for i in members], dtype=np.int64),
                   np.array([self.tags[i] for i in members], dtype=np.int64))


def batch_loss(model, data, idx, rng=None, training=True):
    """Mean cross-entropy over every target (examples or tokens) in ``idx``."""
    total, count = None, 0
    for inputs, targets in data.groups(idx):
        loss, _ = softmax_cross_entropy(model.logits(inputs, rng, training), targets, reduction="sum")
        total = loss if total is None else add(total, loss)
        count += targets.size
    return total * (1.0 / count)


def train_epoch(model, data, optimizer, batch_size: int, rng: np.random.Generator, epoch: int = 0) -> float:
    """One shuffled pass of mini-batch steps; returns the mean batch loss."""
    if len(data) == 0:
        raise ValueError("cannot train on an empty dataset")
    order = rng.permutation(len(data))
    losses = []
    for start in range(0, len(order), batch_size):
        idx = order[start:start + batch_size]
        optimizer.zero_grad()
        with np.errstate(over="ignore", invalid="ignore"):
            loss = batch_loss(model, data, idx, rng, training=True)
            if not np.isfinite(loss.data):
                raise TrialDiverged(epoch)
            backward(loss)
        try:
            optimizer.step()
        except NonFiniteGradient as err:
            raise TrialDiverged(epoch, "non-finite gradient") from err
        losses.append(float(loss.data))
    return float(np.mean(losses))


def predict(model, data, idx=None):
    """Flat (predictions, gold labels) over ``idx``; tokens are flattened for taggers."""
    idx = np.arange(len(data)) if idx is None else np.asarray(idx)
    preds, gold = [], []
    for start in range(0, len(idx), 256):
        for inputs, targets in data.groups(idx[start:start + 256]):
            with np.errstate(over="ignore", invalid="ignore"):
                logits = model.logits(inputs, training=False).data
            if not np.all(np.isfinite(logits)):
                raise FloatingPointError("non-finite logits at inference")
            preds.append(logits.argmax(axis=-1).ravel())
            gold.append(np.asarray(targets).ravel())
    return np.concatenate(preds), np.concatenate(gold)

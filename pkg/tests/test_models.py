import math

import numpy as np
import pytest

from actbench import data
from actbench.models import (
    CNN, MLP, DocumentData, ModelSpec, SequenceData, Tagger, TrialDiverged, VectorData, batch_loss, build_model,
    birnn_tag_forward, cnn_forward, lstm_step, mlp_forward, predict, rnn_step, train_epoch,
)
from actbench.netcore import LSTMCell, Optimizer, RNNCell, SequenceTooShort, ShapeError, softmax
from actbench.netcore.gradcheck import check_gradients
from actbench.selfcheck import cnn_gradients, mlp_gradients, tagger_gradients


def rng(seed=0):
    return np.random.default_rng(seed)


def zero_all(model):
    for p in model.parameters():
        p.data[...] = 0.0


# --- spec validation -------------------------------------------------------------

def test_layer_ranges_are_enforced():
    ModelSpec("mlp", layers=4)
    with pytest.raises(ValueError):
        ModelSpec("mlp", layers=5)
    with pytest.raises(ValueError):
        ModelSpec("cnn", layers=4)
    with pytest.raises(ValueError):
        ModelSpec("transformer", layers=1)


# --- MLP -------------------------------------------------------------------------

def test_mlp_zero_weights_give_uniform_distribution():
    model = MLP(ModelSpec("mlp", layers=1, hidden_units=4, activation="tanh"), 3, 5, rng())
    zero_all(model)
    np.testing.assert_allclose(mlp_forward(model, rng(1).normal(size=(4, 3))), 0.2, atol=1e-15)


def test_mlp_linear_collapses_to_one_affine_map():
    model = MLP(ModelSpec("mlp", layers=2, hidden_units=6, activation="linear", initializer="glorot-normal"), 4, 3, rng())
    for p in model.parameters():
        p.data[...] = rng(2).normal(size=p.shape)
    (l1, l2), out = model.hidden, model.out
    W = l1.W.data @ l2.W.data @ out.W.data
    b = (l1.b.data @ l2.W.data + l2.b.data) @ out.W.data + out.b.data
    x = rng(3).normal(size=(10, 4))
    np.testing.assert_allclose(mlp_forward(model, x), softmax(x @ W + b), atol=1e-10, rtol=0)


def test_mlp_rejects_wrong_width():
    model = MLP(ModelSpec("mlp", layers=1, hidden_units=4), 3, 2, rng())
    with pytest.raises(ShapeError):
        mlp_forward(model, np.zeros((2, 4)))


def test_mlp_maxout_layer_has_k_maps_per_unit():
    model = MLP(ModelSpec("mlp", layers=1, hidden_units=4, activation="maxout-3"), 5, 2, rng())
    assert model.hidden[0].W.shape == (5, 12)
    assert model.out.W.shape == (4, 2)


# --- CNN -------------------------------------------------------------------------

def cnn(layers=1, h=1, n_k=2, dim=3, vocab=10, act="relu", classes=3):
    spec = ModelSpec("cnn", layers=layers, hidden_units=n_k, filter_size=h, embedding_dim=dim, activation=act)
    return CNN(spec, vocab, classes, rng())


def test_cnn_zero_network_is_uniform():
    model = cnn(layers=2, h=2)
    zero_all(model)
    np.testing.assert_allclose(cnn_forward(model, [1, 2, 3, 4]), 1 / 3, atol=1e-15)


def test_cnn_single_token_pooled_equals_its_feature_vector():
    model = cnn(act="tanh")
    conv = model.convs[0]
    feats = np.tanh(model.embed.table.data[7] @ conv.filters.data[:, 0, :].T + conv.bias.data)
    np.testing.assert_allclose(model.pooled([[7]]).data[0], feats, atol=1e-15)


def test_cnn_hand_built_two_token_case():
    model = cnn(n_k=1, dim=1, classes=2)
    model.embed.table.data[:] = 0.0
    model.embed.table.data[1, 0], model.embed.table.data[2, 0] = 1.0, -2.0
    model.convs[0].filters.data[...] = 3.0
    model.convs[0].bias.data[...] = 0.5
    model.out.W.data[...] = [[1.0, -1.0]]
    model.out.b.data[...] = 0.0
    # features relu([3.5, -5.5]) = [3.5, 0], pooled 3.5, logits [3.5, -3.5]
    p = cnn_forward(model, [1, 2])
    assert p[0] == pytest.approx(1 / (1 + math.exp(-7.0)), abs=1e-15)


def test_cnn_sequence_shorter_than_receptive_field():
    model = cnn(layers=3, h=3)
    assert model.receptive_field == 7
    with pytest.raises(SequenceTooShort):
        cnn_forward(model, [1] * 6)
    cnn_forward(model, [1] * 7)


def test_cnn_output_ignores_padding_that_never_wins_the_pool():
    model = cnn(act="linear", dim=2, n_k=3)
    model.embed.table.data[0] = 0.0  # PAD features are 0 + bias 0
    model.embed.table.data[1:] = np.abs(model.embed.table.data[1:]) + 0.1
    model.convs[0].filters.data[...] = np.abs(model.convs[0].filters.data) + 0.1
    doc = [3, 5, 2]
    padded = doc + [data.PAD] * 6
    np.testing.assert_allclose(cnn_forward(model, doc), cnn_forward(model, padded), atol=0, rtol=0)


# --- recurrent cells ---------------------------------------------------------------

def test_rnn_step_zero_weights():
    cell = RNNCell(3, 2, "tanh", "glorot-uniform", "orthogonal", rng())
    for p in cell.parameters():
        p.data[...] = 0
    np.testing.assert_array_equal(rnn_step(cell, np.ones((1, 2)), np.ones((1, 3))).data, 0)


def test_rnn_step_identity_input_map():
    cell = RNNCell(2, 2, "linear", "glorot-uniform", "orthogonal", rng())
    cell.W.data[...] = 0
    cell.U.data[...] = np.eye(2)
    w = np.array([[0.3, -1.2]])
    np.testing.assert_array_equal(rnn_step(cell, np.ones((1, 2)), w).data, w)


def test_rnn_step_hand_algebra():
    cell = RNNCell(3, 2, "penalized-tanh", "glorot-uniform", "orthogonal", rng(4))
    cell.b.data[...] = [0.1, -0.2]
    h, w = rng(5).normal(size=(1, 2)), rng(6).normal(size=(1, 3))
    z = h @ cell.W.data + w @ cell.U.data + cell.b.data
    want = np.where(z > 0, np.tanh(z), 0.25 * np.tanh(z))
    np.testing.assert_allclose(rnn_step(cell, h, w).data, want, atol=1e-15)
    with pytest.raises(ShapeError):
        rnn_step(cell, np.zeros((1, 3)), w)


def lstm_cell(sigma="sigmoid", tau="tanh", units=1, d=1, seed=0):
    return LSTMCell(d, units, sigma, tau, "glorot-uniform", "orthogonal", rng(seed))


def test_lstm_step_zero_weights():
    cell = lstm_cell()
    for p in cell.parameters():
        p.data[...] = 0
    h, c = lstm_step(cell, np.zeros((1, 1)), np.zeros((1, 1)), np.ones((1, 1)))
    assert c.data[0, 0] == 0 and h.data[0, 0] == 0
    h, c = lstm_step(cell, np.zeros((1, 1)), np.array([[2.0]]), np.ones((1, 1)))
    assert c.data[0, 0] == pytest.approx(1.0)
    assert h.data[0, 0] == pytest.approx(0.5 * math.tanh(1.0), abs=1e-15)
    assert h.data[0, 0] == pytest.approx(0.3807971, abs=1e-7)


@pytest.mark.parametrize("sigma", ["sigmoid", "tanh", "penalized-tanh"])
@pytest.mark.parametrize("tau", ["sigmoid", "tanh", "penalized-tanh"])
def test_lstm_hidden_state_is_bounded(sigma, tau):
    cell = lstm_cell(sigma, tau, units=4, d=3, seed=1)
    for p in cell.parameters():
        p.data[...] *= 20
    r = rng(2)
    h, c = np.zeros((8, 4)), np.zeros((8, 4))
    for _ in range(20):
        h, c = lstm_step(cell, h, c, r.normal(scale=10, size=(8, 3)))
        assert np.all(np.abs(h.data) <= 1.0)
        h, c = h.data, c.data


def test_lstm_rejects_maxout_gates():
    with pytest.raises(ValueError):
        lstm_cell(tau="maxout-2")


# --- tagger ------------------------------------------------------------------------

def tagger(family="rnn", layers=1, act="tanh", bidirectional=True, seed=0):
    kw = {"activation": act} if family == "rnn" else {"gate_tau": act}
    spec = ModelSpec(family, layers=layers, hidden_units=3, embedding_dim=4, bidirectional=bidirectional, **kw)
    return Tagger(spec, 12, 5, rng(seed))


@pytest.mark.parametrize("family", ["rnn", "lstm"])
def test_tagger_probabilities_sum_to_one(family):
    p = birnn_tag_forward(tagger(family, layers=2), [2, 5, 7, 1])
    assert p.shape == (4, 5)
    np.testing.assert_allclose(p.sum(axis=1), 1, atol=1e-12)


def test_tagger_single_token_depends_only_on_that_token():
    model = tagger()
    enc = model.encode([[4]]).data[0, 0]
    emb = model.embed.table.data[4]
    f, b = model.fwd[0], model.bwd[0]
    np.testing.assert_allclose(enc[:3], np.tanh(emb @ f.U.data + f.b.data), atol=1e-15)
    np.testing.assert_allclose(enc[3:], np.tanh(emb @ b.U.data + b.b.data), atol=1e-15)


@pytest.mark.parametrize("family", ["rnn", "lstm"])
def test_reversal_swaps_streams_with_tied_weights(family):
    model = tagger(family, seed=3)
    for pf, pb in zip(model.fwd[0].parameters(), model.bwd[0].parameters()):
        pb.data[...] = pf.data
    seq = [3, 9, 1]
    a = model.encode([seq]).data[0]
    b = model.encode([seq[::-1]]).data[0]
    for i in range(3):
        j = 2 - i
        np.testing.assert_allclose(b[i, :3], a[j, 3:], atol=1e-14)
        np.testing.assert_allclose(b[i, 3:], a[j, :3], atol=1e-14)


def test_tagger_rejects_empty_sequence():
    with pytest.raises(ValueError):
        birnn_tag_forward(tagger(), [])


def test_unidirectional_tagger_is_causal():
    model = tagger(bidirectional=False)
    a = model.encode([[1, 2, 3, 4]]).data[0]
    b = model.encode([[1, 2, 3, 9]]).data[0]
    np.testing.assert_array_equal(a[:3], b[:3])
    assert not np.allclose(a[3], b[3])


def test_tagger_accepts_pretrained_embeddings():
    spec = ModelSpec("lstm", layers=1, hidden_units=2, embedding_dim=3)
    table = rng(1).normal(size=(6, 3))
    model = build_model(spec, 4, rng(), vocab_size=6, embeddings=table)
    np.testing.assert_array_equal(model.embed.table.data, table)
    with pytest.raises(ShapeError):
        build_model(spec, 4, rng(), vocab_size=7, embeddings=table)


# --- gradients ---------------------------------------------------------------------

@pytest.mark.parametrize("check", [
    lambda: mlp_gradients("selu"),
    lambda: cnn_gradients("maxout-2"),
    lambda: tagger_gradients("rnn", "cube"),
    lambda: tagger_gradients("lstm", "penalized-tanh", gate_sigma="penalized-tanh"),
    lambda: tagger_gradients("lstm", "prelu"),
])
def test_end_to_end_gradients(check):
    result = check()
    assert result.passed, result.detail


def test_tagger_gradients_with_dropout_off_and_unidirectional():
    spec = ModelSpec("rnn", layers=3, hidden_units=2, embedding_dim=2, bidirectional=False, activation="elu")
    model = Tagger(spec, 8, 3, rng())
    d = SequenceData([np.array([1, 2, 3]), np.array([4, 5])], [np.array([0, 1, 2]), np.array([2, 2])])
    errs = check_gradients(lambda: batch_loss(model, d, np.arange(2), training=False), model.parameters())
    assert max(errs.values()) < 1e-4


# --- training ------------------------------------------------------------------------

def separable(n=200, seed=0):
    task = data.gen_synth_vectors(2, n, 20, 10.0, seed)
    return VectorData(np.asarray(task.items), np.asarray(task.labels))


def test_relu_mlp_fits_separable_data_within_30_epochs():
    d = separable()
    model = MLP(ModelSpec("mlp", layers=2, hidden_units=32, activation="relu"), 20, 2, rng())
    opt = Optimizer("adam", model.parameters())
    r = rng(1)
    for epoch in range(30):
        train_epoch(model, d, opt, 16, r, epoch)
        preds, gold = predict(model, d)
        if np.mean(preds == gold) > 0.95:
            break
    assert np.mean(preds == gold) > 0.95


def test_zero_learning_rate_changes_nothing():
    d = separable(50)
    for kind in ("sgd", "adam", "adadelta", "rmsprop"):
        model = MLP(ModelSpec("mlp", layers=2, hidden_units=8, activation="prelu", dropout=0.3), 20, 2, rng())
        before = [p.data.copy() for p in model.parameters()]
        train_epoch(model, d, Optimizer(kind, model.parameters(), lr=0.0), 16, rng(1))
        for b, p in zip(before, model.parameters()):
            np.testing.assert_array_equal(b, p.data)


def test_same_seed_same_loss_trace():
    d = separable(80)

    def trace():
        model = MLP(ModelSpec("mlp", layers=2, hidden_units=8, dropout=0.4), 20, 2, rng(3))
        opt, r = Optimizer("rmsprop", model.parameters()), rng(4)
        return [train_epoch(model, d, opt, 16, r, e) for e in range(5)]

    assert trace() == trace()


def test_non_finite_loss_signals_divergence_with_epoch():
    d = separable(40)
    model = MLP(ModelSpec("mlp", layers=1, hidden_units=4, activation="cube"), 20, 2, rng())
    model.hidden[0].W.data[...] = 1e120
    with pytest.raises(TrialDiverged) as info:
        train_epoch(model, d, Optimizer("sgd", model.parameters()), 16, rng(), epoch=7)
    assert info.value.epoch == 7


def test_document_and_sequence_training_reduce_loss():
    task = data.split_fractions(data.gen_synth_docs(3, 60, 40, 0, length=10), 0.8, 0.1, 0)
    ids = data.pad_documents(task, 2)
    docs = DocumentData(ids, np.asarray(task.labels))
    model = cnn(layers=1, h=2, n_k=8, dim=8, vocab=len(task.vocab))
    opt = Optimizer("adam", model.parameters(), lr=0.01)
    losses = [train_epoch(model, docs, opt, 16, rng(), e) for e in range(8)]
    assert losses[-1] < losses[0]

    seqs = data.gen_synth_sequences(30, 0, length=8)
    seqs = data.split_counts(seqs, 20, 5, 0)
    sd = SequenceData([data.encode_tokens(seqs, s) for s in seqs.items], [np.asarray(t) for t in seqs.labels])
    model = Tagger(ModelSpec("lstm", layers=1, hidden_units=6, embedding_dim=6), len(seqs.vocab), seqs.n_classes, rng())
    opt = Optimizer("adam", model.parameters(), lr=0.01)
    losses = [train_epoch(model, sd, opt, 8, rng(), e) for e in range(5)]
    assert losses[-1] < losses[0]
    preds, gold = predict(model, sd, np.arange(3))
    assert preds.shape == gold.shape == (24,)

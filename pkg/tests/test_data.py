import numpy as np
import pytest

from actbench import data
from actbench.data import ConfigError, ParseError
from actbench.models import CNN, ModelSpec


def write(path, text):
    path.write_text(text)
    return path


def test_two_line_classification_file(tmp_path):
    task = data.load_tsv_dataset(write(tmp_path / "a.tsv", "pos\tgood film\nneg\tbad film\n"),
                                 "document-classification")
    assert len(task) == 2 and task.label_names == ["neg", "pos"] and task.labels == [1, 0]
    assert task.items == [["good", "film"], ["bad", "film"]]


def test_tagging_blocks(tmp_path):
    text = "a\tO\nb\tB-C\nc\tI-C\n\nd\tO\ne\tO\nf\tB-P\n"
    task = data.load_tsv_dataset(write(tmp_path / "t.tsv", text), "sequence-tagging")
    assert [len(s) for s in task.items] == [3, 3]
    assert task.label_names == ["B-C", "B-P", "I-C", "O"]


@pytest.mark.parametrize("kind,gen", [
    ("vector-classification", lambda: data.gen_synth_vectors(3, 30, 5, 2.0, 0, name="rt")),
    ("document-classification", lambda: data.gen_synth_docs(3, 30, 40, 0, name="rt")),
    ("sequence-tagging", lambda: data.gen_synth_sequences(10, 0, name="rt")),
])
def test_round_trip(tmp_path, kind, gen):
    task = gen()
    data.write_tsv_dataset(task, tmp_path / "rt.tsv")
    # a small tagging sample may not use every tag, so pin the label set
    names = task.label_names if kind == "sequence-tagging" else None
    back = data.load_tsv_dataset(tmp_path / "rt.tsv", kind, name="rt", label_names=names)
    assert back == task


@pytest.mark.parametrize("kind,text,line", [
    ("document-classification", "pos\tok\nno tab here\n", 2),
    ("vector-classification", "a\t1 2\nb\t1 x\n", 2),
    ("vector-classification", "a\t1 2\nb\t1 2 3\n", 2),
    ("sequence-tagging", "a\tO\nb O\n", 2),
])
def test_malformed_rows_report_line_numbers(tmp_path, kind, text, line):
    with pytest.raises(ParseError) as info:
        data.load_tsv_dataset(write(tmp_path / "bad.tsv", text), kind)
    assert info.value.line == line


def test_unknown_labels_at_test_time_are_rejected(tmp_path):
    train = write(tmp_path / "train.tsv", "a\tx y\nb\ty z\n")
    dev = write(tmp_path / "dev.tsv", "a\tx\n")
    test = write(tmp_path / "test.tsv", "c\tq\nb\tz\n")
    with pytest.warns(UserWarning, match="rejected"):
        task = data.load_tsv_splits(train, dev, test, "document-classification")
    assert task.label_names == ["a", "b"]
    assert task.rejected == [3]
    assert list(task.split("test")) == [4]
    assert "q" not in task.vocab


def test_vocab_from_train_only_and_unknown_id():
    task = data.Task("t", "document-classification", ["a", "b"], [["x", "y"], ["y", "z"], ["w"]], [0, 1, 0])
    task = data.with_splits(task, [0], [1], [2])
    assert task.vocab == {"<pad>": 0, "<unk>": 1, "x": 2, "y": 3}
    np.testing.assert_array_equal(data.encode_tokens(task, ["z", "x"]), [data.UNK, 2])


def test_split_fractions():
    task = data.gen_synth_vectors(2, 100, 4, 1.0, 0)
    s = data.split_fractions(task, 0.5, 0.1, 3)
    assert [len(s.split(k)) for k in ("train", "dev", "test")] == [50, 10, 40]
    again = data.split_fractions(task, 0.5, 0.1, 3)
    assert all(np.array_equal(s.split(k), again.split(k)) for k in ("train", "dev", "test"))
    big = data.split_fractions(data.gen_synth_vectors(2, 1000, 4, 1.0, 0), 0.01, 0.1, 0)
    assert len(big.split("train")) == 10
    everything = np.concatenate([s.split(k) for k in ("train", "dev", "test")])
    assert sorted(everything) == list(range(100))


@pytest.mark.parametrize("train,dev", [(0.0, 0.1), (0.6, 0.4), (1.2, 0.0), (0.5, -0.1)])
def test_split_fractions_out_of_range(train, dev):
    with pytest.raises(ConfigError):
        data.split_fractions(data.gen_synth_vectors(2, 20, 4, 1.0, 0), train, dev, 0)


def test_missing_split_is_a_config_error():
    with pytest.raises(ConfigError):
        data.gen_synth_vectors(2, 20, 4, 1.0, 0).split("train")


def test_synth_vectors_same_seed_identical():
    assert data.gen_synth_vectors(3, 50, 6, 2.0, 4) == data.gen_synth_vectors(3, 50, 6, 2.0, 4)


def test_synth_vectors_mean_distance():
    task = data.gen_synth_vectors(3, 30000, 6, 4.0, 0)
    X, y = np.asarray(task.items), np.asarray(task.labels)
    means = np.array([X[y == c].mean(axis=0) for c in range(3)])
    for a in range(3):
        for b in range(a + 1, 3):
            assert np.linalg.norm(means[a] - means[b]) == pytest.approx(4.0, abs=0.1)


def _least_squares_accuracy(task):
    X, y = np.asarray(task.items), np.asarray(task.labels)
    tr, te = task.split("train"), task.split("test")
    C = task.n_classes
    Xb = np.hstack([X, np.ones((len(X), 1))])
    W, *_ = np.linalg.lstsq(Xb[tr], np.eye(C)[y[tr]], rcond=None)
    return np.mean((Xb[te] @ W).argmax(axis=1) == y[te])


def test_separation_ten_is_linearly_separable():
    task = data.split_fractions(data.gen_synth_vectors(3, 600, 20, 10.0, 1), 0.5, 0.1, 0)
    assert _least_squares_accuracy(task) > 0.95


def test_separation_zero_is_chance():
    task = data.split_fractions(data.gen_synth_vectors(3, 3000, 20, 0.0, 1), 0.5, 0.1, 0)
    assert _least_squares_accuracy(task) <= 1 / 3 + 0.1


def test_synth_docs_markers_identify_the_class():
    task = data.split_fractions(data.gen_synth_docs(4, 80, 60, 0), 0.5, 0.1, 0)
    counts = np.bincount(task.labels, minlength=4)
    assert np.all(counts > 0)
    # a 1-filter-per-class CNN oracle: filter c fires only on class c's markers
    spec = ModelSpec("cnn", layers=1, hidden_units=4, filter_size=1, embedding_dim=len(task.vocab), activation="relu")
    model = CNN(spec, len(task.vocab), 4, np.random.default_rng(0))
    model.embed.table.data[...] = np.eye(len(task.vocab))
    model.convs[0].bias.data[...] = 0
    model.convs[0].filters.data[...] = 0
    for c in range(4):
        for tok in data.marker_tokens(c):
            if tok in task.vocab:
                model.convs[0].filters.data[c, 0, task.vocab[tok]] = 1.0
    pooled = model.pooled(data.pad_documents(task)).data
    assert np.all(pooled.argmax(axis=1)[task.split("train")] == np.asarray(task.labels)[task.split("train")])


def test_synth_docs_requires_vocab():
    with pytest.raises(ConfigError):
        data.gen_synth_docs(5, 10, 40, 0)


def test_synth_sequences_bio_invariant():
    task = data.gen_synth_sequences(200, 0)
    names = task.label_names
    assert names[-1] == "O"
    seen = set()
    for tags in task.labels:
        prev = "O"
        for t in (names[i] for i in tags):
            seen.add(t)
            if t.startswith("I-"):
                assert prev in ("B-" + t[2:], t)
            prev = t
    assert seen == set(names)


def test_pad_documents_minimum_length():
    task = data.with_splits(data.Task("t", "document-classification", ["a"], [["x"], ["x", "y"]], [0, 0]), [0, 1], [], [])
    ids = data.pad_documents(task, 4)
    assert ids.shape == (2, 4)
    np.testing.assert_array_equal(ids[0], [2, 0, 0, 0])


def test_embeddings(tmp_path):
    path = write(tmp_path / "e.txt", "a 1 2 3 4 5\nb 0 0 0 0 1\nc 1 1 1 1 1\n")
    table = data.load_embeddings(path)
    assert len(table) == 3 and table.dim == 5
    np.testing.assert_array_equal(table.lookup("zzz"), np.zeros(5))
    data.write_embeddings(table, tmp_path / "f.txt")
    back = data.load_embeddings(tmp_path / "f.txt")
    for tok in ("a", "b", "c"):
        np.testing.assert_array_equal(back.lookup(tok), table.lookup(tok))


def test_embeddings_duplicates_and_ragged(tmp_path):
    with pytest.warns(UserWarning, match="duplicate"):
        table = data.load_embeddings(write(tmp_path / "d.txt", "a 1 2\na 3 4\n"))
    np.testing.assert_array_equal(table.lookup("a"), [3, 4])
    with pytest.raises(ParseError):
        data.load_embeddings(write(tmp_path / "r.txt", "a 1 2\nb 1 2 3\n"))


def test_embedding_matrix_uses_known_vectors():
    table = data.EmbeddingTable({"x": np.array([9.0, 9.0])}, 2)
    m = table.matrix({"<pad>": 0, "<unk>": 1, "x": 2}, np.random.default_rng(0))
    np.testing.assert_array_equal(m[2], [9, 9])
    assert np.all(np.abs(m[:2]) <= 0.05)

"""Tasks: TSV ingestion, deterministic splits, synthetic generators, embeddings."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

KINDS = ("vector-classification", "document-classification", "sequence-tagging")
PAD, UNK = 0, 1
RESERVED = ("<pad>", "<unk>")


class ParseError(ValueError):
    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.line = line


class ConfigError(ValueError):
    pass


@dataclass
class Task:
    """A labelled dataset plus its train/dev/test split.

    ``items`` is an [n, d] float array for vector tasks and a list of token
    lists otherwise. ``labels`` holds one class id per item, or one list of
    tag ids per sequence for tagging tasks.
    """

    name: str
    kind: str
    label_names: list
    items: object
    labels: list
    splits: dict = field(default_factory=dict)
    vocab: dict | None = None
    metric: str = "accuracy"
    rejected: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown task kind {self.kind!r}")

    @property
    def n_classes(self) -> int:
        return len(self.label_names)

    def __len__(self):
        return len(self.labels)

    def __eq__(self, other):
        if not isinstance(other, Task):
            return NotImplemented
        if self.kind == "vector-classification":
            same_items = np.array_equal(np.asarray(self.items), np.asarray(other.items))
        else:
            same_items = list(map(list, self.items)) == list(map(list, other.items))
        return (
            self.name == other.name
            and self.kind == other.kind
            and list(self.label_names) == list(other.label_names)
            and same_items
            and _plain(self.labels) == _plain(other.labels)
            and {k: list(v) for k, v in self.splits.items()} == {k: list(v) for k, v in other.splits.items()}
            and self.vocab == other.vocab
        )

    def split(self, name) -> np.ndarray:
        try:
            return np.asarray(self.splits[name], dtype=np.int64)
        except KeyError:
            raise ConfigError(f"task {self.name!r} has no {name!r} split") from None


def _plain(labels):
    return [list(map(int, x)) if np.ndim(x) else int(x) for x in labels]


# --- TSV format ------------------------------------------------------------------

def load_tsv_dataset(path, kind: str, name: str | None = None, label_names=None) -> Task:
    """Read ``label<TAB>payload`` rows, or blank-line separated ``token<TAB>label`` blocks.

    Label ids follow the sorted label names unless ``label_names`` is given.
    """
    path = Path(path)
    if kind not in KINDS:
        raise ConfigError(f"unknown task kind {kind!r}")
    name = name or path.stem
    raw_items, raw_labels = [], []
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if kind == "sequence-tagging":
        tokens, tags = [], []
        for lineno, line in enumerate(lines, 1):
            if not line.strip():
                if tokens:
                    raw_items.append(tokens)
                    raw_labels.append(tags)
                    tokens, tags = [], []
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ParseError(path, lineno, "expected 'token<TAB>label'")
            tokens.append(parts[0])
            tags.append(parts[1])
        if tokens:
            raw_items.append(tokens)
            raw_labels.append(tags)
    else:
        width = None
        for lineno, line in enumerate(lines, 1):
            if not line.strip():
                continue
            label, sep, payload = line.partition("\t")
            if not sep or not label:
                raise ParseError(path, lineno, "expected 'label<TAB>payload'")
            if kind == "vector-classification":
                try:
                    vec = [float(v) for v in payload.split()]
                except ValueError:
                    raise ParseError(path, lineno, "vector payload must be whitespace-separated numbers") from None
                if width is None:
                    width = len(vec)
                if len(vec) != width or width == 0:
                    raise ParseError(path, lineno, f"expected {width} values, got {len(vec)}")
                raw_items.append(vec)
            else:
                raw_items.append(payload.split())
            raw_labels.append(label)

    if label_names is None:
        seen = set()
        for lab in raw_labels:
            seen.update(lab) if kind == "sequence-tagging" else seen.add(lab)
        label_names = sorted(seen)
    index = {lab: i for i, lab in enumerate(label_names)}
    if kind == "sequence-tagging":
        labels = [[index[t] for t in tags] for tags in raw_labels]
    else:
        labels = [index[lab] for lab in raw_labels]
    items = np.array(raw_items, dtype=np.float64) if kind == "vector-classification" else raw_items
    return Task(name, kind, list(label_names), items, labels)


def load_tsv_splits(train_path, dev_path, test_path, kind: str, name: str | None = None) -> Task:
    """Fixed train/dev/test files. Labels are defined by the train file; dev/test
    items carrying unseen labels go to ``task.rejected`` and are left out of their split."""
    train = load_tsv_dataset(train_path, kind)
    label_names = train.label_names
    parts = {"train": train}
    for split, p in (("dev", dev_path), ("test", test_path)):
        parts[split] = _load_with_reject(p, kind, label_names)
    items, labels, splits, rejected = [], [], {}, []
    for split in ("train", "dev", "test"):
        part = parts[split]
        offset = len(labels)
        keep = [i for i in range(len(part.labels)) if i not in part.rejected]
        rejected.extend(offset + i for i in part.rejected)
        splits[split] = np.array([offset + i for i in keep], dtype=np.int64)
        items.extend(list(part.items))
        labels.extend(part.labels)
    if rejected:
        warnings.warn(f"{len(rejected)} dev/test items carry labels unseen in training; rejected")
    if kind == "vector-classification":
        items = np.array(items, dtype=np.float64)
    task = Task(name or Path(train_path).stem, kind, label_names, items, labels, rejected=rejected)
    return with_splits(task, splits["train"], splits["dev"], splits["test"])


def _load_with_reject(path, kind, label_names):
    probe = load_tsv_dataset(path, kind)
    index = {lab: i for i, lab in enumerate(label_names)}
    labels, rejected = [], []
    for i, lab in enumerate(probe.labels):
        if kind == "sequence-tagging":
            names = [probe.label_names[t] for t in lab]
            if any(n not in index for n in names):
                rejected.append(i)
                labels.append([0] * len(names))
            else:
                labels.append([index[n] for n in names])
        else:
            n = probe.label_names[lab]
            if n not in index:
                rejected.append(i)
                labels.append(0)
            else:
                labels.append(index[n])
    return Task(probe.name, kind, list(label_names), probe.items, labels, rejected=rejected)


def write_tsv_dataset(task: Task, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if task.kind == "sequence-tagging":
            for tokens, tags in zip(task.items, task.labels):
                for tok, tag in zip(tokens, tags):
                    fh.write(f"{tok}\t{task.label_names[tag]}\n")
                fh.write("\n")
        elif task.kind == "vector-classification":
            for vec, lab in zip(task.items, task.labels):
                fh.write(task.label_names[lab] + "\t" + " ".join(repr(float(v)) for v in vec) + "\n")
        else:
            for tokens, lab in zip(task.items, task.labels):
                fh.write(task.label_names[lab] + "\t" + " ".join(tokens) + "\n")


# --- splits and vocabulary ----------------------------------------------------------

def build_vocab(task: Task, split="train") -> dict:
    """Token -> id from one split only; ids 0 and 1 are padding and unknown."""
    if task.kind == "vector-classification":
        return None
    tokens = set()
    for i in task.split(split):
        tokens.update(task.items[i])
    vocab = {tok: i for i, tok in enumerate(RESERVED)}
    for tok in sorted(tokens):
        vocab[tok] = len(vocab)
    return vocab


def with_splits(task: Task, train, dev, test) -> Task:
    splits = {
        "train": np.asarray(train, dtype=np.int64),
        "dev": np.asarray(dev, dtype=np.int64),
        "test": np.asarray(test, dtype=np.int64),
    }
    everything = np.concatenate(list(splits.values()))
    if len(np.unique(everything)) != len(everything):
        raise ConfigError("splits overlap")
    if everything.size and (everything.min() < 0 or everything.max() >= len(task)):
        raise ConfigError("split index out of range")
    out = replace(task, splits=splits, vocab=None)
    out.vocab = build_vocab(out)
    return out


def _floor(x):
    return int(math.floor(x + 1e-9))


def split_fractions(task: Task, train_frac: float, dev_frac: float, seed: int) -> Task:
    """Shuffle by ``seed``, then contiguous train/dev/test; test takes the remainder."""
    if not (0 < train_frac < 1 and 0 <= dev_frac < 1 and train_frac + dev_frac < 1):
        raise ConfigError(f"bad split fractions train={train_frac} dev={dev_frac}")
    n = len(task)
    return split_counts(task, _floor(train_frac * n), _floor(dev_frac * n), seed)


def split_counts(task: Task, n_train: int, n_dev: int, seed: int) -> Task:
    n = len(task)
    if n_train < 1 or n_dev < 0 or n_train + n_dev >= n:
        raise ConfigError(f"cannot take {n_train} train and {n_dev} dev items from {n}")
    order = np.random.default_rng(seed).permutation(n)
    return with_splits(task, order[:n_train], order[n_train:n_train + n_dev], order[n_train + n_dev:])


def encode_tokens(task: Task, tokens) -> np.ndarray:
    vocab = task.vocab
    return np.array([vocab.get(t, UNK) for t in tokens], dtype=np.int64)


def pad_documents(task: Task, min_length: int = 1) -> np.ndarray:
    """[n, L] id matrix, right-padded with PAD to the longest document (at least ``min_length``)."""
    length = max(min_length, max((len(d) for d in task.items), default=1))
    out = np.full((len(task), length), PAD, dtype=np.int64)
    for i, doc in enumerate(task.items):
        out[i, :len(doc)] = encode_tokens(task, doc)
    return out


# --- synthetic generators -----------------------------------------------------------

def _balanced_labels(rng, n, C):
    return rng.permutation(np.arange(n) % C)


def gen_synth_vectors(C: int, n: int, d: int, separation: float, seed: int, name="synth-vectors") -> Task:
    """``C`` unit-variance Gaussian clusters whose means are pairwise ``separation`` apart."""
    if C < 2 or d < C or separation < 0:
        raise ConfigError("need C >= 2, d >= C and separation >= 0")
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(d, C)))
    means = q.T * (separation / math.sqrt(2.0))
    labels = _balanced_labels(rng, n, C)
    X = means[labels] + rng.normal(size=(n, d))
    return Task(name, "vector-classification", [f"c{i:02d}" for i in range(C)], X, labels.tolist())


def marker_tokens(c: int) -> list[str]:
    return [f"m{c}_{j}" for j in range(3)]


def gen_synth_docs(C: int, n: int, vocab: int, seed: int, length: int = 20, markers: int = 3,
                   name="synth-docs") -> Task:
    """Documents of background noise with ``markers`` class-marker tokens mixed in.

    Each class owns 3 marker tokens; the remaining ``vocab - 3C`` words are noise.
    Lengths vary uniformly in [length//2, length].
    """
    if C < 2 or vocab < 10 * C:
        raise ConfigError("need C >= 2 and vocab >= 10 * C")
    rng = np.random.default_rng(seed)
    noise = [f"w{j}" for j in range(vocab - 3 * C)]
    labels = _balanced_labels(rng, n, C)
    docs = []
    for c in labels:
        size = int(rng.integers(max(length // 2, markers), length + 1))
        doc = [noise[j] for j in rng.integers(0, len(noise), size)]
        slots = rng.choice(size, size=min(markers, size), replace=False)
        own = marker_tokens(int(c))
        for s in slots:
            doc[s] = own[int(rng.integers(3))]
        docs.append(doc)
    return Task(name, "document-classification", [f"c{i:02d}" for i in range(C)], docs, labels.tolist())


SPAN_TYPES = ("MC", "C", "P")


def gen_synth_sequences(n: int, seed: int, length: int = 12, name="synth-tags") -> Task:
    """BIO-tagged sequences: a trigger token ``t_X`` opens a span labelled B-X, I-X, ...

    Span words come from a pool shared by all types, so the span type can only
    be read off the trigger to its left.
    """
    rng = np.random.default_rng(seed)
    label_names = sorted([f"{p}-{t}" for p in "BI" for t in SPAN_TYPES] + ["O"])
    index = {lab: i for i, lab in enumerate(label_names)}
    items, labels = [], []
    for _ in range(n):
        tokens, tags = [], []
        while len(tokens) < length:
            room = length - len(tokens)
            if room >= 2 and rng.random() < 0.3:
                kind = SPAN_TYPES[int(rng.integers(len(SPAN_TYPES)))]
                span = int(rng.integers(1, min(4, room - 1) + 1))
                tokens.append(f"t_{kind}")
                tags.append("O")
                for j in range(span):
                    tokens.append(f"s{int(rng.integers(20))}")
                    tags.append(("B-" if j == 0 else "I-") + kind)
            else:
                tokens.append(f"w{int(rng.integers(30))}")
                tags.append("O")
        items.append(tokens)
        labels.append([index[t] for t in tags])
    return Task(name, "sequence-tagging", label_names, items, labels)


# --- embeddings ---------------------------------------------------------------------

class EmbeddingTable:
    """Token -> vector lookup; missing tokens map to the reserved unknown vector (zeros)."""

    def __init__(self, vectors: dict, dim: int):
        self.vectors = vectors
        self.dim = dim
        self.unknown = np.zeros(dim)

    def __len__(self):
        return len(self.vectors)

    def __contains__(self, token):
        return token in self.vectors

    def lookup(self, token) -> np.ndarray:
        return self.vectors.get(token, self.unknown)

    def matrix(self, vocab: dict, rng: np.random.Generator) -> np.ndarray:
        """Rows for ``vocab``; tokens without a vector get random-uniform(+-0.05) rows."""
        out = rng.uniform(-0.05, 0.05, size=(len(vocab), self.dim))
        for tok, i in vocab.items():
            if tok in self.vectors:
                out[i] = self.vectors[tok]
        return out


def load_embeddings(path) -> EmbeddingTable:
    vectors, dim = {}, None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            token, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
            if len(values) != dim or dim == 0:
                raise ParseError(path, lineno, f"expected {dim} values, got {len(values)}")
            try:
                vec = np.array([float(v) for v in values])
            except ValueError:
                raise ParseError(path, lineno, "non-numeric embedding value") from None
            if token in vectors:
                warnings.warn(f"duplicate embedding for {token!r} at line {lineno}; keeping the last")
            vectors[token] = vec
    if dim is None:
        raise ParseError(path, 0, "empty embedding file")
    return EmbeddingTable(vectors, dim)


def write_embeddings(table: EmbeddingTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tok, vec in table.vectors.items():
            fh.write(tok + " " + " ".join(repr(float(v)) for v in vec) + "\n")

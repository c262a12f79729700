"""Random-search protocol: hyperparameter draws, trials with early stopping, suites."""
from __future__ import annotations

import hashlib
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import activations as act
from . import report
from .data import ConfigError, Task, load_embeddings, pad_documents, encode_tokens
from .models import (
    DocumentData,
    ModelSpec,
    SequenceData,
    TrialDiverged,
    VectorData,
    build_model,
    predict,
    train_epoch,
)
from .netcore import DEFAULT_LR, INITIALIZERS, OPTIMIZERS, RECURRENT_INITIALIZERS, Optimizer

log = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1

BATCH_SIZE = {"mlp": 16, "cnn": 64, "rnn": 32, "lstm": 32}
EPOCHS = {"mlp": 100, "cnn": 50, "rnn": 50, "lstm": 50}
PATIENCE = {"mlp": 10, "cnn": 10, "rnn": 5, "lstm": 5}
DEFAULT_EXCLUSIONS = {
    "rnn": ["prelu", "maxout-2", "maxout-3", "maxout-4", "cube"],
    "lstm": ["prelu", "maxout-2", "maxout-3", "maxout-4", "cube"],
}


# --- seeding ---------------------------------------------------------------------

def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def _as_int(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & MASK64
    digest = hashlib.blake2b(str(part).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def mix(*parts) -> int:
    """Order-sensitive 64-bit hash of ints and strings."""
    h = 0
    for part in parts:
        h = splitmix64(h ^ _as_int(part))
    return h


SAMPLER_STREAM = 0xD7A3  # distinguishes hyperparameter draws from init seeds


def trial_seed(master: int, experiment: str, draw: int, init: int) -> int:
    return mix(master, experiment, draw, init)


def generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


# --- hyperparameter space ------------------------------------------------------------

@dataclass
class HyperParamSpace:
    optimizers: tuple = OPTIMIZERS
    mlp_layers: tuple = (1, 2, 3, 4)
    cnn_layers: tuple = (1, 2, 3)
    rnn_layers: tuple = (1, 2, 3, 4)
    dropout: tuple = (0.1, 0.75)
    hidden_units: tuple = (30, 500)
    initializers: tuple = INITIALIZERS
    embedding_dim: tuple = (40, 200)
    filters: tuple = (30, 500)
    filter_sizes: tuple = (1, 2, 2, 3, 3, 3, 4)
    recurrent_initializers: tuple = RECURRENT_INITIALIZERS

    def __post_init__(self):
        for name in ("dropout", "hidden_units", "embedding_dim", "filters"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigError(f"empty interval for {name}: {lo} > {hi}")
        for name in ("optimizers", "mlp_layers", "cnn_layers", "rnn_layers", "initializers",
                     "filter_sizes", "recurrent_initializers"):
            if not getattr(self, name):
                raise ConfigError(f"empty choice set for {name}")
            setattr(self, name, tuple(getattr(self, name)))
        for name in ("dropout", "hidden_units", "embedding_dim", "filters"):
            setattr(self, name, tuple(getattr(self, name)))

    def layers(self, family):
        return {"mlp": self.mlp_layers, "cnn": self.cnn_layers}.get(family, self.rnn_layers)


def draw_learning_rate(default: float, rng) -> float:
    """N(m, m/5); a negative draw falls back to m."""
    lr = float(rng.normal(default, default / 5.0))
    return default if lr < 0 else lr


def _choice(rng, options):
    return options[int(rng.integers(len(options)))]


def _int_between(rng, bounds):
    return int(rng.integers(bounds[0], bounds[1] + 1))


def sample_hyperparams(space: HyperParamSpace, family: str, rng) -> dict:
    if family not in BATCH_SIZE:
        raise ConfigError(f"unknown family {family!r}")
    h = {"optimizer": _choice(rng, space.optimizers), "layers": _choice(rng, space.layers(family))}
    h["dropout"] = float(rng.uniform(*space.dropout))
    if family == "cnn":
        h["embedding_dim"] = _int_between(rng, space.embedding_dim)
        h["hidden_units"] = _int_between(rng, space.filters)
        h["filter_size"] = _choice(rng, space.filter_sizes)
    else:
        h["hidden_units"] = _int_between(rng, space.hidden_units)
    h["learning_rate"] = draw_learning_rate(DEFAULT_LR[h["optimizer"]], rng)
    h["initializer"] = _choice(rng, space.initializers)
    if family in ("rnn", "lstm"):
        h["recurrent_initializer"] = _choice(rng, space.recurrent_initializers)
    return h


# --- experiments and trials --------------------------------------------------------------

@dataclass
class Settings:
    """Per-family training constants; defaults are the published values."""

    batch_size: dict = field(default_factory=lambda: dict(BATCH_SIZE))
    epochs: dict = field(default_factory=lambda: dict(EPOCHS))
    patience: dict = field(default_factory=lambda: dict(PATIENCE))


@dataclass
class Experiment:
    """One mini-experiment: a split task bound to a model family."""

    id: str
    family: str
    task: Task
    metric: str = "accuracy"
    embedding_dim: int = 50
    embeddings_path: str | None = None
    lstm_role: str = "tau"  # which LSTM function the swept activation replaces

    def __post_init__(self):
        expected = {"mlp": "vector-classification", "cnn": "document-classification",
                    "rnn": "sequence-tagging", "lstm": "sequence-tagging"}
        if self.family not in expected:
            raise ConfigError(f"unknown family {self.family!r}")
        if self.task.kind != expected[self.family]:
            raise ConfigError(f"{self.family} needs a {expected[self.family]} task, got {self.task.kind}")
        if self.metric not in ("accuracy", "macro_f1"):
            raise ConfigError(f"unknown metric {self.metric!r}")
        if self.lstm_role not in ("tau", "sigma", "both"):
            raise ConfigError(f"lstm_role must be tau, sigma or both, got {self.lstm_role!r}")
        for split in ("train", "dev", "test"):
            self.task.split(split)


@dataclass
class TrialConfig:
    experiment: str
    activation: str
    draw: int
    init: int
    hparams: dict
    seed: int


@dataclass
class TrialResult:
    experiment: str
    activation: str
    draw: int
    init: int
    family: str
    status: str
    dev_scores: list
    best_dev: float
    test: float
    epochs: int
    seconds: float
    hparams: dict

    @property
    def key(self):
        return (self.experiment, self.activation, self.draw, self.init)

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["task"] = rec.pop("experiment")
        return rec

    @classmethod
    def from_record(cls, rec) -> "TrialResult":
        rec = dict(rec)
        rec["experiment"] = rec.pop("task")
        return cls(**rec)


def draw_hyperparams(master: int, exp: Experiment, space: HyperParamSpace, n_draws: int) -> list[dict]:
    """The experiment's hyperparameter draws; independent of the activation."""
    return [sample_hyperparams(space, exp.family, generator(mix(master, exp.id, draw, SAMPLER_STREAM)))
            for draw in range(n_draws)]


def trial_configs(master, exp, activation, space, n_draws, n_inits) -> list[TrialConfig]:
    draws = draw_hyperparams(master, exp, space, n_draws)
    return [TrialConfig(exp.id, activation, d, i, draws[d], trial_seed(master, exp.id, d, i))
            for d in range(n_draws) for i in range(n_inits)]


class EarlyStopping:
    """Stop once the score has not strictly improved for ``patience`` epochs."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = -np.inf
        self.best_epoch = -1
        self.wait = 0
        self.epoch = -1

    def update(self, score: float) -> bool:
        """Record one epoch's score; returns True when training should stop."""
        self.epoch += 1
        if score > self.best:
            self.best, self.best_epoch, self.wait = score, self.epoch, 0
        else:
            self.wait += 1
        return self.wait >= self.patience


def model_spec(exp: Experiment, activation: str, h: dict) -> ModelSpec:
    kw = dict(
        family=exp.family,
        layers=h["layers"],
        hidden_units=h["hidden_units"],
        dropout=h["dropout"],
        initializer=h["initializer"],
        activation=activation,
    )
    if exp.family == "cnn":
        kw.update(embedding_dim=h["embedding_dim"], filter_size=h["filter_size"])
    if exp.family in ("rnn", "lstm"):
        kw.update(embedding_dim=exp.embedding_dim, recurrent_initializer=h["recurrent_initializer"])
    if exp.family == "lstm":
        kw["activation"] = "tanh"
        if exp.lstm_role in ("tau", "both"):
            kw["gate_tau"] = activation
        if exp.lstm_role in ("sigma", "both"):
            kw["gate_sigma"] = activation
    return ModelSpec(**kw)


def _views(exp: Experiment, spec: ModelSpec):
    task = exp.task
    if exp.family == "mlp":
        X, y = np.asarray(task.items), np.asarray(task.labels)
        data = VectorData(X, y)
        extra = {"d_in": X.shape[1]}
    elif exp.family == "cnn":
        ids = pad_documents(task, spec.layers * (spec.filter_size - 1) + 1)
        data = DocumentData(ids, np.asarray(task.labels))
        extra = {"vocab_size": len(task.vocab)}
    else:
        data = SequenceData([encode_tokens(task, s) for s in task.items], list(task.labels))
        extra = {"vocab_size": len(task.vocab)}
    return data, extra


def _subset(data, idx):
    if isinstance(data, VectorData):
        return VectorData(data.X[idx], data.y[idx])
    if isinstance(data, DocumentData):
        return DocumentData(data.ids[idx], data.y[idx])
    return SequenceData([data.ids[i] for i in idx], [data.tags[i] for i in idx])


def _score(metric, preds, gold, n_classes):
    if metric == "macro_f1":
        return report.macro_f1(preds, gold, n_classes)
    return report.accuracy(preds, gold)


def run_trial(config: TrialConfig, exp: Experiment, settings: Settings | None = None) -> TrialResult:
    settings = settings or Settings()
    fam = exp.family
    start = time.perf_counter()
    spec = model_spec(exp, config.activation, config.hparams)
    data, extra = _views(exp, spec)
    train, dev, test = (_subset(data, exp.task.split(s)) for s in ("train", "dev", "test"))

    init_rng = generator(mix(config.seed, 0))
    train_rng = generator(mix(config.seed, 1))
    embeddings = None
    if exp.embeddings_path and fam in ("rnn", "lstm"):
        embeddings = load_embeddings(exp.embeddings_path).matrix(exp.task.vocab, init_rng)
    model = build_model(spec, exp.task.n_classes, init_rng, embeddings=embeddings, **extra)
    opt = Optimizer(config.hparams["optimizer"], model.parameters(), config.hparams["learning_rate"])
    stopper = EarlyStopping(settings.patience[fam])

    dev_scores, test_at_best, status = [], 0.0, "ok"
    for epoch in range(settings.epochs[fam]):
        try:
            train_epoch(model, train, opt, settings.batch_size[fam], train_rng, epoch)
            dev_score = _score(exp.metric, *predict(model, dev), exp.task.n_classes)
        except (TrialDiverged, FloatingPointError) as err:
            log.info("trial %s/%s/%d/%d diverged: %s", exp.id, config.activation, config.draw, config.init, err)
            status = "diverged"
            break
        dev_scores.append(dev_score)
        improved = dev_score > stopper.best
        stop = stopper.update(dev_score)
        if improved:
            try:
                test_at_best = _score(exp.metric, *predict(model, test), exp.task.n_classes)
            except FloatingPointError:
                status = "diverged"
                break
        if stop:
            break

    if status == "ok":
        best_dev = float(stopper.best)
    else:
        best_dev, test_at_best = 0.0, 0.0
    return TrialResult(
        experiment=exp.id,
        activation=str(config.activation),
        draw=config.draw,
        init=config.init,
        family=fam,
        status=status,
        dev_scores=[float(s) for s in dev_scores],
        best_dev=best_dev,
        test=float(test_at_best),
        epochs=len(dev_scores),
        seconds=time.perf_counter() - start,
        hparams=config.hparams,
    )


def run_mini_experiment(exp: Experiment, activation: str, space: HyperParamSpace, n_draws: int = 200,
                        n_inits: int = 5, master_seed: int = 0, settings: Settings | None = None):
    """[n_draws][n_inits] matrix of TrialResults for one activation."""
    act.get(activation)
    configs = trial_configs(master_seed, exp, activation, space, n_draws, n_inits)
    results = [run_trial(c, exp, settings) for c in configs]
    return [results[d * n_inits:(d + 1) * n_inits] for d in range(n_draws)]


# --- suites -------------------------------------------------------------------------

@dataclass
class Suite:
    experiments: list
    activations: list
    space: HyperParamSpace = field(default_factory=HyperParamSpace)
    exclusions: dict = field(default_factory=lambda: {k: list(v) for k, v in DEFAULT_EXCLUSIONS.items()})
    n_draws: int = 200
    n_inits: int = 5
    master_seed: int = 0
    settings: Settings = field(default_factory=Settings)

    def __post_init__(self):
        for name in list(self.activations) + [a for v in self.exclusions.values() for a in v]:
            if name not in act.NAMES:
                raise ConfigError(f"unknown activation {name!r}")

    def plan(self) -> list[TrialConfig]:
        """Every trial in canonical (experiment, activation, draw, init) order."""
        jobs = []
        for exp in sorted(self.experiments, key=lambda e: e.id):
            excluded = set(self.exclusions.get(exp.family, ()))
            if exp.family == "lstm":
                excluded |= {"maxout-2", "maxout-3", "maxout-4"}
            for a in sorted(set(self.activations) - excluded):
                jobs.extend(trial_configs(self.master_seed, exp, a, self.space, self.n_draws, self.n_inits))
        return jobs


_WORKER_STATE = {}


def _init_worker(experiments, settings):
    _WORKER_STATE["experiments"] = experiments
    _WORKER_STATE["settings"] = settings


def _run_job(config):
    return run_trial(config, _WORKER_STATE["experiments"][config.experiment], _WORKER_STATE["settings"])


def run_suite(suite: Suite, store=None, workers: int = 1) -> list[TrialResult]:
    """Run every planned trial not already in ``store``; returns all results in canonical order.

    Results are appended to the store in plan order regardless of ``workers``.
    """
    experiments = {e.id: e for e in suite.experiments}
    done = store.keys() if store is not None else set()
    jobs = [c for c in suite.plan() if (c.experiment, c.activation, c.draw, c.init) not in done]
    fresh = []
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(experiments, suite.settings)) as pool:
            stream = pool.map(_run_job, jobs, chunksize=1)
            for res in stream:
                fresh.append(res)
                if store is not None:
                    store.append(res.to_record())
    else:
        _init_worker(experiments, suite.settings)
        for config in jobs:
            res = _run_job(config)
            fresh.append(res)
            if store is not None:
                store.append(res.to_record())
    if store is None:
        return sorted(fresh, key=lambda r: r.key)
    return [TrialResult.from_record(r) for r in store.records()]

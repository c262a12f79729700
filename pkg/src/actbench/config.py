"""JSON suite configuration -> :class:`~actbench.harness.Suite`.

Example::

    {
      "master_seed": 7,
      "n_draws": 10,
      "n_inits": 2,
      "activations": "all",
      "experiments": [
        {"id": "vec", "family": "mlp",
         "data": {"path": "vectors.tsv", "kind": "vector-classification"},
         "split": {"train_frac": 0.5, "dev_frac": 0.2, "seed": 0}}
      ]
    }

Relative paths are resolved against the config file's directory. Optional
keys: ``exclusions``, ``epochs``, ``patience``, ``batch_size`` (per family)
and ``space`` (overrides of the hyperparameter ranges).
"""
from __future__ import annotations

import json
from dataclasses import fields
from pathlib import Path

from . import activations as act
from . import data as datakit
from .data import ConfigError
from .harness import DEFAULT_EXCLUSIONS, Experiment, HyperParamSpace, Settings, Suite

GENERATORS = {
    "vectors": lambda p: datakit.gen_synth_vectors(p.get("classes", 3), p.get("n", 300), p.get("dim", 20),
                                                   p.get("separation", 3.0), p.get("seed", 0)),
    "docs": lambda p: datakit.gen_synth_docs(p.get("classes", 4), p.get("n", 200), p.get("vocab", 60),
                                             p.get("seed", 0), p.get("length", 20)),
    "sequences": lambda p: datakit.gen_synth_sequences(p.get("n", 200), p.get("seed", 0), p.get("length", 12)),
}
DATA_KIND = {"mlp": "vector-classification", "cnn": "document-classification",
             "rnn": "sequence-tagging", "lstm": "sequence-tagging"}
KNOWN_KEYS = {"master_seed", "n_draws", "n_inits", "activations", "exclusions", "epochs", "patience",
              "batch_size", "space", "experiments"}


def _path(base: Path, p) -> Path:
    p = Path(p)
    return p if p.is_absolute() else base / p


def _load_task(spec: dict, family: str, base: Path) -> datakit.Task:
    src = spec.get("data")
    if not isinstance(src, dict):
        raise ConfigError("experiment needs a 'data' object")
    split = spec.get("split", {"train_frac": 0.5, "dev_frac": 0.2, "seed": 0})
    kind = src.get("kind", DATA_KIND.get(family))
    if "dev_path" in split:
        return datakit.load_tsv_splits(_path(base, src["path"]), _path(base, split["dev_path"]),
                                       _path(base, split["test_path"]), kind, spec["id"])
    if "generator" in src:
        if src["generator"] not in GENERATORS:
            raise ConfigError(f"unknown generator {src['generator']!r}")
        task = GENERATORS[src["generator"]](src)
    elif "path" in src:
        path = _path(base, src["path"])
        if not path.exists():
            raise ConfigError(f"dataset not found: {path}")
        task = datakit.load_tsv_dataset(path, kind, spec["id"])
    else:
        raise ConfigError("data needs 'path' or 'generator'")
    seed = split.get("seed", 0)
    if "train_frac" in split:
        return datakit.split_fractions(task, split["train_frac"], split.get("dev_frac", 0.1), seed)
    if "train" in split:
        return datakit.split_counts(task, split["train"], split.get("dev", 0), seed)
    raise ConfigError("split needs train_frac/dev_frac, train/dev counts, or dev_path/test_path")


def _per_family(defaults: dict, override) -> dict:
    out = dict(defaults)
    if override is None:
        return out
    if isinstance(override, int):
        return {k: override for k in out}
    unknown = set(override) - set(out)
    if unknown:
        raise ConfigError(f"unknown families {sorted(unknown)}")
    out.update(override)
    return out


def suite_from_dict(cfg: dict, base: Path = Path(".")) -> Suite:
    unknown = set(cfg) - KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    if not cfg.get("experiments"):
        raise ConfigError("config lists no experiments")
    experiments = []
    for spec in cfg["experiments"]:
        try:
            exp_id, family = spec["id"], spec["family"]
        except KeyError as err:
            raise ConfigError(f"experiment missing {err}") from None
        task = _load_task(spec, family, base)
        emb = spec.get("embeddings")
        experiments.append(Experiment(
            id=exp_id,
            family=family,
            task=task,
            metric=spec.get("metric", "accuracy"),
            embedding_dim=spec.get("embedding_dim", 50) if not emb else datakit.load_embeddings(_path(base, emb)).dim,
            embeddings_path=str(_path(base, emb)) if emb else None,
            lstm_role=spec.get("lstm_role", "tau"),
        ))
    if len({e.id for e in experiments}) != len(experiments):
        raise ConfigError("experiment ids must be unique")
    names = cfg.get("activations", "all")
    names = list(act.NAMES) if names == "all" else list(names)
    space_over = cfg.get("space", {})
    valid = {f.name for f in fields(HyperParamSpace)}
    if set(space_over) - valid:
        raise ConfigError(f"unknown space keys {sorted(set(space_over) - valid)}")
    base_settings = Settings()
    settings = Settings(
        batch_size=_per_family(base_settings.batch_size, cfg.get("batch_size")),
        epochs=_per_family(base_settings.epochs, cfg.get("epochs")),
        patience=_per_family(base_settings.patience, cfg.get("patience")),
    )
    try:
        return Suite(
            experiments=experiments,
            activations=names,
            space=HyperParamSpace(**{k: tuple(v) for k, v in space_over.items()}),
            exclusions=cfg.get("exclusions", {k: list(v) for k, v in DEFAULT_EXCLUSIONS.items()}),
            n_draws=int(cfg.get("n_draws", 200)),
            n_inits=int(cfg.get("n_inits", 5)),
            master_seed=int(cfg.get("master_seed", 0)),
            settings=settings,
        )
    except KeyError as err:
        raise ConfigError(f"unknown activation {err}") from None


def load_suite(path) -> Suite:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config not found: {path}")
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: {err}") from None
    return suite_from_dict(cfg, path.parent)

"""Aggregation of trial results: best/mean protocol, normalization, winners, regression."""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .netcore import INITIALIZERS, OPTIMIZERS, RECURRENT_INITIALIZERS


class AggregationError(ValueError):
    pass


class SingularDesign(np.linalg.LinAlgError):
    pass


# --- metrics --------------------------------------------------------------------

def _pair(preds, labels):
    preds, labels = np.asarray(preds).ravel(), np.asarray(labels).ravel()
    if preds.shape != labels.shape:
        raise ValueError(f"{preds.size} predictions for {labels.size} labels")
    return preds, labels


def accuracy(preds, labels) -> float:
    preds, labels = _pair(preds, labels)
    if preds.size == 0:
        raise ValueError("no predictions")
    return float(np.mean(preds == labels))


def macro_f1(preds, labels, n_classes: int) -> float:
    """Unweighted mean of per-class F1; a class with no true positives scores 0."""
    preds, labels = _pair(preds, labels)
    if labels.size and labels.max() >= n_classes:
        raise ValueError("label outside class range")
    scores = []
    for c in range(n_classes):
        tp = np.sum((preds == c) & (labels == c))
        fp = np.sum((preds == c) & (labels != c))
        fn = np.sum((preds != c) & (labels == c))
        scores.append(0.0 if tp == 0 else 2 * tp / (2 * tp + fp + fn))
    return float(np.mean(scores))


# --- best / mean protocol -----------------------------------------------------------

def _draws(x, dtype=np.float64):
    # a flat vector is one score per draw (a single init)
    x = np.asarray(x, dtype=dtype)
    return x.reshape(-1, 1) if x.ndim <= 1 else x


def _matrices(dev, test, ok):
    test = _draws(test)
    dev = None if dev is None else _draws(dev)
    if test.size == 0:
        raise AggregationError("no trials to aggregate")
    ok = np.ones(test.shape, bool) if ok is None else _draws(ok, bool)
    # diverged trials count as 0 everywhere
    test = np.where(ok, test, 0.0)
    if dev is not None:
        dev = np.where(ok, dev, 0.0)
    return dev, test, ok


def best_of(dev, test, ok=None) -> float:
    """Test score of the draw with the highest init-averaged dev score.

    ``dev``/``test``/``ok`` are [draws, inits]. Draws whose inits all diverged
    are not candidates; ties go to the lowest draw index.
    """
    dev, test, ok = _matrices(dev, test, ok)
    candidates = ok.any(axis=1)
    if not candidates.any():
        return 0.0
    dev_mean = np.where(candidates, dev.mean(axis=1), -np.inf)
    return float(test.mean(axis=1)[int(np.argmax(dev_mean))])


def mean_of(test, ok=None) -> float:
    """Mean over draws of the init-averaged test score (diverged trials count 0)."""
    _, test, _ = _matrices(None, test, ok)
    return float(test.mean(axis=1).mean())


def max_normalize(column) -> np.ndarray:
    column = np.asarray(column, dtype=np.float64)
    top = column.max() if column.size else 0.0
    if not top > 0:
        raise AggregationError("cannot max-normalize a column whose maximum is not positive")
    return column / top


@dataclass
class ScoreTable:
    """Scores indexed [activation, experiment]."""

    activations: list
    experiments: list
    values: np.ndarray

    def normalized(self) -> "ScoreTable":
        cols = [max_normalize(self.values[:, j]) for j in range(len(self.experiments))]
        vals = np.stack(cols, axis=1) if cols else self.values.copy()
        return ScoreTable(list(self.activations), list(self.experiments), vals)

    def column(self, experiment) -> dict:
        j = self.experiments.index(experiment)
        return dict(zip(self.activations, self.values[:, j]))


def cross_experiment_average(table: ScoreTable) -> dict:
    if table.values.size == 0:
        raise AggregationError("empty score table")
    return dict(zip(table.activations, table.values.mean(axis=1).tolist()))


def ranking(scores: dict) -> list:
    """Names by descending score; ties by name."""
    return sorted(scores, key=lambda a: (-scores[a], a))


def top3_stats(tables: dict) -> dict:
    """Per category, how often each activation ranks in the top 3 of a mini-experiment."""
    counts = {}
    for category, table in tables.items():
        c = {a: 0 for a in table.activations}
        for exp in table.experiments:
            for a in ranking(table.column(exp))[:3]:
                c[a] += 1
        counts[category] = c
    return counts


def spearman(a, b) -> float:
    """Rank correlation with average ranks for ties."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("need two equal-length sequences of at least 2 values")
    ra, rb = rankdata(a) - (a.size + 1) / 2, rankdata(b) - (a.size + 1) / 2
    denom = math.sqrt(float(ra @ ra) * float(rb @ rb))
    if denom == 0:
        raise ValueError("rank correlation undefined for constant input")
    return float(np.clip(ra @ rb / denom, -1.0, 1.0))


# --- regression -------------------------------------------------------------------

LOG = "log"
IDENTITY = "identity"
NUMERIC = {
    "mlp": [("layers", LOG), ("dropout", IDENTITY), ("hidden_units", LOG), ("learning_rate", LOG)],
    "cnn": [("layers", LOG), ("dropout", IDENTITY), ("hidden_units", LOG), ("learning_rate", LOG),
            ("embedding_dim", LOG), ("filter_size", IDENTITY)],
    "rnn": [("layers", LOG), ("dropout", IDENTITY), ("hidden_units", LOG), ("learning_rate", LOG)],
}
NUMERIC["lstm"] = NUMERIC["rnn"]
LEVELS = {"optimizer": OPTIMIZERS, "initializer": INITIALIZERS, "recurrent_initializer": RECURRENT_INITIALIZERS}
CATEGORICAL = {"mlp": ["optimizer", "initializer"], "cnn": ["optimizer", "initializer"],
               "rnn": ["optimizer", "initializer", "recurrent_initializer"]}
CATEGORICAL["lstm"] = CATEGORICAL["rnn"]
RIDGE = 1e-8


@dataclass
class RegressionFit:
    coefficients: dict
    dummies: dict
    intercept: float
    residual_norm: float
    columns: list
    reference_levels: dict
    ridge: bool = False
    design: np.ndarray = field(default=None, repr=False)
    residuals: np.ndarray = field(default=None, repr=False)

    def to_record(self) -> dict:
        return {
            "coefficients": self.coefficients,
            "dummies": self.dummies,
            "intercept": self.intercept,
            "residual_norm": self.residual_norm,
            "reference_levels": self.reference_levels,
            "ridge": self.ridge,
        }


def design_matrix(records, numeric, categorical):
    """Numeric regressors, then one dummy per non-reference level, then the intercept.

    The reference level of each categorical is the first observed one in the
    canonical level order; unobserved levels get no column.
    """
    cols, names, refs = [], [], {}
    for key, transform in numeric:
        v = np.array([float(r[key]) for r in records])
        cols.append(np.log(v) if transform == LOG else v)
        names.append(key)
    for key in categorical:
        observed = {r[key] for r in records}
        order = [lv for lv in LEVELS.get(key, sorted(observed)) if lv in observed]
        order += sorted(observed - set(order))
        refs[key] = order[0]
        for lv in order[1:]:
            cols.append(np.array([1.0 if r[key] == lv else 0.0 for r in records]))
            names.append(f"{key}={lv}")
    cols.append(np.ones(len(records)))
    names.append("intercept")
    return np.column_stack(cols), names, refs


def fit_regression(records, numeric=None, categorical=None, family="mlp", target="score") -> RegressionFit:
    """Ordinary least squares of ``target`` on the hyperparameters via the normal equations.

    Falls back to a ridge term of 1e-8 when the design is rank deficient.
    """
    records = list(records)
    numeric = NUMERIC[family] if numeric is None else numeric
    categorical = CATEGORICAL[family] if categorical is None else categorical
    if not records:
        raise SingularDesign("no records")
    X, names, refs = design_matrix(records, numeric, categorical)
    y = np.array([float(r[target]) for r in records])
    if X.shape[0] < X.shape[1]:
        raise SingularDesign(f"{X.shape[0]} records for {X.shape[1]} design columns")
    gram, rhs = X.T @ X, X.T @ y
    ridge = bool(np.linalg.matrix_rank(X) < X.shape[1])
    if ridge:
        gram = gram + RIDGE * np.eye(X.shape[1])
        if np.linalg.cond(gram) > 1e15:
            raise SingularDesign("design matrix singular even with ridge fallback")
    try:
        beta = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as err:
        raise SingularDesign(str(err)) from err
    resid = y - X @ beta
    coef = {n: float(b) for n, b in zip(names, beta) if n != "intercept" and "=" not in n}
    dummies = {n: float(b) for n, b in zip(names, beta) if "=" in n}
    return RegressionFit(coef, dummies, float(beta[-1]), float(np.linalg.norm(resid)), names, refs,
                         ridge, X, resid)


# --- whole-suite report -------------------------------------------------------------

DIVERGED_POLICY = "diverged trials score 0: included in mean and regression, excluded from best candidacy"


def _group(records):
    groups = defaultdict(list)
    for r in records:
        groups[(r["task"], r["activation"])].append(r)
    return groups


def _cell(trials):
    draws = sorted({t["draw"] for t in trials})
    inits = sorted({t["init"] for t in trials})
    di, ii = {d: k for k, d in enumerate(draws)}, {i: k for k, i in enumerate(inits)}
    dev = np.zeros((len(draws), len(inits)))
    test = np.zeros_like(dev)
    ok = np.zeros(dev.shape, bool)
    hparams = {}
    for t in trials:
        k, j = di[t["draw"]], ii[t["init"]]
        dev[k, j], test[k, j], ok[k, j] = t["best_dev"], t["test"], t["status"] == "ok"
        hparams[t["draw"]] = t["hparams"]
    return dev, test, ok, [hparams[d] for d in draws]


@dataclass
class Report:
    best: dict  # family -> ScoreTable
    mean: dict
    normalized_best: dict
    normalized_mean: dict
    top3: dict
    regressions: list
    families: dict


def regression_records(trials) -> list:
    dev, test, ok, hparams = _cell(trials)
    scores = np.where(ok, test, 0.0).mean(axis=1)
    return [dict(h, score=float(s)) for h, s in zip(hparams, scores)]


def build_report(records, pooled_regression=False) -> Report:
    groups = _group(records)
    families = {}
    for r in records:
        families[r["task"]] = r.get("family", "mlp")
    best, mean = defaultdict(dict), defaultdict(dict)
    for (exp, a), trials in groups.items():
        dev, test, ok, _ = _cell(trials)
        best[exp][a] = best_of(dev, test, ok)
        mean[exp][a] = mean_of(test, ok)

    def tables(src):
        out = {}
        for fam in sorted(set(families.values())):
            exps = sorted(e for e in src if families[e] == fam)
            acts = sorted(set.intersection(*(set(src[e]) for e in exps)))
            vals = np.array([[src[e][a] for e in exps] for a in acts]).reshape(len(acts), len(exps))
            out[fam] = ScoreTable(acts, exps, vals)
        return out

    best_t, mean_t = tables(best), tables(mean)

    def safe_norm(t):
        # an experiment where every trial diverged stays at 0 instead of failing the report
        cols = []
        for j in range(len(t.experiments)):
            col = t.values[:, j]
            cols.append(max_normalize(col) if col.size and col.max() > 0 else np.zeros_like(col))
        vals = np.stack(cols, axis=1) if cols else t.values.copy()
        return ScoreTable(list(t.activations), list(t.experiments), vals)

    nbest = {f: safe_norm(t) for f, t in best_t.items()}
    nmean = {f: safe_norm(t) for f, t in mean_t.items()}

    # winner statistics over every experiment, for activations present in all of them
    all_exps = sorted(best)
    shared = sorted(set.intersection(*(set(best[e]) for e in all_exps))) if all_exps else []
    winners = {}
    for cat, src in (("best", best), ("mean", mean)):
        vals = np.array([[src[e][a] for e in all_exps] for a in shared]).reshape(len(shared), len(all_exps))
        winners[cat] = ScoreTable(shared, all_exps, vals)
    top3 = top3_stats(winners)

    regressions = []
    if pooled_regression:
        pooled = defaultdict(list)
        for (exp, a), trials in groups.items():
            pooled[(families[exp], a)].extend(regression_records(trials))
        items = [((fam, a), recs, fam) for (fam, a), recs in sorted(pooled.items())]
    else:
        items = [((exp, a), regression_records(trials), families[exp]) for (exp, a), trials in sorted(groups.items())]
    for (scope, a), recs, fam in items:
        entry = {"scope": scope, "activation": a}
        try:
            entry.update(fit_regression(recs, family=fam).to_record())
        except SingularDesign as err:
            entry["error"] = str(err)
        regressions.append(entry)
    return Report(dict(best_t), dict(mean_t), nbest, nmean, top3, regressions, families)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_report(rep: Report, out_dir) -> list[Path]:
    """Write report.jsonl, regression.jsonl and two-column plot files per family."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    lines = [json.dumps({"record": "header", "diverged_policy": DIVERGED_POLICY,
                         "dummy_reference": "first observed level in canonical order",
                         "top3_ties": "broken by activation name"}, sort_keys=True)]
    for fam in sorted(rep.best):
        bt, mt = rep.best[fam], rep.mean[fam]
        nb = cross_experiment_average(rep.normalized_best[fam]) if bt.values.size else {}
        nm = cross_experiment_average(rep.normalized_mean[fam]) if mt.values.size else {}
        for a in bt.activations:
            lines.append(json.dumps({
                "record": "activation",
                "family": fam,
                "activation": a,
                "best": {e: float(v) for e, v in zip(bt.experiments, bt.values[bt.activations.index(a)])},
                "mean": {e: float(v) for e, v in zip(mt.experiments, mt.values[mt.activations.index(a)])},
                "best_normalized_avg": nb.get(a),
                "mean_normalized_avg": nm.get(a),
                "top3_best": rep.top3["best"].get(a),
                "top3_mean": rep.top3["mean"].get(a),
            }, sort_keys=True))
        for cat, avg in (("best", nb), ("mean", nm)):
            path = out / f"{fam}_{cat}.dat"
            path.write_text("".join(f"{a} {_fmt(avg[a])}\n" for a in ranking(avg)))
            written.append(path)
    path = out / "report.jsonl"
    path.write_text("\n".join(lines) + "\n")
    written.append(path)
    path = out / "regression.jsonl"
    path.write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in rep.regressions))
    written.append(path)
    return written

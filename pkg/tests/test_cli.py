import json

import pytest

from actbench import cli
from actbench.config import load_suite, suite_from_dict
from actbench.data import ConfigError

TINY = {
    "master_seed": 1,
    "n_draws": 2,
    "n_inits": 1,
    "activations": ["relu", "tanh", "cube"],
    "epochs": {"mlp": 3},
    "space": {"hidden_units": [4, 8]},
    "experiments": [{"id": "v", "family": "mlp", "data": {"path": "v.tsv"},
                     "split": {"train_frac": 0.5, "dev_frac": 0.2, "seed": 0}}],
}


def write_cfg(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


# --- config ------------------------------------------------------------------------------

def test_config_defaults_and_overrides(tmp_path):
    assert cli.main(["gen", "vectors", "--out", str(tmp_path / "v.tsv"), "--n", "40", "--dim", "4"]) == 0
    suite = load_suite(write_cfg(tmp_path, TINY))
    assert suite.n_draws == 2 and suite.master_seed == 1
    assert suite.settings.epochs["mlp"] == 3 and suite.settings.epochs["cnn"] == 50
    assert suite.settings.patience == {"mlp": 10, "cnn": 10, "rnn": 5, "lstm": 5}
    assert suite.settings.batch_size == {"mlp": 16, "cnn": 64, "rnn": 32, "lstm": 32}
    assert suite.space.hidden_units == (4, 8)
    assert len(suite.plan()) == 6


def test_config_with_generator_and_all_activations():
    cfg = {"experiments": [{"id": "s", "family": "rnn", "data": {"generator": "sequences", "n": 20},
                            "split": {"train": 10, "dev": 5, "seed": 1}}], "n_draws": 1, "n_inits": 1}
    suite = suite_from_dict(cfg)
    assert len(suite.activations) == 21
    assert len(suite.plan()) == 16


@pytest.mark.parametrize("bad", [
    {"experiments": []},
    {"experiments": [{"family": "mlp"}]},
    {"bogus": 1, "experiments": [{"id": "x", "family": "mlp", "data": {"generator": "vectors"}}]},
    {"activations": ["nope"], "experiments": [{"id": "x", "family": "mlp", "data": {"generator": "vectors"}}]},
    {"experiments": [{"id": "x", "family": "mlp", "data": {"generator": "wav"}}]},
    {"experiments": [{"id": "x", "family": "mlp", "data": {"generator": "vectors"}, "split": {"train_frac": 1.5}}]},
    {"experiments": [{"id": "x", "family": "cnn", "data": {"generator": "vectors"}}]},
    {"space": {"width": [1, 2]}, "experiments": [{"id": "x", "family": "mlp", "data": {"generator": "vectors"}}]},
])
def test_config_errors(bad):
    with pytest.raises(ConfigError):
        suite_from_dict(bad)


# --- command line ----------------------------------------------------------------------------

def test_gen_run_report_pipeline(tmp_path, capsys):
    assert cli.main(["gen", "vectors", "--out", str(tmp_path / "v.tsv"), "--n", "40", "--dim", "4"]) == 0
    cfg = write_cfg(tmp_path, TINY)
    store = tmp_path / "r.jsonl"
    assert cli.main(["run", str(cfg), "--store", str(store)]) == 0
    assert len(store.read_text().splitlines()) == 6
    assert cli.main(["run", str(cfg), "--store", str(store)]) == 0  # resumes, nothing new
    assert len(store.read_text().splitlines()) == 6
    assert cli.main(["report", str(store), "--out", str(tmp_path / "out")]) == 0
    ranking = (tmp_path / "out" / "mlp_mean.dat").read_text().splitlines()
    assert sorted(line.split()[0] for line in ranking) == ["cube", "relu", "tanh"]
    assert "6 new trials" in capsys.readouterr().out


@pytest.mark.parametrize("kind", ["docs", "sequences"])
def test_gen_other_kinds(tmp_path, kind):
    out = tmp_path / f"{kind}.tsv"
    assert cli.main(["gen", kind, "--out", str(out), "--n", "10"]) == 0
    assert out.stat().st_size > 0


def test_run_with_missing_config(tmp_path, capsys):
    assert cli.main(["run", str(tmp_path / "absent.json")]) == 1
    assert "not found" in capsys.readouterr().err


def test_run_with_invalid_json(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["run", str(bad)]) == 1


def test_report_of_missing_store(tmp_path):
    assert cli.main(["report", str(tmp_path / "none.jsonl"), "--out", str(tmp_path)]) == 1


def test_unknown_flag_prints_usage(capsys):
    assert cli.main(["check", "--frobnicate"]) == 1
    assert "usage:" in capsys.readouterr().err
    assert cli.main([]) == 1
    assert cli.main(["dance"]) == 1


def test_check_passes_on_a_correct_build(capsys):
    assert cli.main(["check"]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_check_failure_exits_2(monkeypatch):
    from actbench import selfcheck
    monkeypatch.setattr(selfcheck, "run_all", lambda full=False: [selfcheck.Check("x", False, "broken")])
    assert cli.main(["check"]) == 2

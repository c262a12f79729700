"""Run a tiny benchmark end to end and print the resulting rankings.

Everything goes through the same code paths as the command line tool, with
shortened training so the whole demo finishes in under a minute.
"""
import tempfile
from pathlib import Path

from actbench import data, harness, report
from actbench.store import ResultsStore


def main():
    task = data.split_fractions(data.gen_synth_vectors(3, 200, 10, 2.0, 0), 0.5, 0.2, 0)
    suite = harness.Suite(
        experiments=[harness.Experiment(id="synth", family="mlp", task=task)],
        activations=["relu", "tanh", "penalized-tanh", "swish", "cube", "sigmoid"],
        space=harness.HyperParamSpace(hidden_units=(8, 32)),
        n_draws=4,
        n_inits=2,
        master_seed=2017,
        settings=harness.Settings(epochs={"mlp": 15, "cnn": 5, "rnn": 5, "lstm": 5}),
    )
    with tempfile.TemporaryDirectory() as tmp:
        store = ResultsStore(Path(tmp) / "results.jsonl")
        harness.run_suite(suite, store)
        rep = report.build_report(store.records())
        for name in report.write_report(rep, Path(tmp) / "report"):
            if name.suffix == ".dat":
                print(f"== {name.name}")
                print(name.read_text())


if __name__ == "__main__":
    main()

"""Command line: ``actbench {run,report,gen,check}``.

Exit status is 0 on success, 1 on usage or configuration errors and 2 when a
self-test fails.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import data as datakit
from . import report, selfcheck
from .data import ConfigError, ParseError
from .store import ResultsStore, StoreError

EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="actbench", description="Activation-function benchmark harness.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a suite config, appending to a results store")
    run.add_argument("config")
    run.add_argument("--store", help="results log (default: results.jsonl next to the config)")
    run.add_argument("--workers", type=int, default=1, help="parallel worker processes")

    rep = sub.add_parser("report", help="aggregate a results store")
    rep.add_argument("store")
    rep.add_argument("--out", required=True, help="output directory")
    rep.add_argument("--pooled", action="store_true", help="pool regressions across experiments")

    gen = sub.add_parser("gen", help="write a synthetic dataset as TSV")
    gen.add_argument("kind", choices=("vectors", "docs", "sequences"))
    gen.add_argument("--out", required=True, help="TSV file to write")
    gen.add_argument("--classes", type=int, default=3, help="number of classes (vectors, docs)")
    gen.add_argument("--n", type=int, default=300, help="number of items")
    gen.add_argument("--dim", type=int, default=20, help="vector dimension")
    gen.add_argument("--separation", type=float, default=3.0, help="distance between class centres")
    gen.add_argument("--vocab", type=int, default=60, help="vocabulary size for docs")
    gen.add_argument("--length", type=int, default=None, help="maximum document length, or exact sentence length")
    gen.add_argument("--seed", type=int, default=0)

    chk = sub.add_parser("check", help="run gradient and oracle self-tests")
    chk.add_argument("--full", action="store_true", help="gradient-check every activation in every family")
    return p


def _run(args) -> int:
    from .config import load_suite
    from .harness import run_suite

    suite = load_suite(args.config)
    store_path = Path(args.store) if args.store else Path(args.config).parent / "results.jsonl"
    store = ResultsStore(store_path)
    before = len(store)
    results = run_suite(suite, store, workers=args.workers)
    diverged = sum(r.status == "diverged" for r in results)
    print(f"{len(store) - before} new trials, {len(store)} in {store_path} ({diverged} diverged)")
    return EXIT_OK


def _report(args) -> int:
    path = Path(args.store)
    if not path.exists():
        raise ConfigError(f"results store not found: {path}")
    records = ResultsStore(path).records()
    if not records:
        raise ConfigError(f"results store {path} is empty")
    written = report.write_report(report.build_report(records, args.pooled), args.out)
    for p in written:
        print(p)
    return EXIT_OK


def _gen(args) -> int:
    if args.kind == "vectors":
        task = datakit.gen_synth_vectors(args.classes, args.n, args.dim, args.separation, args.seed)
    elif args.kind == "docs":
        task = datakit.gen_synth_docs(args.classes, args.n, args.vocab, args.seed, args.length or 20)
    else:
        task = datakit.gen_synth_sequences(args.n, args.seed, args.length or 12)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    datakit.write_tsv_dataset(task, args.out)
    print(json.dumps({"path": args.out, "kind": task.kind, "items": len(task), "classes": task.n_classes}))
    return EXIT_OK


def _check(args) -> int:
    checks = selfcheck.run_all(full=args.full)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_CHECK if failed else EXIT_OK


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except UsageError as err:
        print(err, file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handler = {"run": _run, "report": _report, "gen": _gen, "check": _check}[args.command]
    try:
        return handler(args)
    except (ConfigError, ParseError, StoreError, OSError) as err:
        print(f"actbench: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

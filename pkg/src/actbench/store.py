"""Append-only JSON-lines log of trial results, keyed by (task, activation, draw, init)."""
from __future__ import annotations

import json
import os
import threading
import warnings
from pathlib import Path

FIELDS = ("task", "activation", "draw", "init", "status", "best_dev", "test", "epochs", "seconds")


class StoreError(RuntimeError):
    pass


def record_key(rec) -> tuple:
    return (rec["task"], rec["activation"], int(rec["draw"]), int(rec["init"]))


class ResultsStore:
    """One record per line. Reopening drops (and truncates away) a torn final line."""

    def __init__(self, path):
        self.path = Path(path)
        self._records: dict[tuple, dict] = {}
        self._lock = threading.Lock()
        if self.path.exists():
            self._reload()

    def _reload(self):
        raw = self.path.read_bytes()
        good_end = 0
        pos = 0
        while pos < len(raw):
            nl = raw.find(b"\n", pos)
            if nl == -1:
                warnings.warn(f"{self.path}: dropping torn final record")
                break
            line = raw[pos:nl]
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                if raw.find(b"\n", nl + 1) == -1 and not raw[nl + 1:].strip():
                    warnings.warn(f"{self.path}: dropping torn final record")
                    break
                raise StoreError(f"{self.path}: corrupt record at byte {pos}") from None
            key = record_key(rec)
            if key in self._records:
                raise StoreError(f"{self.path}: duplicate key {key}")
            self._records[key] = rec
            pos = good_end = nl + 1
        if good_end != len(raw):
            with open(self.path, "r+b") as fh:
                fh.truncate(good_end)

    def __len__(self):
        return len(self._records)

    def __contains__(self, key):
        return tuple(key) in self._records

    def keys(self):
        return set(self._records)

    def append(self, rec: dict):
        missing = [f for f in FIELDS if f not in rec]
        if missing:
            raise StoreError(f"record lacks fields {missing}")
        key = record_key(rec)
        line = json.dumps(rec, sort_keys=True, allow_nan=False) + "\n"
        with self._lock:
            if key in self._records:
                raise StoreError(f"duplicate key {key}")
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())
            self._records[key] = json.loads(line)

    def records(self) -> list[dict]:
        """All records in canonical (task, activation, draw, init) order."""
        return [self._records[k] for k in sorted(self._records)]

"""Disk cache for result envelopes, keyed by canonical inputs and version.

Entries written by a different code version are ignored; unreadable entries
are treated as misses with a warning, never an error.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from pathlib import Path

__all__ = ["EnvelopeCache", "canonical_key"]


def canonical_key(command: str, inputs: dict) -> str:
    blob = json.dumps({"command": command, "inputs": inputs},
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


class EnvelopeCache:
    def __init__(self, directory: str | Path, version: str):
        self.directory = Path(directory)
        self.version = version

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> dict | None:
        path = self._path(key)
        if not path.is_file():
            return None
        try:
            record = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            warnings.warn(f"ignoring unreadable cache entry {path.name}: {exc}")
            return None
        if record.get("version") != self.version:
            return None
        envelope = record.get("envelope")
        return envelope if isinstance(envelope, dict) else None

    def put(self, key: str, envelope: dict) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        record = {"version": self.version, "envelope": envelope}
        tmp = self._path(key).with_suffix(".tmp")
        tmp.write_text(json.dumps(record, sort_keys=False))
        tmp.replace(self._path(key))

"""Embedded durable record store.

A single append-only NDJSON log (``store.ndjson`` inside the data directory)
holds one committed transaction per line; each transaction carries one or
more keyed writes. Opening a store replays the log into memory, so reads are
dictionary lookups. Appends are flushed and fsynced before they are
acknowledged, and a torn final line (crash mid-append) is discarded on the
next open — a write either fully commits or never happened.

Two secondary indexes are maintained as part of every commit:

* entity references — every well-formed entity id appearing anywhere in a
  record's serialized form, so "which assemblies/BoMs/BoLs mention component
  X" is O(matches) instead of a full scan;
* record names — the top-level ``name`` field, for prefix lookups.
"""

from __future__ import annotations

import base64
import json
import logging
import os
import threading
from dataclasses import dataclass
from pathlib import Path

from .canonical import canonical_bytes
from .errors import NotFound, RevisionConflict, StorageFailure
from .ids import is_entity_id

logger = logging.getLogger(__name__)

LOG_NAME = "store.ndjson"

KIND_COMPONENT = "component"
KIND_ASSEMBLY = "assembly"
KIND_BOM = "bom"
KIND_BOL = "bol"
KIND_LEDGER_ENTRY = "ledger_entry"


@dataclass(frozen=True)
class StoredRecord:
    key: str
    kind: str
    data: bytes
    revision: int


@dataclass(frozen=True)
class WriteOp:
    """One keyed write inside a transaction.

    ``expected_revision`` is optimistic concurrency: 0 means the key must not
    exist yet, a positive value must equal the current revision, and None
    skips the check.
    """

    key: str
    kind: str
    data: bytes
    expected_revision: int | None = None


def extract_refs(data: bytes) -> set[str]:
    """Collect every entity id mentioned anywhere in a JSON record."""
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        return set()
    refs: set[str] = set()

    def walk(node):
        if isinstance(node, str):
            if is_entity_id(node):
                refs.add(node)
        elif isinstance(node, dict):
            for key, value in node.items():
                if is_entity_id(key):
                    refs.add(key)
                walk(value)
        elif isinstance(node, list):
            for item in node:
                walk(item)

    walk(doc)
    return refs


def _extract_name(data: bytes) -> str | None:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        return None
    if isinstance(doc, dict):
        name = doc.get("name")
        if isinstance(name, str):
            return name
    return None


class Store:
    """Single-writer, multi-reader keyed store backed by one log file."""

    def __init__(self, data_dir: str | Path):
        self._dir = Path(data_dir)
        self._path = self._dir / LOG_NAME
        self._lock = threading.RLock()
        self._records: dict[str, StoredRecord] = {}
        self._refs: dict[str, set[str]] = {}
        self._names: dict[str, str] = {}
        try:
            self._dir.mkdir(parents=True, exist_ok=True)
            self._replay()
            self._fh = open(self._path, "ab")
        except OSError as exc:
            raise StorageFailure(f"cannot open store at {self._dir}: {exc}") from exc

    # -- recovery ------------------------------------------------------

    def _replay(self) -> None:
        if not self._path.exists():
            self._path.touch()
            return
        raw = self._path.read_bytes()
        end = raw.rfind(b"\n") + 1  # bytes [0:end] hold complete lines
        offset = 0
        for line in raw[:end].split(b"\n"):
            if line:
                try:
                    txn = json.loads(line.decode("utf-8"))
                    self._apply(txn)
                except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise StorageFailure(
                        f"corrupt store log at byte {offset}: {exc}"
                    ) from exc
            offset += len(line) + 1
        if end < len(raw):
            # torn tail from a crash mid-append; drop it
            logger.warning("discarding torn trailing record in %s", self._path)
            with open(self._path, "r+b") as fh:
                fh.truncate(end)

    def _apply(self, txn: dict) -> None:
        for write in txn["writes"]:
            record = StoredRecord(
                key=write["key"],
                kind=write["kind"],
                data=base64.b64decode(write["data_b64"]),
                revision=write["revision"],
            )
            self._index(record)

    def _index(self, record: StoredRecord) -> None:
        old = self._records.get(record.key)
        if old is not None:
            for ref in extract_refs(old.data):
                self._refs.get(ref, set()).discard(record.key)
            self._names.pop(record.key, None)
        self._records[record.key] = record
        for ref in extract_refs(record.data):
            self._refs.setdefault(ref, set()).add(record.key)
        name = _extract_name(record.data)
        if name is not None:
            self._names[record.key] = name

    # -- writes --------------------------------------------------------

    def put(
        self, key: str, kind: str, data: bytes, expected_revision: int | None = None
    ) -> int:
        """Write one record durably; returns its new revision."""
        return self.put_many([WriteOp(key, kind, data, expected_revision)])[0]

    def put_many(self, writes: list[WriteOp]) -> list[int]:
        """Commit several writes atomically (one log line, one fsync)."""
        with self._lock:
            revisions = []
            staged = []
            seen: dict[str, int] = {}
            for op in writes:
                current = seen.get(op.key)
                if current is None:
                    existing = self._records.get(op.key)
                    current = existing.revision if existing else 0
                if op.expected_revision is not None and op.expected_revision != current:
                    raise RevisionConflict(
                        f"key {op.key}: expected revision {op.expected_revision}, "
                        f"found {current}",
                        detail={"key": op.key, "revision": current},
                    )
                revision = current + 1
                seen[op.key] = revision
                revisions.append(revision)
                staged.append(
                    {
                        "data_b64": base64.b64encode(op.data).decode("ascii"),
                        "key": op.key,
                        "kind": op.kind,
                        "revision": revision,
                    }
                )
            line = canonical_bytes({"writes": staged}) + b"\n"
            try:
                self._fh.write(line)
                self._fh.flush()
                os.fsync(self._fh.fileno())
            except OSError as exc:
                raise StorageFailure(f"append failed: {exc}") from exc
            for op, revision in zip(writes, revisions):
                self._index(StoredRecord(op.key, op.kind, op.data, revision))
            return revisions

    # -- reads ---------------------------------------------------------

    def get(self, key: str) -> StoredRecord:
        with self._lock:
            record = self._records.get(key)
        if record is None:
            raise NotFound(f"no record for key {key}", detail={"key": key})
        return record

    def exists(self, key: str) -> bool:
        with self._lock:
            return key in self._records

    def scan(
        self,
        kind: str,
        name_prefix: str | None = None,
        referencing_component: str | None = None,
    ) -> list[StoredRecord]:
        """Records of ``kind`` in ascending key order, optionally filtered.

        ``referencing_component`` accepts any entity id and matches records
        whose serialized form mentions it (components, assemblies, whatever).
        """
        with self._lock:
            if referencing_component is not None:
                keys = set(self._refs.get(referencing_component, ()))
            else:
                keys = set(self._records)
            out = []
            for key in sorted(keys):
                record = self._records.get(key)
                if record is None or record.kind != kind:
                    continue
                if name_prefix is not None:
                    name = self._names.get(key)
                    if name is None or not name.startswith(name_prefix):
                        continue
                out.append(record)
            return out

    @property
    def record_count(self) -> int:
        with self._lock:
            return len(self._records)

    def close(self) -> None:
        try:
            self._fh.close()
        except OSError:
            pass

    def __enter__(self) -> "Store":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

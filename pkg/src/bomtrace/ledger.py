"""Append-only hash-chained event log and Merkle anchoring.

Chain rule: entry ``n`` stores ``prev_hash`` equal to entry ``n-1``'s
``entry_hash`` (entry 0 uses 64 zero hex chars), and

    entry_hash = SHA-256(ASCII(index) || prev_hash || entry_type || payload_hash)

where ``index`` is the unpadded decimal index, the two hashes are 64-char
lowercase hex, and ``entry_type`` is one of the type strings below. Payloads
are canonical JSON bytes; ``payload_hash`` is their SHA-256.

Merkle rule: leaves hash as SHA-256(0x00 || leaf bytes), internal nodes as
SHA-256(0x01 || left || right). At each level an unpaired last node is
carried up unchanged (never duplicated). The 0x00/0x01 prefixes keep leaf
and internal preimages disjoint.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Any, Sequence

from .canonical import canonical_bytes, from_canonical
from .errors import MalformedProof
from .store import KIND_LEDGER_ENTRY, Store, WriteOp

GENESIS_HASH = "0" * 64

BOL_CREATED = "bol_created"
OBSERVATION_RECORDED = "observation_recorded"
BOL_SEALED = "bol_sealed"
ENTRY_TYPES = (BOL_CREATED, OBSERVATION_RECORDED, BOL_SEALED)

_LEAF_PREFIX = b"\x00"
_NODE_PREFIX = b"\x01"


def _sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def entry_hash_hex(index: int, prev_hash: str, entry_type: str, payload_hash: str) -> str:
    preimage = f"{index}{prev_hash}{entry_type}{payload_hash}".encode("ascii")
    return _sha256_hex(preimage)


@dataclass(frozen=True)
class LedgerEntry:
    index: int
    prev_hash: str
    entry_type: str
    payload: bytes
    payload_hash: str
    entry_hash: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "prev_hash": self.prev_hash,
            "entry_type": self.entry_type,
            "payload": from_canonical(self.payload),
            "payload_hash": self.payload_hash,
            "entry_hash": self.entry_hash,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "LedgerEntry":
        return cls(
            index=doc["index"],
            prev_hash=doc["prev_hash"],
            entry_type=doc["entry_type"],
            payload=canonical_bytes(doc["payload"]),
            payload_hash=doc["payload_hash"],
            entry_hash=doc["entry_hash"],
        )


@dataclass(frozen=True)
class Anchor:
    bol_id: str
    merkle_root: str
    leaf_count: int
    ledger_index: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "bol_id": self.bol_id,
            "merkle_root": self.merkle_root,
            "leaf_count": self.leaf_count,
            "ledger_index": self.ledger_index,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "Anchor":
        return cls(doc["bol_id"], doc["merkle_root"], doc["leaf_count"], doc["ledger_index"])


@dataclass(frozen=True)
class InclusionProof:
    leaf_index: int
    siblings: tuple[tuple[str, str], ...]  # (digest hex, "left"|"right")

    def to_dict(self) -> dict[str, Any]:
        return {
            "leaf_index": self.leaf_index,
            "siblings": [[digest, side] for digest, side in self.siblings],
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "InclusionProof":
        return cls(
            leaf_index=doc["leaf_index"],
            siblings=tuple((s[0], s[1]) for s in doc["siblings"]),
        )


# -- Merkle tree -------------------------------------------------------


def leaf_digest(data: bytes) -> bytes:
    return hashlib.sha256(_LEAF_PREFIX + data).digest()


def node_digest(left: bytes, right: bytes) -> bytes:
    return hashlib.sha256(_NODE_PREFIX + left + right).digest()


def _next_level(level: list[bytes]) -> list[bytes]:
    nxt = [node_digest(level[i], level[i + 1]) for i in range(0, len(level) - 1, 2)]
    if len(level) % 2 == 1:
        nxt.append(level[-1])
    return nxt


def merkle_root(leaves: Sequence[bytes]) -> str:
    """Root over leaf byte strings, hex-encoded."""
    if not leaves:
        raise ValueError("merkle tree needs at least one leaf")
    level = [leaf_digest(data) for data in leaves]
    while len(level) > 1:
        level = _next_level(level)
    return level[0].hex()


def inclusion_proof(leaves: Sequence[bytes], leaf_index: int) -> InclusionProof:
    if not 0 <= leaf_index < len(leaves):
        raise ValueError(f"leaf index {leaf_index} out of range (0..{len(leaves) - 1})")
    level = [leaf_digest(data) for data in leaves]
    idx = leaf_index
    siblings: list[tuple[str, str]] = []
    while len(level) > 1:
        odd = len(level) % 2 == 1
        if odd and idx == len(level) - 1:
            # carried up unchanged; no sibling at this level
            idx = len(level) // 2
        else:
            sibling = idx ^ 1
            side = "left" if sibling < idx else "right"
            siblings.append((level[sibling].hex(), side))
            idx = idx // 2
        level = _next_level(level)
    return InclusionProof(leaf_index=leaf_index, siblings=tuple(siblings))


def verify_inclusion(leaf: bytes, proof: InclusionProof, root: str) -> bool:
    """True iff applying the proof's siblings to the leaf reproduces ``root``."""
    if proof.leaf_index < 0:
        raise MalformedProof("negative leaf index")
    digest = leaf_digest(leaf)
    for item in proof.siblings:
        try:
            sibling_hex, side = item
        except (TypeError, ValueError) as exc:
            raise MalformedProof(f"bad proof step {item!r}") from exc
        if side not in ("left", "right"):
            raise MalformedProof(f"bad proof side {side!r}")
        try:
            sibling = bytes.fromhex(sibling_hex)
        except (TypeError, ValueError) as exc:
            raise MalformedProof(f"bad sibling digest {sibling_hex!r}") from exc
        if len(sibling) != 32:
            raise MalformedProof(f"sibling digest must be 32 bytes, got {len(sibling)}")
        if side == "left":
            digest = node_digest(sibling, digest)
        else:
            digest = node_digest(digest, sibling)
    return digest.hex() == root


def compute_anchor(
    bol_id: str, leaves: Sequence[bytes], ledger_index: int
) -> Anchor:
    return Anchor(
        bol_id=bol_id,
        merkle_root=merkle_root(leaves),
        leaf_count=len(leaves),
        ledger_index=ledger_index,
    )


# -- chain verification ------------------------------------------------


def verify_entries(entries: Sequence[LedgerEntry]) -> tuple[bool, int | None]:
    """Recompute every hash and link; returns (ok, first bad index)."""
    prev = GENESIS_HASH
    for pos, entry in enumerate(entries):
        if entry.index != pos:
            return False, pos
        if entry.prev_hash != prev:
            return False, pos
        if _sha256_hex(entry.payload) != entry.payload_hash:
            return False, pos
        expected = entry_hash_hex(
            entry.index, entry.prev_hash, entry.entry_type, entry.payload_hash
        )
        if entry.entry_hash != expected:
            return False, pos
        prev = entry.entry_hash
    return True, None


def _entry_key(index: int) -> str:
    return f"le_{index:016d}"


class Ledger:
    """Hash chain persisted through the record store.

    Appends may carry extra record writes so a mutation and its audit
    entries commit in one store transaction.
    """

    def __init__(self, store: Store):
        self._store = store
        # lenient load: a tampered chain must still open so verify_chain can
        # report it; appends continue from whatever the last entry claims
        records = store.scan(KIND_LEDGER_ENTRY)
        self._count = len(records)
        self._last_hash = GENESIS_HASH
        if records:
            try:
                last = LedgerEntry.from_dict(
                    json.loads(records[-1].data.decode("utf-8"))
                )
                self._last_hash = last.entry_hash
            except Exception:
                pass

    def append_entry(
        self,
        entry_type: str,
        payload: bytes,
        extra_writes: Sequence[WriteOp] = (),
    ) -> LedgerEntry:
        if entry_type not in ENTRY_TYPES:
            raise ValueError(f"unknown entry type {entry_type!r}")
        # payloads must already be canonical bytes
        if canonical_bytes(from_canonical(payload)) != payload:
            raise ValueError("ledger payload is not canonical JSON")
        index = self._count
        payload_hash = _sha256_hex(payload)
        entry = LedgerEntry(
            index=index,
            prev_hash=self._last_hash,
            entry_type=entry_type,
            payload=payload,
            payload_hash=payload_hash,
            entry_hash=entry_hash_hex(index, self._last_hash, entry_type, payload_hash),
        )
        writes = list(extra_writes) + [
            WriteOp(
                key=_entry_key(index),
                kind=KIND_LEDGER_ENTRY,
                data=canonical_bytes(entry.to_dict()),
                expected_revision=0,
            )
        ]
        self._store.put_many(writes)
        self._count = index + 1
        self._last_hash = entry.entry_hash
        return entry

    def entries(self) -> list[LedgerEntry]:
        out = []
        for record in self._store.scan(KIND_LEDGER_ENTRY):
            out.append(LedgerEntry.from_dict(json.loads(record.data.decode("utf-8"))))
        return out

    def verify_chain(self) -> tuple[bool, int | None]:
        """Audit the stored chain; tolerates undecodable records by flagging them."""
        records = self._store.scan(KIND_LEDGER_ENTRY)
        entries: list[LedgerEntry] = []
        for pos, record in enumerate(records):
            try:
                entries.append(
                    LedgerEntry.from_dict(json.loads(record.data.decode("utf-8")))
                )
            except Exception:
                entries_ok, bad = verify_entries(entries)
                return False, bad if not entries_ok else pos
        return verify_entries(entries)

    def export(self) -> bytes:
        """Newline-delimited canonical JSON, one entry per line, index order."""
        lines = [canonical_bytes(entry.to_dict()) for entry in self.entries()]
        return b"".join(line + b"\n" for line in lines)

    @property
    def count(self) -> int:
        return self._count

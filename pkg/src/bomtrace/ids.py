"""Entity identifiers: a kind prefix plus 32 lowercase hex characters.

Prefixes: ``ds_`` data sources, ``af_`` artifacts, ``as_`` assemblies,
``bom_`` BoMs, ``bol_`` BoLs. Normal operation draws 128 random bits per id;
deterministic mode (for tests and reproducible fixtures) hands out a counter
instead, so the n-th id issued is always the same.
"""

from __future__ import annotations

import re
import secrets

DATA_SOURCE = "ds"
ARTIFACT = "af"
ASSEMBLY = "as"
BOM = "bom"
BOL = "bol"
REQUEST = "req"

_ID_RE = re.compile(r"^(ds|af|as|bom|bol)_[0-9a-f]{32}$")
_PREFIX_RE = {
    DATA_SOURCE: re.compile(r"^ds_[0-9a-f]{32}$"),
    ARTIFACT: re.compile(r"^af_[0-9a-f]{32}$"),
    ASSEMBLY: re.compile(r"^as_[0-9a-f]{32}$"),
    BOM: re.compile(r"^bom_[0-9a-f]{32}$"),
    BOL: re.compile(r"^bol_[0-9a-f]{32}$"),
}


def is_entity_id(value: str) -> bool:
    return bool(_ID_RE.match(value))


def id_kind(value: str) -> str | None:
    """Return the prefix of a well-formed entity id, else None."""
    m = _ID_RE.match(value)
    return value.split("_", 1)[0] if m else None


def matches_kind(value: str, prefix: str) -> bool:
    pattern = _PREFIX_RE.get(prefix)
    return bool(pattern and pattern.match(value))


def is_component_id(value: str) -> bool:
    return matches_kind(value, DATA_SOURCE) or matches_kind(value, ARTIFACT)


class IdGenerator:
    """Issues prefixed ids, randomly or from a deterministic counter.

    ``start`` seeds the counter in deterministic mode; callers reopening a
    store pass the stored record count so reissued counters never collide
    with persisted ids.
    """

    def __init__(self, deterministic: bool = False, start: int = 1):
        self.deterministic = deterministic
        self._counter = start

    def new_id(self, prefix: str) -> str:
        if self.deterministic:
            hex_part = f"{self._counter:032x}"
            self._counter += 1
        else:
            hex_part = secrets.token_hex(16)
        return f"{prefix}_{hex_part}"

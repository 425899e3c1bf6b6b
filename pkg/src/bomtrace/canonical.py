"""Canonical JSON encoding shared by the store, ledger, and API layers.

Every byte sequence that gets hashed, exported, or compared for equality in
this package is produced by :func:`canonical_bytes`. The rules:

* UTF-8 text, no insignificant whitespace (``,`` and ``:`` separators only).
* Object keys sorted ascending by their UTF-8 bytes (code-point order, which
  is identical for UTF-8).
* All strings NFC-normalized before encoding.
* Numbers must be integers; floats are rejected outright so two encoders can
  never disagree on a decimal rendering. Timestamps are integer milliseconds
  since the Unix epoch.
"""

from __future__ import annotations

import json
import unicodedata
from typing import Any


class CanonicalEncodingError(ValueError):
    """Value cannot be represented in canonical JSON."""


def _normalize(value: Any) -> Any:
    if isinstance(value, str):
        return unicodedata.normalize("NFC", value)
    if isinstance(value, bool) or value is None or isinstance(value, int):
        return value
    if isinstance(value, float):
        raise CanonicalEncodingError(
            f"floats are not canonical (got {value!r}); use integers"
        )
    if isinstance(value, dict):
        out: dict[str, Any] = {}
        for key, item in value.items():
            if not isinstance(key, str):
                raise CanonicalEncodingError(f"object keys must be strings, got {key!r}")
            norm_key = unicodedata.normalize("NFC", key)
            if norm_key in out:
                raise CanonicalEncodingError(f"duplicate key after NFC normalization: {norm_key!r}")
            out[norm_key] = _normalize(item)
        return out
    if isinstance(value, (list, tuple)):
        return [_normalize(item) for item in value]
    raise CanonicalEncodingError(f"type {type(value).__name__} is not canonical")


def canonical_bytes(value: Any) -> bytes:
    """Encode ``value`` as canonical JSON bytes."""
    normalized = _normalize(value)
    text = json.dumps(
        normalized, ensure_ascii=False, sort_keys=True, separators=(",", ":")
    )
    return text.encode("utf-8")


def canonical_text(value: Any) -> str:
    return canonical_bytes(value).decode("utf-8")


def from_canonical(data: bytes | str) -> Any:
    """Parse canonical JSON produced by :func:`canonical_bytes`."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return json.loads(data)

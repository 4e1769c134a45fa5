"""Canonical hashing for configs, so every output can state its provenance."""

from __future__ import annotations

import json

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def canonical_json(obj) -> str:
    """Sorted-key, whitespace-stripped JSON; the hashable form of a config."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(obj) -> str:
    """Hex FNV-1a hash of the canonicalized object."""
    return f"{fnv1a64(canonical_json(obj).encode('utf-8')):016x}"

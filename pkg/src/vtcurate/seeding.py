"""Deterministic seed derivation.

All randomness in the pipeline flows from one top-level 64-bit seed.  Stages
and per-item draws derive their own streams through ``split_seed``, which
hashes the seed together with string labels (stage name, clip id, ...).
Because derivation is a pure function of (seed, labels), results do not
depend on iteration order, sharding, or platform.

Split function: blake2b over the UTF-8 encoding of the seed and labels
joined by a unit separator (0x1f); the first 8 digest bytes, big-endian,
form the derived 64-bit value.
"""

from __future__ import annotations

import hashlib

_SEP = b"\x1f"
_TWO64 = float(2**64)


def split_seed(seed: int, *labels: str) -> int:
    """Derive a 64-bit sub-seed from ``seed`` and one or more labels."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(seed)).encode())
    for label in labels:
        h.update(_SEP)
        h.update(label.encode("utf-8"))
    return int.from_bytes(h.digest(), "big")


def unit_fraction(seed: int, *labels: str) -> float:
    """Deterministic draw in the open interval (0, 1) keyed by (seed, labels).

    The offset of 0.5 keeps the result strictly inside (0, 1) so callers may
    take logarithms without guarding.
    """
    return (split_seed(seed, *labels) + 0.5) / _TWO64

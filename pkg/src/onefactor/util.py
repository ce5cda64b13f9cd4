"""Small shared helpers."""

from __future__ import annotations

import hashlib


def derive_seed(*parts) -> int:
    """Derive a stable 63-bit seed from a base seed and context labels.

    Uses SHA-256 so derived streams are independent of Python's hash
    randomization and stable across versions and platforms.
    """
    payload = ":".join(str(p) for p in parts).encode("utf-8")
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "big") >> 1

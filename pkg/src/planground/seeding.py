"""Deterministic seed derivation.

Every random decision in the package flows from a single master seed through
`derive_seed`, so results never depend on evaluation order, process hashing,
or wall-clock state.
"""

import hashlib


def derive_seed(master: int, *parts: object) -> int:
    """Derive a stable 64-bit sub-seed from a master seed and a label path.

    Parts may be ints or strings; the same (master, parts) always yields the
    same value, across processes and platforms.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(master)).encode())
    for part in parts:
        h.update(b"\x1f")
        h.update(str(part).encode())
    return int.from_bytes(h.digest(), "big")

"""Shortest-LFSR synthesis over GF(2) (Berlekamp–Massey).

The linear complexity of a bit sequence is the length of the shortest
linear feedback shift register that generates it.  The implementation
keeps the sequence pre-multiplied by the current and previous connection
polynomials as Python integers, so each step is a couple of word-level
shift/xor operations instead of a coefficient loop.
"""

from __future__ import annotations

import numpy as np

__all__ = ["lfsr_complexity", "lfsr_complexity_int"]


def lfsr_complexity_int(seq: int, length: int) -> int:
    """Linear complexity of the first ``length`` bits of ``seq``.

    Bit ``i`` of ``seq`` (the coefficient of ``2**i``) is the ``i``-th
    sequence element.  The all-zero sequence has complexity 0.
    """
    if length != int(length) or length < 0:
        raise ValueError(f"length must be a non-negative integer, got {length!r}")
    if seq < 0:
        raise ValueError("sequence integer must be non-negative")
    fold_c = seq  # sequence times current connection polynomial, low bits consumed
    fold_b = seq  # same for the polynomial before the last length change
    deg = 0  # current LFSR length
    gap = 0  # distance since the last discrepancy
    for pos in range(int(length)):
        disc = fold_c & (1 << gap)
        gap += 1
        if disc:
            fold_c >>= gap
            gap = 0
            if 2 * deg <= pos:
                fold_b, fold_c = fold_c, fold_b
                deg = pos + 1 - deg
            fold_c ^= fold_b
    return deg


def lfsr_complexity(bits) -> int:
    """Linear complexity of a 0/1 sequence (list, tuple or ndarray)."""
    arr = np.asarray(bits, dtype=np.uint8)
    if arr.ndim != 1:
        raise ValueError("bits must form a 1-d sequence")
    if arr.size and arr.max() > 1:
        raise ValueError("bit values must be 0 or 1")
    packed = np.packbits(arr, bitorder="little")
    return lfsr_complexity_int(int.from_bytes(packed.tobytes(), "little"), arr.size)

"""Randomness extraction from the clock counts between detections.

The number of clock slots between consecutive detections, taken modulo
2, is the raw random bit (modulo 4 yields a basis/key bit pair).  The
raw bits carry a known bias towards odd counts; :func:`flip_debias`
removes it by alternating the bit assignment on every detection.  Before
any signal is admitted, a buffer of bits can be produced from dark
counts alone (:func:`bootstrap_buffer`) so the first basis choices never
depend on observable detections.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import DataError, GuardError
from .models import Distribution, SourceModel
from .sim import ClockConfig, ClockMode, EventStream, generate_free_running

__all__ = [
    "BitStream",
    "SymbolPair",
    "Modulus",
    "ExtractorConfig",
    "BalanceResult",
    "intervals",
    "extract_mod2",
    "extract_mod4",
    "symbol_from_interval",
    "flip_debias",
    "balance",
    "bootstrap_buffer",
]


@dataclass(frozen=True, eq=False)
class BitStream:
    """Immutable sequence of bits stored as a uint8 array of 0/1 values."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits)
        if arr.ndim != 1:
            raise DataError("bits must form a 1-d array")
        if arr.size and (arr.min() < 0 or arr.max() > 1):
            raise DataError("bit values must be 0 or 1")
        arr = arr.astype(np.uint8)
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    @classmethod
    def from_bits(cls, values) -> "BitStream":
        return cls(np.asarray(list(values), dtype=np.uint8))

    def __len__(self) -> int:
        return int(self.bits.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitStream):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    def ones(self) -> int:
        return int(np.count_nonzero(self.bits))

    def zeros(self) -> int:
        return len(self) - self.ones()


class SymbolPair(NamedTuple):
    """Basis and key bit extracted from one interval modulo 4.

    The basis bit is the high bit of ``interval mod 4`` and the key bit
    the low bit, so the mod-2 key bit is unchanged by mod-4 extraction.
    """

    basis_bit: int
    key_bit: int


class Modulus(str, Enum):
    MOD2 = "mod2"
    MOD4 = "mod4"


@dataclass(frozen=True)
class ExtractorConfig:
    include_first: bool = True
    modulus: Modulus = Modulus.MOD2
    k_bootstrap: int = 0

    def __post_init__(self):
        object.__setattr__(self, "modulus", Modulus(self.modulus))
        if self.k_bootstrap != int(self.k_bootstrap) or self.k_bootstrap < 0:
            raise ValueError(f"k_bootstrap must be a non-negative integer, got {self.k_bootstrap!r}")
        object.__setattr__(self, "k_bootstrap", int(self.k_bootstrap))


class BalanceResult(NamedTuple):
    """min/max ratio of the two bit counts; degenerate when one count is 0."""

    ratio: float
    degenerate: bool


def intervals(stream: EventStream, include_first: bool = True) -> np.ndarray:
    """Clock counts between consecutive detections.

    With ``include_first`` the first detection is differenced against
    clock tick 0, yielding one interval per detection; otherwise the
    first detection only starts the counter.
    """
    slots = stream.slots
    if include_first:
        gaps = np.diff(slots, prepend=np.uint64(0))
    else:
        gaps = np.diff(slots)
    if gaps.size and int(gaps.min()) < 1:
        raise DataError("event slots must be strictly increasing with first slot >= 1")
    return gaps


def _config(cfg: ExtractorConfig | None, modulus: Modulus) -> ExtractorConfig:
    if cfg is None:
        return ExtractorConfig(modulus=modulus)
    if cfg.modulus is not modulus:
        raise ValueError(f"extractor configured for {cfg.modulus.value}, not {modulus.value}")
    return cfg


def extract_mod2(stream: EventStream, cfg: ExtractorConfig | None = None) -> BitStream:
    """One bit per interval: the interval length modulo 2."""
    cfg = _config(cfg, Modulus.MOD2)
    gaps = intervals(stream, include_first=cfg.include_first)
    return BitStream((gaps & np.uint64(1)).astype(np.uint8))


def _mod4_arrays(gaps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    v = gaps % np.uint64(4)
    basis = (v >> np.uint64(1)).astype(np.uint8)
    key = (v & np.uint64(1)).astype(np.uint8)
    return basis, key


def extract_mod4(stream: EventStream, cfg: ExtractorConfig | None = None) -> list[SymbolPair]:
    """One (basis, key) pair per interval: the interval length modulo 4."""
    cfg = _config(cfg, Modulus.MOD4)
    gaps = intervals(stream, include_first=cfg.include_first)
    basis, key = _mod4_arrays(gaps)
    return [SymbolPair(int(b), int(k)) for b, k in zip(basis.tolist(), key.tolist())]


def symbol_from_interval(n: int) -> SymbolPair:
    """Basis/key pair for a single interval of ``n`` slots."""
    if n != int(n) or n < 1:
        raise ValueError(f"interval must be a positive integer, got {n!r}")
    v = int(n) % 4
    return SymbolPair(v >> 1, v & 1)


def flip_debias(raw: BitStream) -> BitStream:
    """Alternate the bit assignment on every detection: XOR position parity.

    Output bit ``t`` is ``raw[t] XOR (t mod 2)`` counting from ``t = 0``,
    which swaps the roles of even and odd intervals on every other
    detection and cancels the parity bias to first order.  The transform
    is an involution.
    """
    n = len(raw)
    mask = (np.arange(n, dtype=np.int64) & 1).astype(np.uint8)
    return BitStream(raw.bits ^ mask)


def balance(bits: BitStream) -> BalanceResult:
    """Ratio of the rarer to the more common bit value (1.0 = perfectly balanced)."""
    ones = bits.ones()
    zeros = len(bits) - ones
    if ones == 0 or zeros == 0:
        return BalanceResult(0.0, True)
    return BalanceResult(min(ones, zeros) / max(ones, zeros), False)


def bootstrap_buffer(clock: ClockConfig, k: int, seed) -> BitStream:
    """Produce ``k`` basis bits from dark counts alone (input light blocked).

    Simulates the blocked-input phase: dark counts arrive per clock slot
    with probability ``clock.dark_prob`` (dead time still applies); the
    ``k`` intervals between them, the first counted from tick 0, give
    ``k`` mod-2 bits that pre-fill the basis buffer before any signal is
    admitted.  Equivalent to ``extract_mod2`` on a free-running stream
    generated from a zero-photon source with the same dark probability,
    dead time and seed.
    """
    if k != int(k) or k < 0:
        raise ValueError(f"bootstrap length must be a non-negative integer, got {k!r}")
    k = int(k)
    if k == 0:
        return BitStream(np.empty(0, dtype=np.uint8))
    if clock.dark_prob <= 0.0:
        raise GuardError("bootstrap requires a positive dark-count probability")
    blocked_input = SourceModel(Distribution.POISSON, 0.0, 0.0)
    quiet_clock = ClockConfig(
        mode=ClockMode.FREE_RUNNING,
        dark_prob=clock.dark_prob,
        dead_slots=clock.dead_slots,
    )
    stream = generate_free_running(blocked_input, quiet_clock, k, seed)
    return extract_mod2(stream)

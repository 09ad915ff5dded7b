"""Monte Carlo generation of detection-event streams in clock-tick units.

Detectors are modelled at the resolution of a digital clock.  In
free-running mode every clock slot is an independent detection
opportunity; in gated mode the opportunity is a gate of
``slots_per_gate`` consecutive slots and a click lands on one slot
inside the gate according to an :class:`IntraGateProfile`.  Dark counts
are merged with photon clicks (a dark count is indistinguishable from a
photon click), and a dead time of ``dead_slots`` slots after each
accepted click suppresses later candidates.

Gap sampling uses inverse-CDF geometric draws rather than per-slot
Bernoulli trials; the two are distributionally identical and the tests
check the generated gap histogram against :func:`tickrng.models.window_pmf`.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DataError, GuardError
from .models import SourceModel, click_probability

__all__ = [
    "GENERATOR_ALGORITHM",
    "ClockMode",
    "ClockConfig",
    "IntraGateProfile",
    "EventStream",
    "generate_free_running",
    "generate_gated",
    "empirical_parity",
]

# Name of the pseudo-random bit generator backing every simulation; recorded in
# run manifests so outputs can be reproduced bit-exactly.
GENERATOR_ALGORITHM = "PCG64"

_MAX_TOPUP_BATCHES = 10_000


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


class ClockMode(str, Enum):
    FREE_RUNNING = "free_running"
    GATED = "gated"


@dataclass(frozen=True)
class ClockConfig:
    """Detector clock: mode, gate width, dark counts and dead time.

    ``dark_prob`` is the dark-count probability per detection opportunity
    (per slot in free-running mode, per gate in gated mode);
    ``dead_slots`` is the number of slots the detector stays blind after
    an accepted click.
    """

    mode: ClockMode
    slots_per_gate: int = 1
    dark_prob: float = 0.0
    dead_slots: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mode", ClockMode(self.mode))
        if self.slots_per_gate != int(self.slots_per_gate) or self.slots_per_gate < 1:
            raise ValueError(f"slots_per_gate must be a positive integer, got {self.slots_per_gate!r}")
        object.__setattr__(self, "slots_per_gate", int(self.slots_per_gate))
        if self.mode is ClockMode.FREE_RUNNING and self.slots_per_gate != 1:
            raise ValueError("free-running mode implies slots_per_gate == 1")
        if not (0.0 <= self.dark_prob < 1.0):
            raise ValueError(f"dark_prob must lie in [0, 1), got {self.dark_prob!r}")
        if self.dead_slots != int(self.dead_slots) or self.dead_slots < 0:
            raise ValueError(f"dead_slots must be a non-negative integer, got {self.dead_slots!r}")
        object.__setattr__(self, "dead_slots", int(self.dead_slots))


@dataclass(frozen=True)
class IntraGateProfile:
    """Distribution of the click slot within a gate (slots are 1-indexed).

    Construct via :meth:`uniform`, :meth:`fixed_slot` or :meth:`weighted`.
    """

    kind: str
    slot: int | None = None
    weights: tuple[float, ...] | None = None

    @classmethod
    def uniform(cls) -> "IntraGateProfile":
        return cls(kind="uniform")

    @classmethod
    def fixed_slot(cls, slot: int) -> "IntraGateProfile":
        if slot != int(slot) or slot < 1:
            raise ValueError(f"fixed slot must be a positive integer, got {slot!r}")
        return cls(kind="fixed", slot=int(slot))

    @classmethod
    def weighted(cls, weights) -> "IntraGateProfile":
        w = tuple(float(v) for v in weights)
        if not w:
            raise ValueError("weighted profile needs at least one weight")
        if any(v < 0.0 for v in w):
            raise ValueError("weights must be non-negative")
        if abs(sum(w) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {sum(w)!r}")
        return cls(kind="weighted", weights=w)

    def __post_init__(self):
        if self.kind not in ("uniform", "fixed", "weighted"):
            raise ValueError(f"unknown intra-gate profile kind {self.kind!r}")

    def _check(self, slots_per_gate: int) -> None:
        if self.kind == "fixed" and self.slot > slots_per_gate:
            raise ValueError(
                f"fixed slot {self.slot} outside gate of {slots_per_gate} slots"
            )
        if self.kind == "weighted" and len(self.weights) != slots_per_gate:
            raise ValueError(
                f"weighted profile has {len(self.weights)} weights for a gate of "
                f"{slots_per_gate} slots"
            )

    def sample(self, rng: np.random.Generator, size: int, slots_per_gate: int) -> np.ndarray:
        """Draw ``size`` intra-gate slot indices in ``1..slots_per_gate``."""
        self._check(slots_per_gate)
        if slots_per_gate == 1:
            return np.ones(size, dtype=np.int64)
        if self.kind == "uniform":
            return rng.integers(1, slots_per_gate + 1, size=size, dtype=np.int64)
        if self.kind == "fixed":
            return np.full(size, self.slot, dtype=np.int64)
        return rng.choice(np.arange(1, slots_per_gate + 1, dtype=np.int64), size=size, p=self.weights)

    def odd_slot_probability(self, slots_per_gate: int) -> float:
        """Probability that the intra-gate slot index is odd."""
        self._check(slots_per_gate)
        if self.kind == "uniform":
            return ((slots_per_gate + 1) // 2) / slots_per_gate
        if self.kind == "fixed":
            return float(self.slot % 2)
        return float(sum(self.weights[0::2]))


@dataclass(frozen=True, eq=False)
class EventStream:
    """Detection slot indices (64-bit unsigned, strictly increasing, first >= 1)."""

    slots: np.ndarray
    clock: ClockConfig

    def __post_init__(self):
        arr = np.asarray(self.slots)
        if arr.ndim != 1:
            raise DataError("event slots must be a 1-d array")
        if arr.size:
            if int(arr[0]) < 1:
                raise DataError(f"first event slot must be >= 1, got {int(arr[0])}")
            if np.any(arr[1:] <= arr[:-1]):
                bad = int(np.flatnonzero(arr[1:] <= arr[:-1])[0]) + 1
                raise DataError(f"event slots must be strictly increasing (entry {bad + 1})")
            if self.clock.dead_slots:
                gaps = np.diff(arr)
                if gaps.size and int(gaps.min()) <= self.clock.dead_slots:
                    raise DataError(
                        f"event gaps must exceed the dead time of {self.clock.dead_slots} slots"
                    )
        arr = arr.astype(np.uint64)
        arr.setflags(write=False)
        object.__setattr__(self, "slots", arr)

    def __len__(self) -> int:
        return int(self.slots.size)


def _opportunity_click_probability(source: SourceModel, clock: ClockConfig) -> float:
    """Merged photon-or-dark click probability per detection opportunity."""
    return 1.0 - (1.0 - click_probability(source)) * (1.0 - clock.dark_prob)


def generate_free_running(
    source: SourceModel,
    clock: ClockConfig,
    n_events: int,
    seed,
    slot_budget: int | None = None,
) -> EventStream:
    """Simulate ``n_events`` detections of a free-running detector.

    Every slot clicks independently with the merged photon-or-dark
    probability; after each click the next ``dead_slots`` slots are blind,
    so gaps are ``dead_slots`` plus a geometric draw.
    """
    if clock.mode is not ClockMode.FREE_RUNNING:
        raise ValueError("generate_free_running requires a free-running clock")
    if n_events != int(n_events) or n_events < 0:
        raise ValueError(f"n_events must be a non-negative integer, got {n_events!r}")
    n_events = int(n_events)
    if n_events == 0:
        return EventStream(np.empty(0, dtype=np.uint64), clock)
    p_slot = _opportunity_click_probability(source, clock)
    if p_slot <= 0.0:
        raise GuardError("per-slot click probability is 0; the stream would never terminate")
    expected_span = n_events * (1.0 / p_slot + clock.dead_slots)
    if expected_span > 2.0**62:
        raise GuardError("requested stream would overflow 64-bit slot indices")
    rng = _rng(seed)
    gaps = rng.geometric(p_slot, size=n_events).astype(np.int64)
    if clock.dead_slots:
        gaps[1:] += clock.dead_slots
    slots = np.cumsum(gaps)
    if slot_budget is not None and int(slots[-1]) > slot_budget:
        raise GuardError(
            f"stream spans {int(slots[-1])} slots, beyond the budget of {slot_budget}"
        )
    return EventStream(slots.astype(np.uint64), clock)


def generate_gated(
    source: SourceModel,
    clock: ClockConfig,
    profile: IntraGateProfile,
    n_events: int,
    seed,
) -> EventStream:
    """Simulate ``n_events`` detections of a gated detector.

    Each gate clicks with the merged photon-or-dark probability; the
    click's slot within the gate is drawn from ``profile``.  The absolute
    slot of a click in gate ``g`` at intra-gate slot ``i`` is
    ``(g - 1) * slots_per_gate + i``.  With a dead time, candidate clicks
    falling within ``dead_slots`` of the last accepted click are lost.
    """
    if clock.mode is not ClockMode.GATED:
        raise ValueError("generate_gated requires a gated clock")
    if n_events != int(n_events) or n_events < 0:
        raise ValueError(f"n_events must be a non-negative integer, got {n_events!r}")
    n_events = int(n_events)
    r = clock.slots_per_gate
    profile._check(r)
    if n_events == 0:
        return EventStream(np.empty(0, dtype=np.uint64), clock)
    p_gate = _opportunity_click_probability(source, clock)
    if p_gate <= 0.0:
        raise GuardError("per-gate click probability is 0; the stream would never terminate")
    if n_events * (1.0 / p_gate) * r > 2.0**62:
        raise GuardError("requested stream would overflow 64-bit slot indices")
    rng = _rng(seed)
    if clock.dead_slots == 0:
        gates = np.cumsum(rng.geometric(p_gate, size=n_events).astype(np.int64))
        intra = profile.sample(rng, n_events, r)
        slots = (gates - 1) * r + intra
        return EventStream(slots.astype(np.uint64), clock)

    accepted = np.empty(n_events, dtype=np.int64)
    have = 0
    last_gate = 0
    last_slot = -(clock.dead_slots + 1)
    for _ in range(_MAX_TOPUP_BATCHES):
        m = n_events - have
        gates = last_gate + np.cumsum(rng.geometric(p_gate, size=m).astype(np.int64))
        intra = profile.sample(rng, m, r)
        candidates = (gates - 1) * r + intra
        for s in candidates.tolist():
            if s - last_slot > clock.dead_slots:
                accepted[have] = s
                last_slot = s
                have += 1
                if have == n_events:
                    return EventStream(accepted.astype(np.uint64), clock)
        last_gate = int(gates[-1])
    raise GuardError(
        "dead time rejected too many candidate clicks; "
        f"gave up after {_MAX_TOPUP_BATCHES} batches"
    )


def empirical_parity(stream: EventStream) -> tuple[int, int]:
    """Count (even, odd) gaps between consecutive detections.

    The first detection is differenced against clock tick 0.
    """
    if len(stream) == 0:
        raise DataError("cannot compute parity of an empty event stream")
    gaps = np.diff(stream.slots, prepend=np.uint64(0))
    odd = int(np.count_nonzero(gaps & np.uint64(1)))
    return len(stream) - odd, odd

"""Statistical randomness battery (NIST SP 800-22 procedures).

Thirteen test procedures applied per run of ``run_len`` bits: Frequency,
BlockFrequency, the two CumulativeSums directions, Runs, LongestRuns,
Rank, DFFT (spectral), Universal, ApproximateEntropy, the two Serial
p-values, and LinearComplexity.  Block-length parameters default to the
battery's recommended values for runs of 10^6 bits and are recorded in
the report.  A procedure whose prerequisites fail on a run is reported
as not applicable, never as failed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import erfc, gammaincc, ndtr

from .errors import InsufficientDataError
from .extract import BitStream
from .lfsr import lfsr_complexity_int

__all__ = [
    "TestId",
    "TestEntry",
    "TestReport",
    "DEFAULT_PARAMETERS",
    "frequency_test",
    "block_frequency_test",
    "cumulative_sums_test",
    "runs_test",
    "longest_runs_test",
    "rank_test",
    "dft_test",
    "universal_test",
    "approximate_entropy_test",
    "serial_test",
    "linear_complexity_test",
    "run_battery",
]


class TestId(str, Enum):
    """The battery's thirteen procedures, in report order."""

    FREQUENCY = "Frequency"
    BLOCK_FREQUENCY = "BlockFrequency"
    CUSUM_FORWARD = "CusumForward"
    CUSUM_REVERSE = "CusumReverse"
    RUNS = "Runs"
    LONGEST_RUNS = "LongestRuns"
    RANK = "Rank"
    DFFT = "DFFT"
    UNIVERSAL = "Universal"
    APPROXIMATE_ENTROPY = "ApproximateEntropy"
    SERIAL_1 = "Serial1"
    SERIAL_2 = "Serial2"
    LINEAR_COMPLEXITY = "LinearComplexity"

    @property
    def index(self) -> int:
        return _TEST_INDEX[self]


_TEST_INDEX = {tid: i + 1 for i, tid in enumerate(TestId)}

DEFAULT_PARAMETERS = {
    "block_frequency_block_len": 128,
    "approximate_entropy_block_len": 10,
    "serial_block_len": 16,
    "linear_complexity_block_len": 500,
    "rank_matrix_dim": 32,
}


def _bit_array(bits) -> np.ndarray:
    if isinstance(bits, BitStream):
        return bits.bits
    arr = np.asarray(bits, dtype=np.uint8)
    if arr.ndim != 1:
        raise ValueError("bits must form a 1-d sequence")
    if arr.size and arr.max() > 1:
        raise ValueError("bit values must be 0 or 1")
    return arr


def _require(n: int, needed: int, what: str) -> None:
    if n < needed:
        raise InsufficientDataError(f"{what} needs at least {needed} bits, got {n}")


def frequency_test(bits, min_n: int = 100) -> float:
    """Monobit test: p = erfc(|S| / sqrt(2 n)) with S the +/-1 sum."""
    x = _bit_array(bits)
    n = x.size
    _require(n, max(min_n, 1), "frequency test")
    s = 2.0 * int(x.sum()) - n
    return float(erfc(abs(s) / math.sqrt(2.0 * n)))


def block_frequency_test(bits, block_len: int = 128, min_n: int = 100) -> float:
    """Proportion of ones within disjoint blocks, chi-square against 1/2."""
    x = _bit_array(bits)
    n = x.size
    _require(n, max(min_n, block_len), "block frequency test")
    nblocks = n // block_len
    pi = x[: nblocks * block_len].reshape(nblocks, block_len).mean(axis=1)
    chi2 = 4.0 * block_len * float(((pi - 0.5) ** 2).sum())
    return float(gammaincc(nblocks / 2.0, chi2 / 2.0))


def _cusum_pvalue(n: int, z: int) -> float:
    sq = math.sqrt(n)
    lo1 = math.floor((-n / z + 1) / 4)
    lo2 = math.floor((-n / z - 3) / 4)
    hi = math.floor((n / z - 1) / 4)
    k1 = np.arange(lo1, hi + 1, dtype=np.float64)
    k2 = np.arange(lo2, hi + 1, dtype=np.float64)
    s1 = float((ndtr((4 * k1 + 1) * z / sq) - ndtr((4 * k1 - 1) * z / sq)).sum())
    s2 = float((ndtr((4 * k2 + 3) * z / sq) - ndtr((4 * k2 + 1) * z / sq)).sum())
    return min(max(1.0 - s1 + s2, 0.0), 1.0)


def cumulative_sums_test(bits, direction: str = "forward", min_n: int = 100) -> float:
    """Maximal excursion of the +/-1 partial-sum walk, forward or reverse."""
    if direction not in ("forward", "reverse"):
        raise ValueError(f"direction must be 'forward' or 'reverse', got {direction!r}")
    x = _bit_array(bits)
    n = x.size
    _require(n, max(min_n, 1), "cumulative sums test")
    steps = 2 * x.astype(np.int64) - 1
    if direction == "reverse":
        steps = steps[::-1]
    z = int(np.abs(np.cumsum(steps)).max())
    return _cusum_pvalue(n, z)


def runs_test(bits, min_n: int = 100) -> float:
    """Total number of runs; returns 0.0 when the frequency prerequisite fails."""
    x = _bit_array(bits)
    n = x.size
    _require(n, max(min_n, 2), "runs test")
    pi = float(x.mean())
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        return 0.0
    v = 1 + int(np.count_nonzero(x[1:] != x[:-1]))
    num = abs(v - 2.0 * n * pi * (1.0 - pi))
    den = 2.0 * math.sqrt(2.0 * n) * pi * (1.0 - pi)
    return float(erfc(num / den))


_LONGEST_RUNS_TIERS = (
    # (minimum n, block length M, lowest class, highest class, class probabilities)
    (750_000, 10_000, 10, 16, (0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727)),
    (6_272, 128, 4, 9, (0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124)),
    (128, 8, 1, 4, (0.2148, 0.3672, 0.2305, 0.1875)),
)


def longest_runs_test(bits) -> float:
    """Distribution of the longest run of ones per block, chi-square."""
    x = _bit_array(bits)
    n = x.size
    if n < _LONGEST_RUNS_TIERS[-1][0]:
        raise InsufficientDataError(f"longest runs test needs at least 128 bits, got {n}")
    for min_n, block_len, lo, hi, pi in _LONGEST_RUNS_TIERS:
        if n >= min_n:
            break
    nblocks = n // block_len
    blocks = x[: nblocks * block_len].reshape(nblocks, block_len)
    padded = np.zeros((nblocks, block_len + 2), dtype=np.int8)
    padded[:, 1:-1] = blocks
    flat = padded.ravel()
    d = np.diff(flat)
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    longest = np.zeros(nblocks, dtype=np.int64)
    np.maximum.at(longest, starts // (block_len + 2), ends - starts)
    clipped = np.clip(longest, lo, hi)
    counts = np.bincount(clipped - lo, minlength=hi - lo + 1)
    expected = nblocks * np.asarray(pi)
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    return float(gammaincc((len(pi) - 1) / 2.0, chi2 / 2.0))


def _gf2_rank(rows: list[int]) -> int:
    pivots: dict[int, int] = {}
    rank = 0
    for r in rows:
        while r:
            h = r.bit_length() - 1
            if h in pivots:
                r ^= pivots[h]
            else:
                pivots[h] = r
                rank += 1
                break
    return rank


def _rank_probability(m: int, r: int) -> float:
    """Fraction of random m x m matrices over GF(2) with rank exactly r."""
    value = 2.0 ** (r * (2 * m - r) - m * m)
    for i in range(r):
        value *= (1.0 - 2.0 ** (i - m)) ** 2 / (1.0 - 2.0 ** (i - r))
    return value


def rank_test(bits, matrix_dim: int = 32) -> float:
    """Ranks of disjoint matrix_dim x matrix_dim binary matrices over GF(2)."""
    x = _bit_array(bits)
    n = x.size
    m = matrix_dim
    block = m * m
    nmat = n // block
    if nmat < 38:
        raise InsufficientDataError(
            f"rank test needs at least {38 * block} bits for 38 matrices, got {n}"
        )
    powers = (1 << np.arange(m - 1, -1, -1)).astype(np.int64)
    rows = (x[: nmat * block].reshape(nmat * m, m) @ powers).reshape(nmat, m)
    ranks = np.fromiter(
        (_gf2_rank(mat) for mat in rows.tolist()), dtype=np.int64, count=nmat
    )
    p_full = _rank_probability(m, m)
    p_one_less = _rank_probability(m, m - 1)
    p_rest = 1.0 - p_full - p_one_less
    f_full = int(np.count_nonzero(ranks == m))
    f_one_less = int(np.count_nonzero(ranks == m - 1))
    f_rest = nmat - f_full - f_one_less
    chi2 = (
        (f_full - p_full * nmat) ** 2 / (p_full * nmat)
        + (f_one_less - p_one_less * nmat) ** 2 / (p_one_less * nmat)
        + (f_rest - p_rest * nmat) ** 2 / (p_rest * nmat)
    )
    return float(gammaincc(1.0, chi2 / 2.0))


def dft_test(bits, min_n: int = 1000) -> float:
    """Fraction of below-threshold spectral peaks against the expected 95%."""
    x = _bit_array(bits)
    n = x.size
    _require(n, max(min_n, 2), "spectral test")
    signal = 2.0 * x.astype(np.float64) - 1.0
    mags = np.abs(np.fft.rfft(signal))[: n // 2]
    threshold = math.sqrt(math.log(20.0) * n)
    below = int(np.count_nonzero(mags < threshold))
    expected = 0.95 * n / 2.0
    d = (below - expected) / math.sqrt(n * 0.95 * 0.05 / 4.0)
    return float(erfc(abs(d) / math.sqrt(2.0)))


_UNIVERSAL_TABLE = {
    # block length L -> (expected value, variance)
    6: (5.2177052, 2.954),
    7: (6.1962507, 3.125),
    8: (7.1836656, 3.238),
    9: (8.1764248, 3.311),
    10: (9.1723243, 3.356),
    11: (10.170032, 3.384),
    12: (11.168765, 3.401),
    13: (12.168070, 3.410),
    14: (13.167693, 3.416),
    15: (14.167488, 3.419),
    16: (15.167379, 3.421),
}

_UNIVERSAL_THRESHOLDS = (
    (1_059_061_760, 16),
    (496_435_200, 15),
    (231_669_760, 14),
    (107_560_960, 13),
    (49_643_520, 12),
    (22_753_280, 11),
    (10_342_400, 10),
    (4_654_080, 9),
    (2_068_480, 8),
    (904_960, 7),
    (387_840, 6),
)


def universal_test(bits) -> float:
    """Maurer's universal statistic: mean log2 distance to the previous
    occurrence of each non-overlapping L-bit block."""
    x = _bit_array(bits)
    n = x.size
    if n < _UNIVERSAL_THRESHOLDS[-1][0]:
        raise InsufficientDataError(
            f"universal test needs at least {_UNIVERSAL_THRESHOLDS[-1][0]} bits, got {n}"
        )
    for threshold, block_len in _UNIVERSAL_THRESHOLDS:
        if n >= threshold:
            break
    q = 10 * (1 << block_len)
    k = n // block_len - q
    powers = (1 << np.arange(block_len - 1, -1, -1)).astype(np.int64)
    blocks = x[: (q + k) * block_len].reshape(q + k, block_len) @ powers
    positions = np.arange(1, q + k + 1, dtype=np.int64)
    order = np.argsort(blocks, kind="stable")
    sorted_blocks = blocks[order]
    sorted_pos = positions[order]
    prev = np.empty_like(sorted_pos)
    prev[0] = 0
    same = sorted_blocks[1:] == sorted_blocks[:-1]
    prev[1:] = np.where(same, sorted_pos[:-1], 0)
    dist = (sorted_pos - prev)[sorted_pos > q]
    fn = float(np.log2(dist.astype(np.float64)).sum()) / k
    expected, variance = _UNIVERSAL_TABLE[block_len]
    c = 0.7 - 0.8 / block_len + (4.0 + 32.0 / block_len) * k ** (-3.0 / block_len) / 15.0
    sigma = c * math.sqrt(variance / k)
    return float(erfc(abs(fn - expected) / (math.sqrt(2.0) * sigma)))


def _overlapping_counts(x: np.ndarray, m: int) -> np.ndarray:
    """Counts of all 2^m overlapping m-bit patterns with circular extension."""
    ext = np.concatenate([x, x[: m - 1]]) if m > 1 else x
    powers = (1 << np.arange(m - 1, -1, -1)).astype(np.int64)
    values = sliding_window_view(ext, m) @ powers
    return np.bincount(values, minlength=1 << m)


def approximate_entropy_test(bits, block_len: int = 10, min_n: int = 100) -> float:
    """Compares frequencies of overlapping m and m+1 bit patterns."""
    if block_len < 1:
        raise ValueError("block length must be >= 1")
    x = _bit_array(bits)
    n = x.size
    _require(n, max(min_n, 1 << (block_len + 5)), "approximate entropy test")
    phi = []
    for m in (block_len, block_len + 1):
        counts = _overlapping_counts(x, m)
        probs = counts[counts > 0] / n
        phi.append(float((probs * np.log(probs)).sum()))
    apen = phi[0] - phi[1]
    chi2 = 2.0 * n * (math.log(2.0) - apen)
    return float(gammaincc(float(1 << (block_len - 1)), chi2 / 2.0))


def _psi_squared(x: np.ndarray, m: int) -> float:
    if m <= 0:
        return 0.0
    counts = _overlapping_counts(x, m).astype(np.float64)
    n = x.size
    return float((counts**2).sum() * (1 << m) / n - n)


def serial_test(bits, block_len: int = 16, min_n: int = 100) -> tuple[float, float]:
    """First- and second-difference psi-square statistics of overlapping patterns."""
    if block_len < 3:
        raise ValueError("block length must be >= 3")
    x = _bit_array(bits)
    n = x.size
    _require(n, max(min_n, 1 << (block_len + 2)), "serial test")
    psi_m = _psi_squared(x, block_len)
    psi_m1 = _psi_squared(x, block_len - 1)
    psi_m2 = _psi_squared(x, block_len - 2)
    d1 = psi_m - psi_m1
    d2 = psi_m - 2.0 * psi_m1 + psi_m2
    p1 = float(gammaincc(float(1 << (block_len - 2)), d1 / 2.0))
    p2 = float(gammaincc(float(1 << (block_len - 3)), d2 / 2.0))
    return p1, p2


# Exact class probabilities for the complexity deviation T: the geometric
# distribution of linear complexity around M/2 gives 1/96, 1/32, 1/8 below
# and 1/4, 1/16, 1/48 above the central 1/2.
_LC_CLASS_PROBS = np.array(
    [1 / 96, 1 / 32, 1 / 8, 1 / 2, 1 / 4, 1 / 16, 1 / 48]
)
_LC_CLASS_BOUNDS = np.array([-2.5, -1.5, -0.5, 0.5, 1.5, 2.5])


def linear_complexity_test(bits, block_len: int = 500) -> float:
    """Linear complexity of disjoint blocks, chi-square over 7 deviation classes."""
    x = _bit_array(bits)
    n = x.size
    if n < 200 * block_len:
        raise InsufficientDataError(
            f"linear complexity test needs at least {200 * block_len} bits, got {n}"
        )
    nblocks = n // block_len
    mu = (
        block_len / 2.0
        + (9.0 + (-1.0) ** (block_len + 1)) / 36.0
        - (block_len / 3.0 + 2.0 / 9.0) / 2.0**block_len
    )
    sign = 1.0 if block_len % 2 == 0 else -1.0
    packed = np.packbits(x[: nblocks * block_len].reshape(nblocks, block_len), axis=1, bitorder="little")
    t_values = np.empty(nblocks, dtype=np.float64)
    for i, row in enumerate(packed):
        complexity = lfsr_complexity_int(int.from_bytes(row.tobytes(), "little"), block_len)
        t_values[i] = sign * (complexity - mu) + 2.0 / 9.0
    counts = np.bincount(np.searchsorted(_LC_CLASS_BOUNDS, t_values, side="left"), minlength=7)
    expected = nblocks * _LC_CLASS_PROBS
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    return float(gammaincc(3.0, chi2 / 2.0))


@dataclass(frozen=True)
class TestEntry:
    """One procedure's outcome on one run."""

    test_id: TestId
    run_index: int
    p_value: float
    passed: bool
    applicable: bool = True

    @property
    def test_index(self) -> int:
        return self.test_id.index


@dataclass
class TestReport:
    """Battery outcome: one entry per (procedure, run), plus the parameters used."""

    entries: list[TestEntry]
    alpha: float
    run_len: int
    parameters: dict = field(default_factory=dict)

    def failures(self) -> list[TestEntry]:
        return [e for e in self.entries if e.applicable and not e.passed]

    @property
    def all_passed(self) -> bool:
        return not self.failures()

    def sorted_entries(self) -> list[TestEntry]:
        return sorted(self.entries, key=lambda e: (e.test_index, e.run_index))


def _run_procedures(x: np.ndarray, params: dict) -> list[tuple[TestId, float | None]]:
    out: list[tuple[TestId, float | None]] = []

    def attempt(test_id: TestId, fn) -> None:
        try:
            out.append((test_id, fn()))
        except InsufficientDataError:
            out.append((test_id, None))

    attempt(TestId.FREQUENCY, lambda: frequency_test(x))
    attempt(
        TestId.BLOCK_FREQUENCY,
        lambda: block_frequency_test(x, block_len=params["block_frequency_block_len"]),
    )
    attempt(TestId.CUSUM_FORWARD, lambda: cumulative_sums_test(x, "forward"))
    attempt(TestId.CUSUM_REVERSE, lambda: cumulative_sums_test(x, "reverse"))
    attempt(TestId.RUNS, lambda: runs_test(x))
    attempt(TestId.LONGEST_RUNS, lambda: longest_runs_test(x))
    attempt(TestId.RANK, lambda: rank_test(x, matrix_dim=params["rank_matrix_dim"]))
    attempt(TestId.DFFT, lambda: dft_test(x))
    attempt(TestId.UNIVERSAL, lambda: universal_test(x))
    attempt(
        TestId.APPROXIMATE_ENTROPY,
        lambda: approximate_entropy_test(x, block_len=params["approximate_entropy_block_len"]),
    )
    try:
        p1, p2 = serial_test(x, block_len=params["serial_block_len"])
        out.append((TestId.SERIAL_1, p1))
        out.append((TestId.SERIAL_2, p2))
    except InsufficientDataError:
        out.append((TestId.SERIAL_1, None))
        out.append((TestId.SERIAL_2, None))
    attempt(
        TestId.LINEAR_COMPLEXITY,
        lambda: linear_complexity_test(x, block_len=params["linear_complexity_block_len"]),
    )
    return out


def run_battery(bits, alpha: float = 0.01, run_len: int = 1_000_000, **overrides) -> TestReport:
    """Partition ``bits`` into disjoint runs and apply all 13 procedures to each.

    Keyword overrides replace entries of :data:`DEFAULT_PARAMETERS`.  A
    trailing remainder shorter than ``run_len`` is ignored.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    if run_len < 1:
        raise ValueError(f"run_len must be positive, got {run_len!r}")
    params = dict(DEFAULT_PARAMETERS)
    unknown = set(overrides) - set(params)
    if unknown:
        raise ValueError(f"unknown battery parameters: {sorted(unknown)}")
    params.update(overrides)
    x = _bit_array(bits)
    runs = x.size // run_len
    if runs < 1:
        raise InsufficientDataError(
            f"battery needs at least one run of {run_len} bits, got {x.size}"
        )
    entries: list[TestEntry] = []
    for run_index in range(runs):
        segment = x[run_index * run_len : (run_index + 1) * run_len]
        for test_id, p in _run_procedures(segment, params):
            if p is None:
                entries.append(
                    TestEntry(test_id, run_index, float("nan"), passed=False, applicable=False)
                )
            else:
                entries.append(TestEntry(test_id, run_index, p, passed=p >= alpha))
    return TestReport(entries=entries, alpha=alpha, run_len=run_len, parameters=params)

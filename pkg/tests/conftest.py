"""Shared fixtures: reference bit material and goodness-of-fit helpers."""

import math

import numpy as np
import pytest

from tickrng.extract import BitStream
from tickrng.models import window_pmf
from tickrng.suite import TestEntry, TestId, TestReport, run_battery

# report types, not test classes, despite their names
TestId.__test__ = False
TestEntry.__test__ = False
TestReport.__test__ = False

# Seed of the reference pseudo-random stream used for p-value uniformity
# checks; chosen once, never tuned per test.
REFERENCE_SEED = 20260817
REFERENCE_RUNS = 100
RUN_LEN = 1_000_000


def pytest_addoption(parser):
    parser.addoption(
        "--full-scale",
        action="store_true",
        default=False,
        help="also run the 20-run full-scale battery campaign",
    )


@pytest.fixture(scope="session")
def full_scale(request) -> bool:
    return request.config.getoption("--full-scale")


@pytest.fixture(scope="session")
def reference_report() -> TestReport:
    """Battery report over 100 disjoint million-bit runs of a PCG64 stream.

    Computed once per session (~40 s); the per-test p-value populations
    feed the uniformity and pass-rate checks.
    """
    rng = np.random.Generator(np.random.PCG64(REFERENCE_SEED))
    bits = BitStream(rng.integers(0, 2, REFERENCE_RUNS * RUN_LEN, dtype=np.uint8))
    return run_battery(bits, run_len=RUN_LEN)


def geometric_gof_pvalue(gaps, p: float, max_n: int = 50) -> float:
    """Chi-square goodness of fit of integer gaps against the geometric pmf.

    Bins are 1..max_n plus a merged tail; adjacent cells are pooled until
    every expected count is at least 5.
    """
    from scipy.stats import chi2

    gaps = np.asarray(gaps)
    total = gaps.size
    observed = [np.count_nonzero(gaps == n) for n in range(1, max_n + 1)]
    observed.append(int(np.count_nonzero(gaps > max_n)))
    expected = [total * window_pmf(p, n) for n in range(1, max_n + 1)]
    expected.append(total * (1.0 - p) ** max_n)

    pooled_obs, pooled_exp = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= 5.0:
            pooled_obs.append(acc_o)
            pooled_exp.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0.0 and pooled_exp:
        pooled_obs[-1] += acc_o
        pooled_exp[-1] += acc_e
    if len(pooled_exp) < 2:
        raise ValueError("too few cells with expected count >= 5 for a chi-square test")
    chi2_stat = sum((o - e) ** 2 / e for o, e in zip(pooled_obs, pooled_exp))
    return float(chi2.sf(chi2_stat, df=len(pooled_exp) - 1))


def binomial_sigma(p: float, n: int) -> float:
    """Standard deviation of an empirical fraction of n Bernoulli(p) draws."""
    return math.sqrt(p * (1.0 - p) / n)

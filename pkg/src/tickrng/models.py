"""Closed-form statistics for single-photon detection windows.

A source is characterised by its photon-number distribution (Poissonian
or thermal), the mean photon number ``mu`` per detection window, and the
detector efficiency ``eta``.  Loss in front of a non-resolving detector
keeps a Poissonian source Poissonian and a thermal source thermal, with
mean ``mu * eta`` — so every detection probability depends on the source
only through that product.

Detection windows click independently of each other, hence the index of
the first clicking window is geometrically distributed and its parity is
biased towards "odd": the parity split is the pair of alternating tail
sums of the geometric distribution, which collapse to the closed forms
implemented in :func:`parity_probabilities`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

__all__ = [
    "Distribution",
    "SourceModel",
    "AnalyticBias",
    "photon_pmf",
    "click_probability",
    "window_pmf",
    "parity_probabilities",
    "balance_ratio",
]


class Distribution(str, Enum):
    """Photon-number statistics family of a light source."""

    POISSON = "poisson"
    THERMAL = "thermal"


@dataclass(frozen=True)
class SourceModel:
    """Photon source feeding a threshold (non photon-number-resolving) detector."""

    distribution: Distribution
    mu: float
    eta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "distribution", Distribution(self.distribution))
        mu = float(self.mu)
        if not (math.isfinite(mu) and mu >= 0.0):
            raise ValueError(f"mean photon number must be finite and >= 0, got {self.mu!r}")
        eta = float(self.eta)
        if not (0.0 <= eta <= 1.0):
            raise ValueError(f"detection efficiency must lie in [0, 1], got {self.eta!r}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "eta", eta)

    @property
    def effective_mean(self) -> float:
        """Mean detected photon number per window, ``mu * eta``."""
        return self.mu * self.eta


@dataclass(frozen=True)
class AnalyticBias:
    """Parity split of the index of the first clicking detection window."""

    p_even: float
    p_odd: float

    def __post_init__(self):
        if not (0.0 <= self.p_even <= 1.0 and 0.0 <= self.p_odd <= 1.0):
            raise ValueError("parity probabilities must lie in [0, 1]")
        if abs(self.p_even + self.p_odd - 1.0) > 1e-9:
            raise ValueError("parity probabilities must sum to 1")


def photon_pmf(source: SourceModel, n: int) -> float:
    """Probability of exactly ``n`` photons in one detection window before loss.

    Poissonian: ``exp(-mu) mu^n / n!``.  Thermal: ``mu^n / (mu+1)^(n+1)``.
    """
    if n != int(n) or n < 0:
        raise ValueError(f"photon number must be a non-negative integer, got {n!r}")
    n = int(n)
    mu = source.mu
    if mu == 0.0:
        return 1.0 if n == 0 else 0.0
    if source.distribution is Distribution.POISSON:
        return math.exp(n * math.log(mu) - mu - math.lgamma(n + 1))
    return math.exp(n * math.log(mu) - (n + 1) * math.log1p(mu))


def click_probability(source: SourceModel) -> float:
    """Probability that at least one photon is detected in one window.

    Poissonian: ``1 - exp(-mu*eta)``.  Thermal: ``mu*eta / (mu*eta + 1)``
    (a thermal state after Bernoulli loss ``eta`` is thermal with mean
    ``mu*eta``, so this is its probability of one or more photons).
    """
    me = source.effective_mean
    if source.distribution is Distribution.POISSON:
        return -math.expm1(-me)
    return me / (me + 1.0)


def window_pmf(p: float, n: int) -> float:
    """Probability that the first clicking window is window ``n`` (1-indexed).

    Windows click independently with probability ``p``, so the index is
    geometric: ``(1-p)^(n-1) * p``.
    """
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"click probability must lie in [0, 1], got {p!r}")
    if n != int(n) or n < 1:
        raise ValueError(f"window index must be a positive integer, got {n!r}")
    return (1.0 - p) ** (int(n) - 1) * p


def parity_probabilities(source: SourceModel) -> AnalyticBias:
    """Closed-form probability that the first clicking window index is even/odd.

    Poissonian: ``P_EVEN = 1/(1+exp(mu*eta))``, ``P_ODD = 1/(1+exp(-mu*eta))``.
    Thermal:    ``P_EVEN = 1/(mu*eta+2)``,     ``P_ODD = (mu*eta+1)/(mu*eta+2)``.
    Both reduce to the alternating tail sums of :func:`window_pmf` at the
    source's click probability, and to (0.5, 0.5) at ``mu*eta = 0``.
    """
    me = source.effective_mean
    if source.distribution is Distribution.POISSON:
        p_even = 1.0 / (1.0 + math.exp(me))
        p_odd = 1.0 / (1.0 + math.exp(-me))
    else:
        p_even = 1.0 / (me + 2.0)
        p_odd = (me + 1.0) / (me + 2.0)
    return AnalyticBias(p_even=p_even, p_odd=p_odd)


def balance_ratio(p: float) -> float:
    """Predicted zeros/ones balance ``P_EVEN / P_ODD = 1 - p`` of raw parity bits.

    ``p`` is the per-window click probability; at ``p = 1`` every gap is a
    single window, all bits are odd, and the ratio degenerates to 0.
    """
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"click probability must lie in [0, 1], got {p!r}")
    return 1.0 - p

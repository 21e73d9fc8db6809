"""Photon-number distributions of the source, the lossy channel and the PNS attack.

All probability tables are built with multiplicative recurrences
(``p[n] = p[n-1] * mean / n``), never with factorials, so they stay accurate
for the small mean photon numbers that matter in practice.  Every table is
truncated at ``n_max`` and carries the probability of ``n > n_max`` as an
explicit ``tail_mass``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from .errors import InvalidParameterError

NORMALIZATION_TOL = 1e-12
TAIL_CUTOFF = 1e-15
MIN_NMAX = 16


@dataclass(frozen=True)
class ChannelParams:
    """Source mean photon number ``mu`` and single-photon transmission ``eta``."""

    mu: float
    eta: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mu) and self.mu > 0):
            raise InvalidParameterError(f"mu must be > 0, got {self.mu!r}")
        if not (math.isfinite(self.eta) and 0 < self.eta <= 1):
            raise InvalidParameterError(f"eta must lie in (0, 1], got {self.eta!r}")


@dataclass(frozen=True)
class PhotonDistribution:
    """Truncated pmf over photon numbers ``0..n_max`` plus the mass beyond ``n_max``.

    Attributes
    ----------
    probs : numpy.ndarray
        ``probs[n]`` is the probability of exactly ``n`` photons.
    tail_mass : float
        Probability of more than ``n_max`` photons.  Kept separate from
        ``probs[n_max]`` so that prefix-sum comparisons stay exact.
    mean_label : float, optional
        Nominal mean, for display only.
    """

    probs: np.ndarray
    tail_mass: float
    mean_label: Optional[float] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        probs = np.array(self.probs, dtype=float)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "tail_mass", float(self.tail_mass))
        if probs.ndim != 1 or probs.size < 3:
            raise InvalidParameterError("probs must be one-dimensional with n_max >= 2")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise InvalidParameterError("probabilities must be finite and nonnegative")
        if self.tail_mass < 0:
            raise InvalidParameterError(f"tail_mass must be >= 0, got {self.tail_mass}")
        total = probs.sum() + self.tail_mass
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise InvalidParameterError(f"distribution not normalized: total={total!r}")

    @property
    def n_max(self) -> int:
        return self.probs.size - 1

    def __len__(self) -> int:
        return self.probs.size

    def __getitem__(self, n: int) -> float:
        return float(self.probs[n])

    def total(self) -> float:
        return float(self.probs.sum() + self.tail_mass)

    def mix(self, other: "PhotonDistribution", weight: float) -> "PhotonDistribution":
        """Return ``weight * self + (1 - weight) * other`` (same ``n_max`` required)."""
        if other.n_max != self.n_max:
            raise InvalidParameterError("cannot mix distributions with different n_max")
        if not 0 <= weight <= 1:
            raise InvalidParameterError("mixing weight must lie in [0, 1]")
        return PhotonDistribution(
            weight * self.probs + (1 - weight) * other.probs,
            weight * self.tail_mass + (1 - weight) * other.tail_mass,
        )


def _check_mean(mean: float) -> None:
    if not (math.isfinite(mean) and mean > 0):
        raise InvalidParameterError(f"mean must be > 0, got {mean!r}")


def _check_nmax(n_max: int) -> None:
    if int(n_max) != n_max or n_max < 2:
        raise InvalidParameterError(f"n_max must be an integer >= 2, got {n_max!r}")


def poisson_terms(mean: float, upto: int) -> np.ndarray:
    """Poisson pmf values for ``n = 0..upto`` by forward recurrence."""
    terms = np.empty(upto + 1)
    term = math.exp(-mean)
    terms[0] = term
    for n in range(1, upto + 1):
        term *= mean / n
        terms[n] = term
    return terms


def poisson_upper_tail(mean: float, k: int) -> float:
    """``P(X >= k)`` for ``X ~ Poisson(mean)``, summed directly over the tail.

    Summing the (all positive) tail terms avoids the cancellation in
    ``1 - cdf`` and stays accurate when the tail is tiny.
    """
    if k <= 0:
        return 1.0
    term = math.exp(-mean)
    for n in range(1, k + 1):
        term *= mean / n
    total = 0.0
    n = k
    while True:
        total += term
        n += 1
        term *= mean / n
        if n > mean and term <= total * 1e-17:
            break
        if term == 0.0:
            break
    return total


def choose_nmax(mu: float) -> int:
    """Smallest ``n`` with ``P(X > n) < 1e-15`` for ``X ~ Poisson(mu)``, at least 16."""
    _check_mean(mu)
    n = MIN_NMAX
    while poisson_upper_tail(mu, n + 1) >= TAIL_CUTOFF:
        n += 1
    return n


def poisson(mean: float, n_max: int) -> PhotonDistribution:
    """Poisson(``mean``) truncated at ``n_max``."""
    _check_mean(mean)
    _check_nmax(n_max)
    probs = poisson_terms(mean, n_max)
    tail = poisson_upper_tail(mean, n_max + 1)
    return PhotonDistribution(probs, tail, mean_label=mean)


def _check_fraction(b: float) -> None:
    if not (math.isfinite(b) and 0 <= b <= 1):
        raise InvalidParameterError(f"blocking fraction must lie in [0, 1], got {b!r}")


def pns_distribution(mu: float, b: float, n_max: int) -> PhotonDistribution:
    """Delivered statistics of the base PNS attack blocking a fraction ``b`` of singles.

    Multi-photon pulses lose exactly one photon; single-photon pulses are
    blocked with probability ``b``; vacuum passes.
    """
    _check_mean(mu)
    _check_fraction(b)
    _check_nmax(n_max)
    source = poisson_terms(mu, n_max + 1)
    probs = np.empty(n_max + 1)
    probs[0] = source[0] + b * source[1]
    probs[1] = (1 - b) * source[1] + source[2]
    probs[2:] = source[3:]
    tail = poisson_upper_tail(mu, n_max + 2)
    return PhotonDistribution(probs, tail)


def base_pns_map(n: int, b: float) -> dict[int, float]:
    """Per-pulse output distribution of the base PNS attack for an ``n``-photon pulse."""
    if n < 0:
        raise InvalidParameterError(f"photon number must be >= 0, got {n}")
    if n == 0:
        return {0: 1.0}
    if n == 1:
        return {0: b, 1: 1.0 - b}
    return {n - 1: 1.0}


def pushforward_map(
    dist: PhotonDistribution, kernel: Callable[[int], Mapping[int, float]]
) -> PhotonDistribution:
    """Push ``dist`` through a per-photon-number kernel, by brute-force summation.

    Output mass landing above ``n_max`` is added to the tail, as is the input
    tail (kernels handled here never move mass upward).
    """
    out = np.zeros(dist.n_max + 1)
    tail = dist.tail_mass
    for n, p in enumerate(dist.probs):
        for m, q in kernel(n).items():
            if m <= dist.n_max:
                out[m] += p * q
            else:
                tail += p * q
    return PhotonDistribution(out, tail)


def binomial_thinning(dist: PhotonDistribution, retention: float) -> PhotonDistribution:
    """Each photon survives independently with probability ``retention``.

    Evaluated as an explicit convolution with binomial weights over ``0..n_max``;
    the input tail is carried into the output tail.
    """
    if not 0 <= retention <= 1:
        raise InvalidParameterError(f"retention must lie in [0, 1], got {retention!r}")
    out = np.zeros(dist.n_max + 1)
    for n, p in enumerate(dist.probs):
        for m in range(n + 1):
            out[m] += p * math.comb(n, m) * retention**m * (1 - retention) ** (n - m)
    return PhotonDistribution(out, dist.tail_mass)

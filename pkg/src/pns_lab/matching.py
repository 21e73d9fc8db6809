"""Vacuum matching, the difference profile and the redistribution feasibility test."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .distributions import ChannelParams, PhotonDistribution, poisson, poisson_upper_tail
from .errors import FullBlockingRegimeError, OutOfRangeError

log = logging.getLogger(__name__)

SIGN_TOL = 1e-12
INDUCTION_ETA_MAX = 0.75


def b_match(params: ChannelParams) -> float:
    """Blocking fraction that equalizes the vacuum probability with the lossy channel.

    Raises
    ------
    FullBlockingRegimeError
        If the value exceeds one, i.e. ``eta < 1 - ln(1 + mu) / mu``.
    """
    mu, eta = params.mu, params.eta
    b = math.expm1(mu * (1 - eta)) / mu
    if b > 1:
        raise FullBlockingRegimeError(mu, eta, b)
    return b


def full_blocking_threshold(mu: float) -> float:
    """Transmission below which Eve can block all single-photon pulses."""
    return 1 - math.log1p(mu) / mu


def match_distribution(params: ChannelParams, n_max: int) -> PhotonDistribution:
    """Delivered statistics of the base PNS attack run at ``b_match``."""
    b_match(params)
    mu, eta = params.mu, params.eta
    src = poisson(mu, n_max + 1).probs
    probs = np.empty(n_max + 1)
    probs[0] = math.exp(-eta * mu)
    # (1 + mu + mu^2/2) e^-mu - e^-(eta mu), as P(src <= 2) - P(loss = 0)
    probs[1] = src[0] + src[1] + src[2] - probs[0]
    probs[2:] = src[3:]
    tail = poisson_upper_tail(mu, n_max + 2)
    return PhotonDistribution(probs, tail)


@dataclass(frozen=True)
class DifferenceProfile:
    """``d[n] = P_match[n] - P_loss[n]`` together with its sign structure.

    ``turning_index`` is the last ``n`` with ``d[n] <= 0`` when the profile
    has the shape zero, nonpositive..., nonnegative...; otherwise ``None``.
    """

    d: np.ndarray
    tail_difference: float
    turning_index: Optional[int]
    mu: float
    eta: float

    @property
    def n_max(self) -> int:
        return self.d.size - 1

    def prefix_sums(self) -> np.ndarray:
        return np.cumsum(self.d)

    def total(self) -> float:
        return float(self.d.sum() + self.tail_difference)


def _turning_index(d: np.ndarray, tol: float = SIGN_TOL) -> Optional[int]:
    if abs(d[0]) > tol:
        return None
    positive = np.flatnonzero(d[1:] > tol)
    if positive.size == 0:
        return None
    first_pos = int(positive[0]) + 1
    if first_pos == 1:
        return None
    if np.any(d[first_pos:] < -tol):
        return None
    return first_pos - 1


def difference_profile(params: ChannelParams, n_max: int) -> DifferenceProfile:
    """Bin-by-bin difference between matched-attack and lossy-channel statistics."""
    match = match_distribution(params, n_max)
    loss = poisson(params.mu * params.eta, n_max)
    d = match.probs - loss.probs
    d.setflags(write=False)
    turning = _turning_index(d)
    if turning is None:
        log.info(
            "difference profile at mu=%g eta=%g has no zero/nonpositive/nonnegative pattern",
            params.mu,
            params.eta,
        )
    return DifferenceProfile(
        d=d,
        tail_difference=match.tail_mass - loss.tail_mass,
        turning_index=turning,
        mu=params.mu,
        eta=params.eta,
    )


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    witness: Optional[int]
    max_prefix: float

    @property
    def verdict(self) -> str:
        return "FEASIBLE" if self.feasible else "INFEASIBLE"


def feasibility_check(profile: DifferenceProfile, tol: float = SIGN_TOL) -> FeasibilityReport:
    """Downward-only redistribution exists iff every prefix sum of ``d`` is ``<= 0``.

    Equivalently the lossy-channel CDF dominates the matched-attack CDF.  On
    failure ``witness`` is the first violating index.
    """
    prefix = profile.prefix_sums()
    bad = np.flatnonzero(prefix > tol)
    max_prefix = float(prefix.max())
    if bad.size:
        return FeasibilityReport(False, int(bad[0]), max_prefix)
    return FeasibilityReport(True, None, max_prefix)


def first_return_to_negative(d: np.ndarray, start: int = 2, tol: float = SIGN_TOL) -> Optional[int]:
    """Index where ``d`` drops below ``-tol`` after having been ``>= -tol`` at or after ``start``.

    ``None`` means the profile never turns back negative.
    """
    seen_nonnegative = False
    for n in range(start, d.size):
        if d[n] >= -tol:
            seen_nonnegative = True
        elif seen_nonnegative:
            return n
    return None


def induction_sign_check(params: ChannelParams, n_max: int) -> bool:
    """Numerically confirm the zero / nonpositive / nonnegative sign pattern of ``d``.

    Only meaningful for ``eta <= 3/4``, where d[n] >= 0 forces d[n+1] >= 0 for
    n >= 2.  Returns ``True`` iff the full pattern holds; a return to negative
    values after the first nonnegative index (n >= 2) is logged as a warning.
    """
    if params.eta > INDUCTION_ETA_MAX:
        raise OutOfRangeError(
            f"induction premise needs eta <= {INDUCTION_ETA_MAX}, got {params.eta}"
        )
    profile = difference_profile(params, n_max)
    back = first_return_to_negative(profile.d)
    if back is not None:
        log.warning("d turned negative again at n=%d (mu=%g, eta=%g)", back, params.mu, params.eta)
        return False
    return profile.turning_index is not None

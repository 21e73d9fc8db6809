"""Conservative gain bound and the mean photon number that maximizes it.

The bound is ``sifting * (p_exp - S_m)``: Bob's non-vacuum fraction minus the
source multi-photon probability, i.e. the part of the detected signals Eve
cannot have tagged.  It is positive in the secure regime and peaks near
``mu = eta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from scipy.optimize import brentq

from .boundary import d1_exact, eta0_exact
from .distributions import ChannelParams, poisson_upper_tail
from .errors import FullBlockingRegimeError, InvalidParameterError, NoRootError
from .matching import INDUCTION_ETA_MAX, b_match

MU_SEARCH_MAX = 5.0
MU_XTOL = 1e-10


@dataclass(frozen=True)
class GainReport:
    mu: float
    eta: float
    s_multi: float
    p_exp: float
    bound: float
    sifting_factor: float = 0.5


def _check_sifting(sifting_factor: float) -> None:
    if not 0 < sifting_factor <= 1:
        raise InvalidParameterError(f"sifting factor must lie in (0, 1], got {sifting_factor!r}")


def multi_photon_probability(mu: float) -> float:
    """``S_m = 1 - (1 + mu) e^-mu``."""
    return poisson_upper_tail(mu, 2)


def gain_bound(params: ChannelParams, sifting_factor: float = 0.5) -> GainReport:
    _check_sifting(sifting_factor)
    s_multi = multi_photon_probability(params.mu)
    p_exp = -math.expm1(-params.mu * params.eta)
    return GainReport(
        mu=params.mu,
        eta=params.eta,
        s_multi=s_multi,
        p_exp=p_exp,
        bound=sifting_factor * (p_exp - s_multi),
        sifting_factor=sifting_factor,
    )


def _stationarity(mu: float, eta: float) -> float:
    # d/dmu of (p_exp - S_m): eta e^-(mu eta) - mu e^-mu
    return eta * math.exp(-mu * eta) - mu * math.exp(-mu)


def mu_opt(eta: float, sifting_factor: float = 0.5) -> tuple[float, float]:
    """Maximize the gain bound over ``mu`` in ``(0, 5]``.

    The bound is unimodal on the bracket ``(0, mu_hi]`` with
    ``mu_hi = min(5, 1 / (1 - eta))``: its derivative is positive at 0 and
    negative at ``mu_hi``.  The maximizer is located by Brent's method on the
    derivative to 1e-10 in ``mu``.

    Returns
    -------
    (mu_opt, bound_at_opt)
    """
    if not 0 < eta <= 1:
        raise InvalidParameterError(f"eta must lie in (0, 1], got {eta!r}")
    _check_sifting(sifting_factor)
    hi = MU_SEARCH_MAX if eta >= 1 - 1 / MU_SEARCH_MAX else 1 / (1 - eta)
    lo = min(eta, 1.0) * 1e-6
    mu = brentq(_stationarity, lo, hi, args=(eta,), xtol=MU_XTOL * 1e-3)
    return mu, gain_bound(ChannelParams(mu, eta), sifting_factor).bound


@dataclass(frozen=True)
class WorkingPointReport:
    mu: float
    eta: float
    d1: float
    feasible: bool
    eta0: Optional[float]
    margin: Optional[float]
    b_match: Optional[float]
    certified: bool
    notes: tuple[str, ...] = ()


def working_point_check(params: ChannelParams) -> WorkingPointReport:
    """Locate ``(mu, eta)`` relative to the feasibility frontier ``eta0(mu)``.

    ``certified`` is true only when ``b_match`` lies in ``[0, 1]``, ``eta <= 3/4``
    and ``eta0(mu)`` has a bracketed root; anything else is reported in
    ``notes`` rather than raised.
    """
    notes = []
    d1 = d1_exact(params.mu, params.eta)
    try:
        b = b_match(params)
    except FullBlockingRegimeError as exc:
        b = None
        notes.append(str(exc))
    try:
        eta0 = eta0_exact(params.mu)
        margin = eta0 - params.eta
    except NoRootError as exc:
        eta0 = margin = None
        notes.append(str(exc))
    if params.eta > INDUCTION_ETA_MAX:
        notes.append(f"eta > {INDUCTION_ETA_MAX}: outside the certified regime")
    certified = b is not None and eta0 is not None and params.eta <= INDUCTION_ETA_MAX
    return WorkingPointReport(
        mu=params.mu,
        eta=params.eta,
        d1=d1,
        feasible=d1 <= 0,
        eta0=eta0,
        margin=margin,
        b_match=b,
        certified=certified,
        notes=tuple(notes),
    )

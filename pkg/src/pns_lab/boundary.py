"""The single-photon deficit d1, the critical transmission eta0(mu) and figure grids."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import poisson_upper_tail
from .errors import InvalidParameterError, NoRootError

log = logging.getLogger(__name__)

ETA_LO = 1e-9
ETA_HI = 0.75
ETA_XTOL = 1e-10
RESIDUAL_TOL = 1e-13


def d1_exact(mu: float, eta: float) -> float:
    """Single-photon difference ``(1 + mu + mu^2/2) e^-mu - (1 + eta mu) e^-(eta mu)``.

    Evaluated as ``P(Poisson(eta mu) >= 2) - P(Poisson(mu) >= 3)``, which is the
    same quantity without the cancellation between two numbers close to one.
    ``eta = 0`` is accepted as a limit point.
    """
    if not mu > 0:
        raise InvalidParameterError(f"mu must be > 0, got {mu!r}")
    if not 0 <= eta <= 1:
        raise InvalidParameterError(f"eta must lie in [0, 1], got {eta!r}")
    loss_multi = poisson_upper_tail(eta * mu, 2) if eta > 0 else 0.0
    return loss_multi - poisson_upper_tail(mu, 3)


def d1_approx(mu: float, eta: float) -> float:
    """Fourth-order expansion ``mu^2/2 * (-mu/3 + mu^2/4 + eta^2)``."""
    return mu * mu / 2 * (-mu / 3 + mu * mu / 4 + eta * eta)


def eta0_exact(mu: float, lo: float = ETA_LO, hi: float = ETA_HI, xtol: float = ETA_XTOL) -> float:
    """Critical transmission where ``d1_exact`` vanishes, by bisection on ``[lo, hi]``.

    Iterates until the bracket is narrower than ``xtol`` and the returned
    endpoint has ``|d1| < 1e-13``.

    Raises
    ------
    NoRootError
        If ``d1`` is not negative at ``lo`` and positive at ``hi``.
    """
    f_lo = d1_exact(mu, lo)
    f_hi = d1_exact(mu, hi)
    if not (f_lo < 0 < f_hi):
        raise NoRootError(mu, lo, f_lo, hi, f_hi)
    a, b = lo, hi
    f_a, f_b = f_lo, f_hi
    # stop only once both the bracket and the residual are tight
    while b - a > xtol or min(-f_a, f_b) >= RESIDUAL_TOL:
        mid = 0.5 * (a + b)
        if not a < mid < b:
            break
        f_mid = d1_exact(mu, mid)
        if f_mid == 0:
            return mid
        if f_mid < 0:
            a, f_a = mid, f_mid
        else:
            b, f_b = mid, f_mid
    return a if -f_a <= f_b else b


def eta0_approx(mu: float) -> float:
    """Small-parameter estimate ``sqrt(mu/3 - mu^2/4)``; defined for ``0 < mu < 4/3``."""
    radicand = mu / 3 - mu * mu / 4
    if not mu > 0 or radicand <= 0:
        raise InvalidParameterError(f"eta0 approximation needs 0 < mu < 4/3, got {mu!r}")
    return math.sqrt(radicand)


def _axis(lo: float, hi: float, steps: int, name: str) -> np.ndarray:
    if int(steps) != steps or steps < 2:
        raise InvalidParameterError(f"steps must be an integer >= 2, got {steps!r}")
    if not (0 < lo < hi <= 1):
        raise InvalidParameterError(f"{name} range must satisfy 0 < min < max <= 1, got ({lo}, {hi})")
    return np.linspace(lo, hi, int(steps))


@dataclass(frozen=True)
class RegionGrid:
    """``d1`` on a ``(mu, eta)`` grid; ``d1[i, j]`` belongs to ``mu_axis[i]``, ``eta_axis[j]``."""

    mu_axis: np.ndarray
    eta_axis: np.ndarray
    d1: np.ndarray

    @property
    def feasible(self) -> np.ndarray:
        return self.d1 <= 0

    def cells(self):
        """Yield ``(mu, eta, d1, feasible)`` in row-major order (mu outer)."""
        for i, mu in enumerate(self.mu_axis):
            for j, eta in enumerate(self.eta_axis):
                d = float(self.d1[i, j])
                yield float(mu), float(eta), d, d <= 0

    def cell(self, mu: float, eta: float) -> tuple[float, bool]:
        i = int(np.argmin(np.abs(self.mu_axis - mu)))
        j = int(np.argmin(np.abs(self.eta_axis - eta)))
        d = float(self.d1[i, j])
        return d, d <= 0


def region_grid(mu_range: tuple[float, float], eta_range: tuple[float, float], steps: int) -> RegionGrid:
    """Evaluate ``d1_exact`` on a ``steps x steps`` grid; feasible cells have ``d1 <= 0``."""
    mu_axis = _axis(*mu_range, steps, "mu")
    eta_axis = _axis(*eta_range, steps, "eta")
    d1 = np.array([[d1_exact(mu, eta) for eta in eta_axis] for mu in mu_axis])
    return RegionGrid(mu_axis, eta_axis, d1)


@dataclass(frozen=True)
class BoundaryCurve:
    samples: list[tuple[float, float, float]]
    mu_range: tuple[float, float]
    steps: int
    skipped: list[tuple[float, str]] = field(default_factory=list)


def boundary_curve(mu_range: tuple[float, float], steps: int) -> BoundaryCurve:
    """Sample ``(mu, eta0_exact, eta0_approx)`` over ``mu_range``.

    Points without a bracketed root (or outside the approximation's domain)
    are skipped and listed in ``skipped``.
    """
    lo, hi = mu_range
    if int(steps) != steps or steps < 2:
        raise InvalidParameterError(f"steps must be an integer >= 2, got {steps!r}")
    if not (0 < lo < hi):
        raise InvalidParameterError(f"mu range must satisfy 0 < min < max, got ({lo}, {hi})")
    samples = []
    skipped = []
    for mu in np.linspace(lo, hi, int(steps)):
        mu = float(mu)
        try:
            samples.append((mu, eta0_exact(mu), eta0_approx(mu)))
        except (NoRootError, InvalidParameterError) as exc:
            log.warning("skipping mu=%g: %s", mu, exc)
            skipped.append((mu, str(exc)))
    return BoundaryCurve(samples, (lo, hi), int(steps), skipped)

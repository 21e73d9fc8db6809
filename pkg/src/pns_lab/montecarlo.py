"""Pulse-level simulation of the lossy channel, the base PNS attack and the extended attack.

Each pulse draws its photon number from Poisson(mu) by CDF inversion and is
then pushed through the mode's per-pulse map.  Pulses are processed in fixed
chunks of ``CHUNK_SIZE``; chunk ``k`` uses its own PCG64 stream seeded from
``SeedSequence(seed, spawn_key=(k,))``, so results do not depend on how many
workers run the chunks.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .distributions import ChannelParams, PhotonDistribution, choose_nmax, poisson, poisson_terms
from .errors import (
    FullBlockingRegimeError,
    IncompatibleResultsError,
    InfeasibleParametersError,
    InfeasibleTransportError,
    InvalidConfigError,
)
from .matching import b_match, match_distribution
from .transport import CompositePlan, composite_plan_for

CHUNK_SIZE = 1 << 20
MIN_EXPECTED = 5.0
DISTINGUISH_ALPHA = 1e-3

MODES = ("lossy-channel", "base-pns", "extended-pns")
MODE_ALIASES = {"lossy": "lossy-channel", "base": "base-pns", "extended": "extended-pns"}


def canonical_mode(mode: str) -> str:
    mode = MODE_ALIASES.get(mode, mode)
    if mode not in MODES:
        raise InvalidConfigError(f"unknown mode {mode!r}; expected one of {MODES}")
    return mode


@dataclass(frozen=True)
class SimulationConfig:
    params: ChannelParams
    pulses: int
    seed: int
    mode: str = "lossy-channel"

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", canonical_mode(self.mode))
        if int(self.pulses) != self.pulses or self.pulses < 1:
            raise InvalidConfigError(f"pulses must be a positive integer, got {self.pulses!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise InvalidConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")


@dataclass(frozen=True)
class SimulationResult:
    """Histogram of delivered photon numbers plus per-pulse bookkeeping.

    ``transitions[n, m]`` counts pulses that left the source with ``n``
    photons and reached Bob with ``m``.
    """

    config: SimulationConfig
    counts: np.ndarray
    transitions: np.ndarray
    analytic: np.ndarray
    analytic_tail: float
    nonvacuum_count: int
    tagged_count: int
    blocked_singles: int
    tv_distance_to_analytic: float
    per_bin_z: np.ndarray

    @property
    def pulses(self) -> int:
        return self.config.pulses

    @property
    def empirical(self) -> np.ndarray:
        return self.counts / self.pulses


def _source_cdf(mu: float, n_top: int) -> np.ndarray:
    return np.cumsum(poisson_terms(mu, n_top))


def _row_cdf(matrix: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(matrix, axis=1)
    # past the last supported column no u in [0, 1) may land
    for n in range(matrix.shape[0]):
        last = np.flatnonzero(matrix[n])
        cdf[n, (last[-1] if last.size else n):] = np.inf
    return cdf


def _analytic(config: SimulationConfig, n_max: int) -> PhotonDistribution:
    p = config.params
    if config.mode == "base-pns":
        return match_distribution(p, n_max)
    return poisson(p.mu * p.eta, n_max)


def _prepare(config: SimulationConfig, n_max: int):
    p = config.params
    if config.mode == "lossy-channel":
        return None
    try:
        if config.mode == "base-pns":
            return b_match(p)
        plan = composite_plan_for(p, n_max)
    except (FullBlockingRegimeError, InfeasibleTransportError) as exc:
        raise InfeasibleParametersError(f"{config.mode} not constructible at mu={p.mu}, eta={p.eta}: {exc}") from exc
    return plan


def _run_chunk(config: SimulationConfig, index: int, size: int, cdf: np.ndarray, state, n_bins: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.seed, spawn_key=(index,))))
    origin = np.searchsorted(cdf, rng.random(size), side="right")
    np.minimum(origin, cdf.size - 1, out=origin)
    mode = config.mode
    if mode == "lossy-channel":
        delivered = rng.binomial(origin, config.params.eta)
    elif mode == "base-pns":
        b = state
        blocked = rng.random(size) < b
        delivered = np.where(origin >= 2, origin - 1, np.where(origin == 1, (~blocked).astype(origin.dtype), 0))
    else:
        row_cdf = state
        u = rng.random(size)
        delivered = np.zeros_like(origin)
        # vacuum rows are the identity; only sample pulses that carry photons
        lit = np.flatnonzero(origin)
        delivered[lit] = (u[lit, None] >= row_cdf[origin[lit]]).sum(axis=1)
    return np.bincount(origin * n_bins + delivered, minlength=n_bins * n_bins).reshape(n_bins, n_bins)


def simulate(config: SimulationConfig, workers: int = 1) -> SimulationResult:
    """Run the configured simulation; identical ``config`` gives identical results."""
    p = config.params
    n_max = choose_nmax(p.mu)
    n_bins = n_max + 2
    prepared = _prepare(config, n_max)
    if isinstance(prepared, CompositePlan):
        state = _row_cdf(prepared.matrix)
    else:
        state = prepared
    cdf = _source_cdf(p.mu, n_bins - 1)

    n_chunks = -(-config.pulses // CHUNK_SIZE)
    sizes = [min(CHUNK_SIZE, config.pulses - k * CHUNK_SIZE) for k in range(n_chunks)]
    jobs = [(config, k, sizes[k], cdf, state, n_bins) for k in range(n_chunks)]
    if workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda a: _run_chunk(*a), jobs))
    else:
        parts = [_run_chunk(*a) for a in jobs]
    transitions = np.sum(parts, axis=0)

    counts = transitions.sum(axis=0)
    last = max(n_max, int(np.flatnonzero(counts)[-1]))
    counts = counts[: last + 1]
    analytic_dist = _analytic(config, n_max)
    analytic = np.zeros(last + 1)
    analytic[: n_max + 1] = analytic_dist.probs

    N = config.pulses
    expected = N * analytic
    sd = np.sqrt(expected * (1 - analytic))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sd > 0, (counts - expected) / sd, np.where(counts == 0, 0.0, np.inf))
    tv = 0.5 * (np.abs(counts / N - analytic).sum() + analytic_dist.tail_mass)

    if config.mode == "lossy-channel":
        tagged = 0
        blocked = 0
    else:
        tagged = int(transitions[2:, 1:].sum())
        blocked = int(transitions[1, 0])
    return SimulationResult(
        config=config,
        counts=counts,
        transitions=transitions,
        analytic=analytic,
        analytic_tail=analytic_dist.tail_mass,
        nonvacuum_count=int(N - counts[0]),
        tagged_count=tagged,
        blocked_singles=blocked,
        tv_distance_to_analytic=float(tv),
        per_bin_z=z,
    )


@dataclass(frozen=True)
class ChiSquaredReport:
    statistic: float
    dof: int
    p_value: float
    alpha: float = DISTINGUISH_ALPHA

    @property
    def distinguishable(self) -> bool:
        return self.p_value < self.alpha

    def lines(self) -> list[str]:
        return [
            f"chi2={self.statistic:.17g}",
            f"dof={self.dof}",
            f"p_value={self.p_value:.17g}",
            f"distinguishable={'yes' if self.distinguishable else 'no'}",
        ]


def _pool(expected: np.ndarray) -> list[list[int]]:
    """Group bins so every group has expected count >= MIN_EXPECTED.

    Sparse bins join the last retained bin; sparse bins before any retained
    bin join the first one.
    """
    groups: list[list[int]] = []
    pending: list[int] = []
    for k, e in enumerate(expected):
        if e >= MIN_EXPECTED:
            groups.append(pending + [k])
            pending = []
        elif groups:
            groups[-1].append(k)
        else:
            pending.append(k)
    if pending:
        if groups:
            groups[0] = pending + groups[0]
        else:
            groups.append(pending)
    return groups


def _pad(a: np.ndarray, size: int) -> np.ndarray:
    return np.concatenate([a, np.zeros(size - a.size, dtype=a.dtype)])


def distinguishability_report(a: SimulationResult, b: SimulationResult) -> ChiSquaredReport:
    """Two-sample chi-squared homogeneity test between two histograms."""
    if a.pulses != b.pulses:
        raise IncompatibleResultsError(f"pulse counts differ: {a.pulses} vs {b.pulses}")
    size = max(a.counts.size, b.counts.size)
    table = np.vstack([_pad(a.counts, size), _pad(b.counts, size)]).astype(float)
    groups = _pool(table.sum(axis=0) / 2)
    pooled = np.array([[row[g].sum() for g in groups] for row in table])
    if len(groups) < 2:
        return ChiSquaredReport(0.0, 0, 1.0)
    expected = pooled.sum(axis=0) / 2
    stat = float((((pooled - expected) ** 2) / expected).sum())
    dof = len(groups) - 1
    return ChiSquaredReport(stat, dof, float(stats.chi2.sf(stat, dof)))


def goodness_of_fit(result: SimulationResult) -> ChiSquaredReport:
    """One-sample chi-squared test of a histogram against its analytic distribution."""
    N = result.pulses
    expected = N * result.analytic.copy()
    expected[-1] += N * result.analytic_tail
    groups = _pool(expected)
    if len(groups) < 2:
        return ChiSquaredReport(0.0, 0, 1.0)
    obs = np.array([result.counts[g].sum() for g in groups], dtype=float)
    exp = np.array([expected[g].sum() for g in groups])
    exp *= obs.sum() / exp.sum()
    stat, pval = stats.chisquare(obs, exp)
    return ChiSquaredReport(float(stat), len(groups) - 1, float(pval))


def standard_error(p: float, n: int) -> float:
    return math.sqrt(p * (1 - p) / n)

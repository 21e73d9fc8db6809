"""Eve's photon-extraction strategy as an explicit downward transport plan.

The redistribution step moves probability only from higher to lower photon
numbers and never empties a pulse.  The plan is the north-west-corner
(monotone) coupling between the matched-attack distribution and the
lossy-channel target.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import numpy as np

from .distributions import ChannelParams, PhotonDistribution, choose_nmax, poisson
from .errors import (
    InfeasibleTransportError,
    InvalidParameterError,
    MismatchedVacuumError,
    UncoveredBinError,
)
from .matching import SIGN_TOL, b_match, match_distribution

ROW_TOL = 1e-12
RESIDUAL_TOL = 1e-14
UNCOVERED_TOL = 1e-15


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _row_dict(row: np.ndarray) -> dict[int, float]:
    return {int(m): float(row[m]) for m in np.flatnonzero(row)}


@dataclass(frozen=True)
class ExtractionPlan:
    """Redistribution kernel ``matrix[n, m]`` for ``n, m`` in ``0..n_max``.

    Row 0 is the identity on vacuum; rows ``n >= 1`` are the extraction
    strategy proper.
    """

    matrix: np.ndarray
    mu: float = math.nan
    eta: float = math.nan

    def __post_init__(self) -> None:
        object.__setattr__(self, "matrix", _frozen(self.matrix))

    @property
    def n_max(self) -> int:
        return self.matrix.shape[0] - 1

    @property
    def rows(self) -> dict[int, dict[int, float]]:
        return {n: _row_dict(self.matrix[n]) for n in range(1, self.n_max + 1)}

    def violations(self) -> list[str]:
        """Names of the invariants this plan breaks (empty when valid)."""
        out = []
        m = self.matrix
        if np.any(np.abs(m[1:].sum(axis=1) - 1) > ROW_TOL):
            out.append("row-sum")
        if np.any(np.triu(m, k=1) != 0):
            out.append("upward-move")
        if np.any(m[1:, 0] != 0):
            out.append("vacuum-created")
        if np.any(m < 0):
            out.append("negative-entry")
        return out

    @classmethod
    def identity(cls, n_max: int) -> "ExtractionPlan":
        return cls(np.eye(n_max + 1))


@dataclass(frozen=True)
class CompositePlan:
    """Base PNS attack followed by redistribution: ``matrix[n, m]`` for ``n, m`` in ``0..size-1``."""

    matrix: np.ndarray
    blocking_fraction: float
    mu: float = math.nan
    eta: float = math.nan

    def __post_init__(self) -> None:
        object.__setattr__(self, "matrix", _frozen(self.matrix))

    @property
    def n_max(self) -> int:
        return self.matrix.shape[0] - 1

    @property
    def rows(self) -> dict[int, dict[int, float]]:
        return {n: _row_dict(self.matrix[n]) for n in range(self.n_max + 1)}

    def support_violations(self) -> list[int]:
        """Origins ``n >= 2`` whose row puts mass outside ``[1, n - 1]``."""
        bad = []
        for n in range(2, self.n_max + 1):
            row = self.matrix[n]
            if row[0] != 0 or np.any(row[n:] != 0):
                bad.append(n)
        return bad


Plan = Union[ExtractionPlan, CompositePlan]


def build_extraction_plan(
    source: PhotonDistribution, target: PhotonDistribution, mu: float = math.nan, eta: float = math.nan
) -> ExtractionPlan:
    """North-west-corner coupling pushing ``source`` down onto ``target``.

    Output bins are filled in ascending order, each consuming mass from the
    lowest source bin that still has some.  Because the vacuum bins agree and
    the target CDF dominates the source CDF, every unit of mass moves to an
    equal or lower photon number and never to zero.

    Raises
    ------
    MismatchedVacuumError
        If ``source[0]`` and ``target[0]`` differ by more than 1e-12.
    InfeasibleTransportError
        If some prefix of ``source`` carries more mass than the same prefix of
        ``target``.
    """
    if source.n_max != target.n_max:
        raise InvalidParameterError("source and target must share n_max")
    if abs(source[0] - target[0]) > SIGN_TOL:
        raise MismatchedVacuumError(
            f"vacuum mismatch: source[0]={source[0]!r}, target[0]={target[0]!r}"
        )
    prefix = np.cumsum(source.probs - target.probs)
    bad = np.flatnonzero(prefix > SIGN_TOL)
    if bad.size:
        raise InfeasibleTransportError(int(bad[0]), float(prefix[bad[0]]))

    n_max = source.n_max
    src = source.probs
    flow = np.zeros((n_max + 1, n_max + 1))
    flow[0, 0] = src[0]
    i = 1
    remaining = src[1]
    for m in range(1, n_max + 1):
        need = target.probs[m]
        while need > 0 and i <= n_max:
            if i < m:
                # leftover below the output bin is rounding noise; keep it in place
                flow[i, i] += remaining
                i += 1
                remaining = src[i] if i <= n_max else 0.0
                continue
            take = min(remaining, need)
            flow[i, m] += take
            remaining -= take
            need -= take
            if remaining <= 0:
                i += 1
                remaining = src[i] if i <= n_max else 0.0
    if i <= n_max:
        flow[i, i] += remaining
        for k in range(i + 1, n_max + 1):
            flow[k, k] += src[k]

    residual = float(np.abs(src - flow.sum(axis=1)).max())
    if residual > RESIDUAL_TOL:
        raise AssertionError(f"transport bookkeeping lost mass {residual:.3e}")

    matrix = np.zeros_like(flow)
    for n in range(n_max + 1):
        total = flow[n].sum()
        if total > 0:
            matrix[n] = flow[n] / total
        else:
            matrix[n, n] = 1.0
    return ExtractionPlan(matrix, mu=mu, eta=eta)


def extraction_plan_for(params: ChannelParams, n_max: Optional[int] = None) -> ExtractionPlan:
    """Plan mapping the matched-attack statistics onto Poisson(``mu * eta``)."""
    n_max = choose_nmax(params.mu) if n_max is None else n_max
    source = match_distribution(params, n_max)
    target = poisson(params.mu * params.eta, n_max)
    return build_extraction_plan(source, target, params.mu, params.eta)


def compose_with_base(plan: ExtractionPlan, b: float) -> CompositePlan:
    """Chain the base attack (``n -> n - 1``, singles blocked w.p. ``b``) with ``plan``."""
    if not (math.isfinite(b) and 0 <= b <= 1):
        raise InvalidParameterError(f"blocking fraction must lie in [0, 1], got {b!r}")
    size = plan.n_max + 2
    matrix = np.zeros((size, size))
    matrix[0, 0] = 1.0
    matrix[1, 0] = b
    matrix[1, 1] = 1.0 - b
    matrix[2:, : plan.n_max + 1] = plan.matrix[1:]
    return CompositePlan(matrix, blocking_fraction=b, mu=plan.mu, eta=plan.eta)


def composite_plan_for(params: ChannelParams, n_max: Optional[int] = None) -> CompositePlan:
    """Full extended attack at ``params``: base PNS at ``b_match`` plus redistribution."""
    return compose_with_base(extraction_plan_for(params, n_max), b_match(params))


def pushforward(dist: PhotonDistribution, plan: Plan) -> PhotonDistribution:
    """Distribution of delivered photon numbers when ``dist`` is fed through ``plan``.

    Output bins beyond ``dist.n_max`` are not produced; the tail mass is
    carried through unchanged.
    """
    size = plan.matrix.shape[0]
    probs = dist.probs
    if probs.size > size:
        uncovered = probs[size:]
        if np.any(uncovered > UNCOVERED_TOL):
            n = size + int(np.flatnonzero(uncovered > UNCOVERED_TOL)[0])
            raise UncoveredBinError(f"bin n={n} has mass {probs[n]:.3e} but no plan row")
        probs = probs[:size]
    out = probs @ plan.matrix[: probs.size]
    n_out = dist.n_max + 1
    if out.size < n_out:
        out = np.concatenate([out, np.zeros(n_out - out.size)])
    spill = float(out[n_out:].sum())
    return PhotonDistribution(out[:n_out], dist.tail_mass + spill)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    deviation: float
    detail: str = ""


@dataclass(frozen=True)
class VerificationReport:
    checks: tuple[CheckResult, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def verify_plan(plan: CompositePlan, params: ChannelParams, tol: float = 1e-12) -> VerificationReport:
    """Check that ``plan`` mimics the lossy channel and keeps Eve's information.

    Checks: ``statistics`` (pushforward of the source equals Poisson(mu eta)
    per bin), ``nonvacuum`` (delivered non-vacuum probability equals
    ``1 - exp(-mu eta)``) and ``tagging`` (no multi-photon pulse is emptied or
    left without a photon for Eve).
    """
    n_max = plan.n_max - 1
    source = poisson(params.mu, n_max)
    target = poisson(params.mu * params.eta, n_max)
    delivered = pushforward(source, plan)
    stat_dev = float(np.abs(delivered.probs - target.probs).max())

    nonvacuum = float(source.probs @ (1.0 - plan.matrix[: n_max + 1, 0]) + source.tail_mass)
    nv_dev = abs(nonvacuum - (-math.expm1(-params.mu * params.eta)))

    bad = plan.support_violations()
    checks = (
        CheckResult("statistics", stat_dev <= tol, stat_dev),
        CheckResult("nonvacuum", nv_dev <= tol, nv_dev),
        CheckResult(
            "tagging",
            not bad,
            float(len(bad)),
            "" if not bad else "origins without a retained photon: " + ",".join(map(str, bad)),
        ),
    )
    return VerificationReport(checks)


def format_plan(plan: CompositePlan) -> str:
    """Line-oriented text form: header then ``n m probability`` for nonzero entries."""
    lines = [f"# pns-plan mu={plan.mu!r} eta={plan.eta!r} b={plan.blocking_fraction!r}"]
    for n, m in zip(*np.nonzero(plan.matrix)):
        lines.append(f"{n} {m} {plan.matrix[n, m]:.17g}")
    return "\n".join(lines) + "\n"


def parse_plan(text: Union[str, Iterable[str]]) -> CompositePlan:
    """Inverse of :func:`format_plan`."""
    lines = text.splitlines() if isinstance(text, str) else list(text)
    header = lines[0].split()
    if header[:2] != ["#", "pns-plan"]:
        raise ValueError("missing '# pns-plan' header")
    meta = dict(tok.split("=", 1) for tok in header[2:])
    entries = []
    for line in lines[1:]:
        if not line.strip():
            continue
        n, m, p = line.split()
        entries.append((int(n), int(m), float(p)))
    size = max(max(n, m) for n, m, _ in entries) + 1
    matrix = np.zeros((size, size))
    for n, m, p in entries:
        matrix[n, m] = p
    return CompositePlan(
        matrix, blocking_fraction=float(meta["b"]), mu=float(meta["mu"]), eta=float(meta["eta"])
    )

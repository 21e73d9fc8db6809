"""Exception hierarchy shared by all pns_lab modules."""


class PNSLabError(Exception):
    """Base class for domain errors raised by pns_lab."""


class InvalidParameterError(PNSLabError, ValueError):
    """A numeric argument lies outside its admissible range."""


class OutOfRangeError(PNSLabError):
    """Parameters fall outside the regime in which an analysis is defined."""


class FullBlockingRegimeError(OutOfRangeError):
    """The vacuum-matching blocking fraction exceeds one.

    Eve can then block every single-photon pulse and the matching analysis
    does not apply.
    """

    def __init__(self, mu: float, eta: float, b: float):
        self.mu = mu
        self.eta = eta
        self.b = b
        super().__init__(
            f"full-blocking regime: b_match={b:.6g} > 1 at mu={mu:g}, eta={eta:g}"
        )


class InfeasibleTransportError(PNSLabError):
    """Downward-only redistribution is impossible; ``witness`` is the first bad prefix."""

    def __init__(self, witness: int, excess: float):
        self.witness = witness
        self.excess = excess
        super().__init__(
            f"infeasible transport: prefix condition violated at n={witness} "
            f"(excess {excess:.3e})"
        )


class MismatchedVacuumError(PNSLabError):
    """Source and target vacuum probabilities differ."""


class UncoveredBinError(PNSLabError):
    """A bin carrying probability mass has no row in the plan."""


class NoRootError(PNSLabError):
    """Bisection bracket does not enclose a sign change."""

    def __init__(self, mu: float, lo: float, f_lo: float, hi: float, f_hi: float):
        self.mu = mu
        self.f_lo = f_lo
        self.f_hi = f_hi
        super().__init__(
            f"no root for mu={mu:g}: d1({lo:g})={f_lo:.6e}, d1({hi:g})={f_hi:.6e}"
        )


class InfeasibleParametersError(PNSLabError):
    """The extended attack cannot be built at these parameters."""


class InvalidConfigError(PNSLabError, ValueError):
    """Simulation configuration is malformed."""


class IncompatibleResultsError(PNSLabError):
    """Two simulation results cannot be compared."""

"""Photon-number statistics of the extended photon-number-splitting attack.

Analytic source/channel/attack distributions, the vacuum-matched attack and
its feasibility region, an explicit photon-extraction plan, the gain bound,
and a Monte Carlo check that the attacked channel looks like plain loss.
"""
from .boundary import (
    BoundaryCurve,
    RegionGrid,
    boundary_curve,
    d1_approx,
    d1_exact,
    eta0_approx,
    eta0_exact,
    region_grid,
)
from .distributions import (
    ChannelParams,
    PhotonDistribution,
    base_pns_map,
    choose_nmax,
    pns_distribution,
    poisson,
)
from .gain import GainReport, gain_bound, mu_opt, working_point_check
from .matching import (
    DifferenceProfile,
    b_match,
    difference_profile,
    feasibility_check,
    induction_sign_check,
    match_distribution,
)
from .montecarlo import SimulationConfig, SimulationResult, distinguishability_report, simulate
from .transport import (
    CompositePlan,
    ExtractionPlan,
    build_extraction_plan,
    compose_with_base,
    composite_plan_for,
    extraction_plan_for,
    pushforward,
    verify_plan,
)

__version__ = "0.1.0"

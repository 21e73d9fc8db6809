"""Exit criteria for the package, one test per criterion.

Each test records a one-line PASS/FAIL summary that is printed at the end of
the pytest run under "acceptance criteria".
"""
import math
import subprocess
import sys
import time

import numpy as np
import pytest
from conftest import record

from pns_lab.boundary import boundary_curve, d1_exact, eta0_approx, eta0_exact
from pns_lab.distributions import ChannelParams, choose_nmax, poisson
from pns_lab.matching import (
    b_match,
    difference_profile,
    feasibility_check,
    first_return_to_negative,
    full_blocking_threshold,
)
from pns_lab.montecarlo import SimulationConfig, distinguishability_report, simulate, standard_error
from pns_lab.transport import composite_plan_for, extraction_plan_for, pushforward
from pns_lab.gain import mu_opt, working_point_check


def test_c01_b_match_endpoints():
    worst = 0.0
    for mu in (0.1, 0.5, 1.0):
        worst = max(worst, abs(b_match(ChannelParams(mu, 1.0))))
        worst = max(worst, abs(b_match(ChannelParams(mu, full_blocking_threshold(mu))) - 1))
    ok = worst <= 1e-12
    record(1, ok, f"b_match endpoint identities, max deviation {worst:.2e} (tol 1e-12)")
    assert ok


def test_c02_matching_and_normalization(grid_points):
    t0 = time.perf_counter()
    worst_d0 = worst_sum = 0.0
    for p in grid_points:
        prof = difference_profile(p, choose_nmax(p.mu))
        worst_d0 = max(worst_d0, abs(prof.d[0]))
        worst_sum = max(worst_sum, abs(prof.total()))
    elapsed = time.perf_counter() - t0
    ok = worst_d0 <= 1e-12 and worst_sum <= 1e-10 and elapsed < 1.0
    record(
        2, ok,
        f"{len(grid_points)} grid points: max|d0|={worst_d0:.1e}, max|sum d|={worst_sum:.1e}, {elapsed:.2f}s",
    )
    assert ok


def test_c03_sufficiency(induction_grid):
    t0 = time.perf_counter()
    checked = 0
    failures = []
    worst = 0.0
    for p in induction_grid:
        if d1_exact(p.mu, p.eta) > 0:
            continue
        checked += 1
        n_max = choose_nmax(p.mu)
        if not feasibility_check(difference_profile(p, n_max)).feasible:
            failures.append((p, "feasibility"))
            continue
        plan = extraction_plan_for(p, n_max)
        from pns_lab.matching import match_distribution

        dev = np.abs(
            pushforward(match_distribution(p, n_max), plan).probs - poisson(p.mu * p.eta, n_max).probs
        ).max()
        worst = max(worst, dev)
        if dev > 1e-12:
            failures.append((p, f"pushforward {dev:.1e}"))
    elapsed = time.perf_counter() - t0
    ok = not failures and checked > 0 and elapsed < 5.0
    record(3, ok, f"{checked} points with d1<=0, eta<=0.75: max pushforward dev {worst:.1e}, {elapsed:.2f}s")
    assert ok, failures[:5]


def test_c04_induction(induction_grid):
    t0 = time.perf_counter()
    bad = [p for p in induction_grid if first_return_to_negative(difference_profile(p, choose_nmax(p.mu)).d) is not None]
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 1.0
    record(4, ok, f"{len(induction_grid)} points, {len(bad)} returns to negative, {elapsed:.2f}s")
    assert ok


def test_c05_boundary_agreement():
    t0 = time.perf_counter()
    small = boundary_curve((0.001, 0.05), 50)
    wide = boundary_curve((0.001, 0.5), 100)
    rel_small = max(abs(e - a) / e for _, e, a in small.samples)
    rel_wide = max(abs(e - a) / e for _, e, a in wide.samples)
    residual = max(abs(d1_exact(mu, e)) for mu, e, _ in small.samples + wide.samples)
    elapsed = time.perf_counter() - t0
    ok = (
        not small.skipped and not wide.skipped
        and rel_small < 0.02 and rel_wide < 0.15 and residual < 1e-12 and elapsed < 1.0
    )
    record(
        5, ok,
        f"rel err {rel_small:.2%} (mu<=0.05, tol 2%), {rel_wide:.2%} (mu<=0.5, tol 15%), "
        f"residual {residual:.1e}, {elapsed:.2f}s",
    )
    assert ok


def test_c06_lowest_order():
    mu = 1e-3
    rel = abs(d1_exact(mu, 0.0) + mu**3 / 6) / (mu**3 / 6)
    ok = rel < 0.01
    record(6, ok, f"d1(1e-3, 0) vs -mu^3/6: rel err {rel:.2e} (tol 1%)")
    assert ok


def test_c07_optimal_photon_number():
    t0 = time.perf_counter()
    eta = 0.01
    mu, _ = mu_opt(eta)
    grid = np.arange(1e-6, 0.05, 1e-6)
    oracle = float(grid[np.argmax((1 + grid) * np.exp(-grid) - np.exp(-grid * eta))])
    wp = working_point_check(ChannelParams(mu, eta))
    ratio = mu / eta
    elapsed = time.perf_counter() - t0
    oracle_ok = abs(mu - oracle) <= 1e-6
    ratio_ok = 1 <= ratio <= 1.01
    wp_ok = wp.feasible and wp.margin is not None and wp.margin > 0
    ok = oracle_ok and ratio_ok and wp_ok and elapsed < 1.0
    record(
        7, ok,
        f"mu_opt/eta={ratio:.6f} (band [1, 1.01]), grid oracle {oracle:.6f} vs {mu:.9f}, "
        f"margin {wp.margin:.4f}, {elapsed:.2f}s",
    )
    assert oracle_ok and wp_ok
    assert ratio_ok, f"mu_opt/eta = {ratio!r} exceeds 1.01"


@pytest.fixture(scope="module")
def seed_sweep():
    params = ChannelParams(0.1, 0.1)
    N = 10**6
    runs = []
    t0 = time.perf_counter()
    for k in range(20):
        lossy = simulate(SimulationConfig(params, N, 1000 + k, "lossy-channel"))
        ext = simulate(SimulationConfig(params, N, 2000 + k, "extended-pns"))
        base = simulate(SimulationConfig(params, N, 3000 + k, "base-pns"))
        runs.append((lossy, ext, base))
    return params, runs, time.perf_counter() - t0


def test_c08_monte_carlo_indistinguishability(seed_sweep):
    _, runs, elapsed = seed_sweep
    ext_flags = sum(distinguishability_report(l, e).distinguishable for l, e, _ in runs)
    base_flags = sum(distinguishability_report(l, b).distinguishable for l, _, b in runs)
    ok = ext_flags <= 1 and base_flags >= 15 and elapsed < 60
    record(
        8, ok,
        f"extended vs lossy flagged {ext_flags}/20 (<=1), base vs lossy flagged {base_flags}/20 (>=15), "
        f"{elapsed:.1f}s",
    )
    assert ok


def test_c09_nonvacuum_conservation(seed_sweep):
    params, runs, _ = seed_sweep
    plan = composite_plan_for(params)
    structural = plan.support_violations() == [] and not np.any(plan.matrix[2:, 0])
    p_nv = -math.expm1(-params.mu * params.eta)
    worst_z = 0.0
    sampled_ok = True
    for _, ext, _ in runs:
        sampled_ok &= ext.transitions[2:, 0].sum() == 0
        worst_z = max(worst_z, abs(ext.nonvacuum_count / ext.pulses - p_nv) / standard_error(p_nv, ext.pulses))
    ok = structural and sampled_ok and worst_z <= 4
    record(9, ok, f"no n>=2 -> 0 transitions (plan and samples), worst non-vacuum z {worst_z:.2f} (tol 4)")
    assert ok


def test_c10_cli_determinism(tmp_path):
    outputs = []
    for k in range(2):
        path = tmp_path / f"run{k}.csv"
        subprocess.run(
            [
                sys.executable, "-m", "pns_lab.cli", "simulate", "--mu", "0.1", "--eta", "0.1",
                "--pulses", "200000", "--seed", "31337", "--mode", "extended", "--out", str(path),
            ],
            check=True,
            capture_output=True,
        )
        outputs.append(path.read_bytes())
    ok = outputs[0] == outputs[1] and len(outputs[0]) > 0
    record(10, ok, f"two simulate invocations, {len(outputs[0])} bytes each, identical={outputs[0] == outputs[1]}")
    assert ok

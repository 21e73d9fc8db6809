"""``pns-lab`` command line: one subcommand per analysis, CSV for figure data.

Exit status is 0 on success, 1 on domain failures (infeasible parameters,
no root) and 2 on usage errors.  Diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import contextlib
import logging
import math
import sys
from typing import IO, Iterator, Optional, Sequence

from . import csvio
from .boundary import boundary_curve, region_grid
from .distributions import ChannelParams, choose_nmax, poisson
from .errors import InvalidParameterError, PNSLabError
from .gain import gain_bound, mu_opt, working_point_check
from .matching import b_match, difference_profile, feasibility_check, match_distribution
from .montecarlo import SimulationConfig, goodness_of_fit, simulate
from .transport import composite_plan_for, verify_plan

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("pns_lab")


def _positive(text: str) -> float:
    v = float(text)
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return v


def _transmission(text: str) -> float:
    v = float(text)
    if not (math.isfinite(v) and 0 < v <= 1):
        raise argparse.ArgumentTypeError(f"must lie in (0, 1], got {text}")
    return v


def _count(minimum: int):
    def parse(text: str) -> int:
        v = int(text)
        if v < minimum:
            raise argparse.ArgumentTypeError(f"must be an integer >= {minimum}, got {text}")
        return v

    return parse


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pns-lab",
        description="Photon-number statistics of the extended photon-number-splitting attack.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="b_match, difference profile, feasibility and plan at one point")
    p.add_argument("--mu", type=_positive, required=True)
    p.add_argument("--eta", type=_transmission, required=True)
    p.add_argument("--nmax", type=_count(2), default=None)
    p.add_argument("--out")

    p = sub.add_parser("region", help="d1 sign on a (mu, eta) grid as CSV")
    p.add_argument("--mu-min", type=_transmission, required=True)
    p.add_argument("--mu-max", type=_transmission, required=True)
    p.add_argument("--eta-min", type=_transmission, required=True)
    p.add_argument("--eta-max", type=_transmission, required=True)
    p.add_argument("--steps", type=_count(2), required=True)
    p.add_argument("--out")

    p = sub.add_parser("boundary", help="critical transmission eta0(mu) as CSV")
    p.add_argument("--mu-min", type=_positive, required=True)
    p.add_argument("--mu-max", type=_positive, required=True)
    p.add_argument("--steps", type=_count(2), required=True)
    p.add_argument("--out")

    p = sub.add_parser("gain", help="optimal mean photon number and its feasibility margin")
    p.add_argument("--eta", type=_transmission, required=True)
    p.add_argument("--sifting", type=_transmission, default=0.5)
    p.add_argument("--out")

    p = sub.add_parser("simulate", help="Monte Carlo histogram and chi-squared test against the analytic target")
    p.add_argument("--mu", type=_positive, required=True)
    p.add_argument("--eta", type=_transmission, required=True)
    p.add_argument("--pulses", type=_count(1), required=True)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--mode", choices=("lossy", "base", "extended"), required=True)
    p.add_argument("--workers", type=_count(1), default=1)
    p.add_argument("--out")
    return parser


@contextlib.contextmanager
def _output(path: Optional[str], stdout: IO[str]) -> Iterator[IO[str]]:
    if path is None or path == "-":
        yield stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _analyze(args, out: IO[str]) -> int:
    params = ChannelParams(args.mu, args.eta)
    n_max = args.nmax if args.nmax is not None else choose_nmax(args.mu)
    f = csvio.fmt
    print(f"mu={f(params.mu)}", file=out)
    print(f"eta={f(params.eta)}", file=out)
    print(f"n_max={n_max}", file=out)
    b = b_match(params)
    print(f"b_match={f(b)}", file=out)
    profile = difference_profile(params, n_max)
    report = feasibility_check(profile)
    print(f"d1={f(profile.d[1])}", file=out)
    print(f"turning_index={'' if profile.turning_index is None else profile.turning_index}", file=out)
    print(f"feasibility={report.verdict}", file=out)
    if not report.feasible:
        print(f"witness={report.witness}", file=out)
    print("n,p_match,p_loss,d,prefix", file=out)
    match = match_distribution(params, n_max)
    loss = poisson(params.mu * params.eta, n_max)
    prefix = profile.prefix_sums()
    for n in range(n_max + 1):
        print(f"{n},{f(match[n])},{f(loss[n])},{f(profile.d[n])},{f(prefix[n])}", file=out)
    if not report.feasible:
        log.error("INFEASIBLE: prefix condition fails at n=%d", report.witness)
        return EXIT_DOMAIN
    plan = composite_plan_for(params, n_max)
    source = poisson(params.mu, n_max)
    # photons Eve removes beyond the base attack's single photon
    taken = sum(
        source[n] * plan.matrix[n, m] * (n - 1 - m)
        for n in range(2, n_max + 1)
        for m in range(1, n)
    )
    moved = sum(1 for n in range(3, plan.n_max + 1) if plan.matrix[n, n - 1] < 1)
    print(f"plan_rows_with_extra_extraction={moved}", file=out)
    print(f"plan_extra_photons_per_pulse={f(taken)}", file=out)
    for check in verify_plan(plan, params).checks:
        print(f"verify_{check.name}={'pass' if check.passed else 'fail'} deviation={f(check.deviation)}", file=out)
    return EXIT_OK


def _region(args, out: IO[str]) -> int:
    grid = region_grid((args.mu_min, args.mu_max), (args.eta_min, args.eta_max), args.steps)
    csvio.write_grid(grid, out)
    return EXIT_OK


def _boundary(args, out: IO[str]) -> int:
    curve = boundary_curve((args.mu_min, args.mu_max), args.steps)
    csvio.write_curve(curve, out)
    for mu, why in curve.skipped:
        print(f"skipped mu={mu!r}: {why}", file=sys.stderr)
    return EXIT_OK if curve.samples else EXIT_DOMAIN


def _gain(args, out: IO[str]) -> int:
    f = csvio.fmt
    mu, bound = mu_opt(args.eta, args.sifting)
    wp = working_point_check(ChannelParams(mu, args.eta))
    print(f"eta={f(args.eta)}", file=out)
    print(f"sifting_factor={f(args.sifting)}", file=out)
    print(f"mu_opt={f(mu)}", file=out)
    print(f"bound_at_opt={f(bound)}", file=out)
    print(f"p_exp={f(gain_bound(ChannelParams(mu, args.eta), args.sifting).p_exp)}", file=out)
    print(f"d1={f(wp.d1)}", file=out)
    print(f"feasible={'yes' if wp.feasible else 'no'}", file=out)
    print(f"eta0={'' if wp.eta0 is None else f(wp.eta0)}", file=out)
    print(f"margin={'' if wp.margin is None else f(wp.margin)}", file=out)
    print(f"certified={'yes' if wp.certified else 'no'}", file=out)
    for note in wp.notes:
        print(f"note: {note}", file=sys.stderr)
    return EXIT_OK


def _simulate(args, out: IO[str]) -> int:
    config = SimulationConfig(ChannelParams(args.mu, args.eta), args.pulses, args.seed, args.mode)
    result = simulate(config, workers=args.workers)
    csvio.write_histogram(result, out)
    report = goodness_of_fit(result)
    # keep the report off the data stream when the CSV goes to stdout
    dest = sys.stdout if args.out not in (None, "-") else sys.stderr
    lines = [
        f"mode={config.mode}",
        f"pulses={config.pulses}",
        f"seed={config.seed}",
        f"nonvacuum_count={result.nonvacuum_count}",
        f"tagged_count={result.tagged_count}",
        f"blocked_singles={result.blocked_singles}",
        f"tv_distance={csvio.fmt(result.tv_distance_to_analytic)}",
        *report.lines(),
    ]
    print("\n".join(lines), file=dest)
    return EXIT_OK


COMMANDS = {
    "analyze": _analyze,
    "region": _region,
    "boundary": _boundary,
    "gain": _gain,
    "simulate": _simulate,
}


def run(argv: Optional[Sequence[str]] = None, stdout: Optional[IO[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    stdout = sys.stdout if stdout is None else stdout
    try:
        with _output(args.out, stdout) as out:
            return COMMANDS[args.command](args, out)
    except InvalidParameterError as exc:
        parser.print_usage(sys.stderr)
        print(f"pns-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PNSLabError as exc:
        print(f"pns-lab: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

"""Command-line front end: sampling, estimation, tuning, simulation, testing.

Every subcommand is deterministic given its flags and seed, and every
output file is accompanied by a run manifest (JSON sidecar) recording the
subcommand, the full parameter set, the seed, the package version, and
timestamps.  Exit codes: 0 success, 2 usage or input error, 3 degenerate
data (e.g. tuning requested on an all-zero sample).
"""

import argparse
import datetime
import json
import os
import sys

import numpy as np

from . import __version__
from .errors import DegenerateSample, DomainError, TweedieKdeError
from .estimator import (
    EvaluationGrid,
    SemicontinuousSample,
    default_grid,
    evaluate_grid,
    zero_mass_estimate,
)
from .gof import GofConfig, run_test
from .kernel import dispersion_from_zero_mass, validate_power
from .kernel import sample as tweedie_sample
from .scenarios import ScenarioConfig, run_monte_carlo
from .selection import (
    DEFAULT_NUM_BANDWIDTHS,
    DEFAULT_NUM_POWERS,
    GridSpec,
    default_grids,
    profile_select,
)

THREADS_ENV_VAR = "TWEEDIE_KDE_THREADS"

_EXIT_OK = 0
_EXIT_USAGE = 2
_EXIT_DEGENERATE = 3


def _fmt(x):
    """17-significant-digit decimal form; round-trips float64 exactly."""
    return format(float(x), ".17g")


def _fail(message, code=_EXIT_USAGE):
    print(f"error: {message}", file=sys.stderr)
    return code


def _default_threads():
    raw = os.environ.get(THREADS_ENV_VAR, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _write_manifest(out_path, subcommand, params, seed, outputs):
    manifest = {
        "subcommand": subcommand,
        "parameters": params,
        "seed": seed,
        "version": __version__,
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "outputs": outputs,
    }
    path = f"{out_path}.manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def read_values(path):
    """Read one nonnegative value per line; a single leading 'x' header is allowed."""
    values = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if lineno == 1 and line == "x":
                continue
            try:
                val = float(line)
            except ValueError:
                raise DomainError(f"line {lineno}: not a number: {line!r}")
            if not np.isfinite(val) or val < 0.0:
                raise DomainError(
                    f"line {lineno}: values must be finite and >= 0, got {line!r}"
                )
            values.append(val)
    if not values:
        raise DomainError(f"no data values found in {path}")
    return np.array(values)


def write_values(path, values):
    with open(path, "w") as fh:
        fh.write("x\n")
        for v in values:
            fh.write(_fmt(v) + "\n")


def read_estimate_csv(path):
    """Read back an estimate CSV written by cmd_estimate."""
    xs, gs = [], []
    with open(path) as fh:
        header = fh.readline()
        if header.strip() != "x,g_hat":
            raise DomainError(f"unexpected estimate header {header!r}")
        for line in fh:
            sx, sg = line.strip().split(",")
            xs.append(float(sx))
            gs.append(float(sg))
    return np.array(xs), np.array(gs)


def _load_sample(path, round_tiny):
    return SemicontinuousSample(read_values(path), round_tiny=round_tiny)


def cmd_sample(args):
    if args.phi is None and args.p0 is None:
        return _fail("either --phi or --p0 is required")
    if args.phi is not None and args.p0 is not None:
        return _fail("--phi and --p0 are mutually exclusive")
    validate_power(args.power)
    phi = args.phi
    if phi is None:
        phi = dispersion_from_zero_mass(args.mu, args.power, args.p0)
    values = tweedie_sample(args.mu, phi, args.power, args.n, args.seed)
    write_values(args.out, values)
    _write_manifest(
        args.out, "sample",
        {"mu": args.mu, "phi": phi, "power": args.power, "n": args.n,
         "p0": args.p0},
        args.seed, [args.out],
    )
    return _EXIT_OK


def cmd_estimate(args):
    sample = _load_sample(args.data, args.round_tiny)
    tuning_requested = args.h is None or args.power is None
    if sample.positive.size == 0 and tuning_requested:
        return _fail("all observations are zero; tuning is undefined",
                     _EXIT_DEGENERATE)
    if args.grid_max is not None:
        if args.grid_max <= 0.0:
            return _fail("--grid-max must be > 0")
        dx = args.grid_max / args.grid_size
        grid = EvaluationGrid(np.linspace(dx, args.grid_max, args.grid_size))
    elif sample.positive.size:
        grid = default_grid(sample, size=args.grid_size)
    else:
        return _fail("all observations are zero; provide --grid-max",
                     _EXIT_DEGENERATE)
    if tuning_requested:
        sel = profile_select(sample, default_grids(sample), grid)
        h, p = sel.h_star, sel.p_star
    else:
        h, p = args.h, args.power
        validate_power(p)
        if h <= 0.0:
            return _fail("--h must be > 0")
    est = evaluate_grid(sample, grid, h, p)
    with open(args.out, "w") as fh:
        fh.write("x,g_hat\n")
        for x, g in zip(est.grid.points, est.values):
            fh.write(f"{_fmt(x)},{_fmt(g)}\n")
    header_path = f"{args.out}.json"
    with open(header_path, "w") as fh:
        json.dump(
            {"p0_hat": zero_mass_estimate(sample), "h": h, "p": p,
             "n": sample.n},
            fh, indent=2,
        )
        fh.write("\n")
    _write_manifest(
        args.out, "estimate",
        {"data": args.data, "h": args.h, "power": args.power,
         "grid_max": args.grid_max, "grid_size": args.grid_size,
         "round_tiny": args.round_tiny},
        None, [args.out, header_path],
    )
    return _EXIT_OK


def cmd_select(args):
    sample = _load_sample(args.data, args.round_tiny)
    if sample.positive.size == 0:
        return _fail("all observations are zero; selection is undefined",
                     _EXIT_DEGENERATE)
    if args.pmin is not None or args.pmax is not None:
        pmin = args.pmin if args.pmin is not None else 1.05
        pmax = args.pmax if args.pmax is not None else 1.95
        p_grid = np.linspace(pmin, pmax, args.np)
    else:
        p_grid = None
    if args.hmin is not None or args.hmax is not None:
        if args.hmin is None or args.hmax is None:
            return _fail("--hmin and --hmax must be given together")
        h_grid = np.geomspace(args.hmin, args.hmax, args.nh)
    else:
        h_grid = None
    grids = default_grids(sample, num_powers=args.np, num_bandwidths=args.nh)
    if p_grid is not None or h_grid is not None:
        grids = GridSpec(
            h_grid=h_grid if h_grid is not None else grids.h_grid,
            p_grid=p_grid if p_grid is not None else grids.p_grid,
        )
    sel = profile_select(sample, grids, default_grid(sample, size=args.grid_size))
    payload = {
        "p_star": sel.p_star,
        "h_star": sel.h_star,
        "p_grid": sel.grids.p_grid.tolist(),
        "h_grid": sel.grids.h_grid.tolist(),
        "cv_table": sel.cv_table.tolist(),
        "h_star_by_p": sel.h_star_by_p.tolist(),
        "cv_star_by_p": sel.cv_star_by_p.tolist(),
    }
    with open(args.out, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    _write_manifest(
        args.out, "select",
        {"data": args.data, "np": args.np, "nh": args.nh, "pmin": args.pmin,
         "pmax": args.pmax, "hmin": args.hmin, "hmax": args.hmax,
         "grid_size": args.grid_size, "round_tiny": args.round_tiny},
        None, [args.out],
    )
    return _EXIT_OK


def cmd_simulate(args):
    config = ScenarioConfig(
        scenario=args.scenario, n=args.n, p0=args.p0, seed=args.seed,
        replicates=args.reps,
    )
    summary = run_monte_carlo(config, threads=args.threads)
    with open(args.out, "w") as fh:
        fh.write("replicate,ise,iae,p_star,h_star\n")
        for r in range(config.replicates):
            fh.write(
                f"{r},{_fmt(summary.ise[r])},{_fmt(summary.iae[r])},"
                f"{_fmt(summary.p_star[r])},{_fmt(summary.h_star[r])}\n"
            )
    summary_path = f"{args.out}.summary.json"
    with open(summary_path, "w") as fh:
        json.dump(
            {"mean_ise": summary.mean_ise, "sd_ise": summary.sd_ise,
             "mean_iae": summary.mean_iae, "sd_iae": summary.sd_iae,
             "failures": list(summary.failures)},
            fh, indent=2,
        )
        fh.write("\n")
    _write_manifest(
        args.out, "simulate",
        {"scenario": args.scenario, "n": args.n, "p0": args.p0,
         "reps": args.reps, "threads": args.threads},
        args.seed, [args.out, summary_path],
    )
    return _EXIT_OK


def cmd_gof(args):
    sample = _load_sample(args.data, args.round_tiny)
    if sample.positive.size == 0:
        return _fail("all observations are zero; smoothing is undefined",
                     _EXIT_DEGENERATE)
    config = GofConfig(
        mu=args.mu, phi=args.phi, power=args.power,
        calibration_draws=args.B, level=args.level, tuning=args.policy,
    )
    result = run_test(sample, config, seed=args.seed, threads=args.threads)
    payload = {
        "statistic": result.statistic,
        "critical_value": result.critical_value,
        "reject": result.reject,
        "level": result.level,
        "calibration_draws": config.calibration_draws,
        "policy": config.tuning,
        "p_star": result.p_star,
        "h_star": result.h_star,
        "calibration_statistics": result.calibration_statistics.tolist(),
    }
    with open(args.out, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    _write_manifest(
        args.out, "gof",
        {"data": args.data, "mu": args.mu, "phi": args.phi,
         "power": args.power, "B": args.B, "level": args.level,
         "policy": args.policy, "threads": args.threads},
        args.seed, [args.out],
    )
    return _EXIT_OK


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="tweedie-kde",
        description="Tweedie kernel density estimation for semicontinuous data",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sample = sub.add_parser("sample", help="draw from a Tweedie law")
    p_sample.add_argument("--mu", type=float, required=True)
    p_sample.add_argument("--phi", type=float, default=None)
    p_sample.add_argument("--power", type=float, required=True)
    p_sample.add_argument("--n", type=int, required=True)
    p_sample.add_argument("--p0", type=float, default=None,
                          help="zero probability; derives --phi")
    p_sample.add_argument("--seed", type=int, default=0)
    p_sample.add_argument("--out", required=True)
    p_sample.set_defaults(func=cmd_sample)

    p_est = sub.add_parser("estimate", help="estimate the mixed density")
    p_est.add_argument("--data", required=True)
    p_est.add_argument("--h", type=float, default=None)
    p_est.add_argument("--power", type=float, default=None)
    p_est.add_argument("--grid-max", type=float, default=None)
    p_est.add_argument("--grid-size", type=int, default=512)
    p_est.add_argument("--round-tiny", action="store_true")
    p_est.add_argument("--out", required=True)
    p_est.set_defaults(func=cmd_estimate)

    p_sel = sub.add_parser("select", help="profile cross-validation search")
    p_sel.add_argument("--data", required=True)
    p_sel.add_argument("--np", type=int, default=DEFAULT_NUM_POWERS)
    p_sel.add_argument("--nh", type=int, default=DEFAULT_NUM_BANDWIDTHS)
    p_sel.add_argument("--pmin", type=float, default=None)
    p_sel.add_argument("--pmax", type=float, default=None)
    p_sel.add_argument("--hmin", type=float, default=None)
    p_sel.add_argument("--hmax", type=float, default=None)
    p_sel.add_argument("--grid-size", type=int, default=512)
    p_sel.add_argument("--round-tiny", action="store_true")
    p_sel.add_argument("--out", required=True)
    p_sel.set_defaults(func=cmd_select)

    p_sim = sub.add_parser("simulate", help="Monte Carlo scenario runs")
    p_sim.add_argument("--scenario", choices=["M1", "M2", "M3", "M4"],
                       required=True)
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--p0", type=float, required=True)
    p_sim.add_argument("--reps", type=int, required=True)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--threads", type=int, default=_default_threads())
    p_sim.add_argument("--out", required=True)
    p_sim.set_defaults(func=cmd_simulate)

    p_gof = sub.add_parser("gof", help="goodness-of-fit test vs a Tweedie null")
    p_gof.add_argument("--data", required=True)
    p_gof.add_argument("--mu", type=float, required=True)
    p_gof.add_argument("--phi", type=float, required=True)
    p_gof.add_argument("--power", type=float, required=True)
    p_gof.add_argument("--B", type=int, default=500)
    p_gof.add_argument("--level", type=float, default=0.05)
    p_gof.add_argument("--policy", choices=["reselect", "fixed"],
                       default="reselect")
    p_gof.add_argument("--seed", type=int, default=0)
    p_gof.add_argument("--threads", type=int, default=_default_threads())
    p_gof.add_argument("--round-tiny", action="store_true")
    p_gof.add_argument("--out", required=True)
    p_gof.set_defaults(func=cmd_gof)
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        return _fail(f"cannot read {exc.filename}")
    except DegenerateSample as exc:
        return _fail(str(exc), _EXIT_DEGENERATE)
    except (DomainError, TweedieKdeError, ValueError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front door: seeded experiments written as CSV artifacts.

Every output file starts with a comment header carrying the package version,
the seed and the full flag set, so any artifact can be replayed exactly.
Exit codes: 0 success or verified, 1 usage error, 2 domain error,
3 verification failed.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .configuration import (
    AdmissibilityError,
    Configuration,
    ProcessParams,
    Ring,
    radius_conjugate,
    write_configuration_csv,
)
from .dynamics import CoinStream, ObstacleField, coupled_run, run
from .invariance import verify_invariance, write_pushforward_csv
from .measures import (
    TransitionStructure,
    build_invariant_matrix,
    cylinder_measure,
    parry_matrix,
    periodic_point_count,
    periodic_points,
    sample_ring_configuration,
    sample_ring_word,
)
from .velocity import (
    diagram_point,
    estimate_velocity,
    extend_obstacles,
    fundamental_diagram,
    initial_ring,
    similarity_check,
    stability_sweep,
    theoretical_velocity_obstacles,
)

USAGE_ERROR, DOMAIN_ERROR, VERIFY_FAILED = 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 instead of argparse's 2
        raise _UsageError(message)


def parse_grid(text: str) -> list[float]:
    """start:stop:step (inclusive of stop up to rounding) or a single value."""
    parts = text.split(":")
    if len(parts) == 1:
        return [float(parts[0])]
    if len(parts) != 3:
        raise ValueError(f"grid must be start:stop:step, got {text!r}")
    start, stop, step_ = (float(x) for x in parts)
    if step_ <= 0 or stop < start:
        raise ValueError(f"bad grid {text!r}")
    n = int(round((stop - start) / step_))
    values = [start + k * step_ for k in range(n + 1)]
    return [v for v in values if v <= stop + 1e-9 * step_]


def _header(args: argparse.Namespace, command: str) -> str:
    fields = " ".join(
        f"{k}={v}" for k, v in sorted(vars(args).items())
        if k not in ("func", "outdir", "command") and v is not None
    )
    return f"# tasep={__version__} command={command} {fields}\n"


def _outpath(args, name: str) -> Path:
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    return outdir / name


def _write_rows(path: Path, header: str, columns: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(header)
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def _cmd_simulate(args) -> int:
    rho = args.particles / args.ring
    cfg, space = initial_ring(rho, args.v, args.r, args.particles)
    params = ProcessParams(p=args.p, v=args.v, space=space)
    summary = run(cfg, params, args.steps, CoinStream(args.seed),
                  snapshot_stride=args.snapshot_stride)
    est = estimate_velocity(summary, burn_in=args.burn_in)
    header = _header(args, "simulate")
    traj_rows = []
    for t, snap in summary.snapshots:
        for i in range(snap.n):
            traj_rows.append((t, i, float(snap.positions[i]), float(snap.winding[i])))
    _write_rows(_outpath(args, "trajectory.csv"), header,
                ["t", "particle", "position", "displacement"], traj_rows)
    _write_rows(_outpath(args, "velocity.csv"), header,
                ["v_hat", "stderr", "particles", "steps", "burn_in"],
                [(est.value, est.stderr, est.n_particles, est.steps, est.burn_in)])
    print(f"v_hat={est.value:.6f} stderr={est.stderr:.2g}")
    return 0


def _fd_point(job):
    rho, p, v, r, n_particles, steps, seed, k, burn_in, initial = job
    return diagram_point(rho, p, v, r, n_particles, steps, seed, k, burn_in, initial)


def _cmd_fundamental_diagram(args) -> int:
    grid = parse_grid(args.rho)
    if args.jobs > 1:
        jobs = [
            (rho, args.p, args.v, args.r, args.particles, args.steps, args.seed,
             k, args.burn_in, args.initial)
            for k, rho in enumerate(grid)
        ]
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_fd_point, jobs))
        rows.sort(key=lambda row: row.rho)
    else:
        rows = fundamental_diagram(grid, args.p, args.v, args.r, args.particles,
                                   args.steps, args.seed, args.burn_in, args.initial)
    _write_rows(
        _outpath(args, "fd.csv"), _header(args, "fundamental-diagram"),
        ["rho", "p", "v", "r", "V_theory", "V_hat", "stderr", "flux"],
        [(w.rho, w.p, w.v, w.r, w.v_theory, w.v_hat, w.stderr, w.flux) for w in rows],
    )
    return 0


def _cmd_verify_invariance(args) -> int:
    m = build_invariant_matrix(args.rho, args.p)
    report = verify_invariance(m, args.p, args.max_len, args.tol)
    path = _outpath(args, "invariance.csv")
    with open(path, "w") as fh:
        fh.write(_header(args, "verify-invariance"))
        write_pushforward_csv(report, fh)
    verdict = "stationary" if report.stationary else "NON-STATIONARY"
    print(f"{verdict}: max |mu' - mu| = {report.max_abs_error:.3e} over words "
          f"up to length {args.max_len}")
    return 0 if report.stationary else VERIFY_FAILED


def _cmd_measure(args) -> int:
    header = _header(args, f"measure-{args.what}")
    m = build_invariant_matrix(args.rho, args.p)
    if args.what == "matrix":
        _write_rows(_outpath(args, "matrix.csv"), header,
                    ["p00", "p01", "p10", "p11"],
                    [(m.p00, m.p01, m.p10, m.p11)])
        print(f"p00={m.p00:.6f} p01={m.p01:.6f} p10={m.p10:.6f} p11={m.p11:.6f}")
    elif args.what == "cylinder":
        from itertools import product

        rows = []
        for n in range(1, args.max_len + 1):
            for bits in product("01", repeat=n):
                word = "".join(bits)
                rows.append((word, cylinder_measure(m, word)))
        _write_rows(_outpath(args, "cylinders.csv"), header, ["word", "measure"], rows)
    else:  # sample
        if args.configuration:
            cfg = sample_ring_configuration(
                args.rho, args.p, v=args.v, r=args.r,
                n_sites=args.sites, seed=args.seed,
                randomize_offset=args.randomize_offset,
            )
            with open(_outpath(args, "sample.csv"), "w") as fh:
                fh.write(header)
                write_configuration_csv(cfg, fh)
        else:
            word = sample_ring_word(m, args.sites, args.seed)
            _write_rows(_outpath(args, "sample.csv"), header, ["word"], [(word,)])
            print(word)
    return 0


def _cmd_periodic_points(args) -> int:
    ts = {
        "no-11": TransitionStructure.no_adjacent_ones,
        "no-00": TransitionStructure.no_adjacent_zeros,
        "full": TransitionStructure.full_shift,
    }[args.structure]()
    count = periodic_point_count(ts, args.n)
    header = _header(args, "periodic-points")
    if args.count_only:
        rows = [(args.n, count)]
        _write_rows(_outpath(args, "periodic_counts.csv"), header, ["n", "count"], rows)
    else:
        points = periodic_points(ts, args.n)
        if len(points) != count:
            raise RuntimeError("enumeration disagrees with trace count")
        _write_rows(_outpath(args, "periodic_points.csv"), header, ["word"],
                    [(w,) for w in points])
    pm = parry_matrix(ts)
    print(f"n={args.n} count={count} parry_p11={pm.p11:.6f} entropy={ts.entropy:.6f}")
    return 0


def _cmd_stability_sweep(args) -> int:
    p_values = [float(x) for x in args.p_list.split(",")]
    rows = stability_sweep(args.rho, args.v, args.r, p_values,
                           args.particles, args.steps, args.seed, args.burn_in)
    _write_rows(
        _outpath(args, "sweep.csv"), _header(args, "stability-sweep"),
        ["p", "V_theory", "V_hat", "stderr", "measure_dist"],
        [(w.p, w.v_theory, w.v_hat, w.stderr, w.measure_dist) for w in rows],
    )
    return 0


def _cmd_obstacles(args) -> int:
    if args.obstacles_csv:
        z = np.loadtxt(args.obstacles_csv, delimiter=",", ndmin=1)
        field = ObstacleField(Ring(args.ring), z)
    else:
        spacing = args.ring / args.count
        field = ObstacleField(Ring(args.ring), np.arange(args.count) * spacing)
    extended = extend_obstacles(field, args.v)
    rho_ext = extended.density()
    n_particles = int(round(args.rho_x * args.ring))
    pos = np.arange(n_particles) * (args.ring / n_particles)
    cfg = Configuration(Ring(args.ring), pos, 0.0)
    params = ProcessParams(p=args.p, v=args.v, space="continuum")
    summary = run(cfg, params, args.steps, CoinStream(args.seed), field=field)
    est = estimate_velocity(summary, burn_in=args.burn_in)
    theory = theoretical_velocity_obstacles(n_particles / args.ring, rho_ext, args.p)
    _write_rows(
        _outpath(args, "obstacles.csv"), _header(args, "obstacles"),
        ["rho_x", "rho_extended", "p", "v", "V_theory", "V_hat", "stderr"],
        [(n_particles / args.ring, rho_ext, args.p, args.v, theory, est.value, est.stderr)],
    )
    print(f"rho_ext={rho_ext:.6f} V_theory={theory:.6f} V_hat={est.value:.6f}")
    return 0


def _cmd_couple_check(args) -> int:
    tol = args.tol
    coins = CoinStream(args.seed)
    rng = np.random.default_rng(args.seed)
    if args.mode == "radius":
        cfg_a, space = initial_ring(args.rho, args.v, 0.5, args.particles)
        cfg_b = radius_conjugate(cfg_a, 0.0)
        params = ProcessParams(p=args.p, v=args.v, space=space)
        result = coupled_run(cfg_a, cfg_b, params, params, args.steps, coins)
        worst = float(result.max_gap_divergence.max())
        label = "gap divergence"
    elif args.mode == "heterogeneous":
        n = args.particles
        radii = rng.uniform(0.0, 0.4, n)
        spacing = 1.0 / args.rho
        pos = np.arange(n) * spacing
        cfg_a = Configuration(Ring(n * spacing), pos, radii)
        cfg_b = radius_conjugate(cfg_a, float(radii.mean()))
        params = ProcessParams(p=args.p, v=args.v, space="continuum")
        result = coupled_run(cfg_a, cfg_b, params, params, args.steps, coins)
        worst = float(result.max_displacement_divergence.max())
        label = "displacement divergence"
    else:  # similarity
        cfg, _ = initial_ring(args.rho, args.v, 0.0, args.particles)
        params = ProcessParams(p=args.p, v=args.v, space="continuum")
        report = similarity_check(cfg, params, args.u, args.steps, coins)
        worst = report.max_displacement_error
        label = f"scaled displacement divergence (u={args.u})"
    _write_rows(
        _outpath(args, "couple.csv"), _header(args, "couple-check"),
        ["mode", "max_divergence", "tol"], [(args.mode, worst, tol)],
    )
    print(f"{label}: {worst:.3e} (tol {tol:.1e})")
    return 0 if worst <= tol else VERIFY_FAILED


def build_parser() -> _Parser:
    parser = _Parser(prog="tasep", description=__doc__)
    parser.add_argument("--outdir", default=os.environ.get("TASEP_OUTDIR", "."),
                        help="output directory (default $TASEP_OUTDIR or .)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common_run(q, particles=10_000, steps=5_000):
        q.add_argument("--p", type=float, default=1.0)
        q.add_argument("--v", type=float, default=1.0)
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--steps", type=int, default=steps)
        q.add_argument("--particles", type=int, default=particles)
        q.add_argument("--burn-in", type=int, default=None)

    q = sub.add_parser("simulate", help="run one seeded trajectory")
    q.add_argument("--ring", type=float, required=True, help="ring circumference")
    q.add_argument("--r", type=float, default=0.0)
    q.add_argument("--snapshot-stride", type=int, default=None)
    common_run(q, particles=500)
    q.set_defaults(func=_cmd_simulate)

    q = sub.add_parser("fundamental-diagram", help="velocity vs density grid")
    q.add_argument("--rho", required=True, help="grid start:stop:step or value")
    q.add_argument("--r", type=float, default=0.0)
    q.add_argument("--jobs", type=int, default=1)
    q.add_argument("--initial", choices=["even", "sampled"], default="even")
    common_run(q, steps=20_000)
    q.set_defaults(func=_cmd_fundamental_diagram)

    q = sub.add_parser("verify-invariance", help="exact cylinder pushforward check")
    q.add_argument("--rho", type=float, required=True)
    q.add_argument("--p", type=float, required=True)
    q.add_argument("--max-len", type=int, default=6)
    q.add_argument("--tol", type=float, default=1e-10)
    q.set_defaults(func=_cmd_verify_invariance)

    q = sub.add_parser("measure", help="emit matrices, cylinder tables or samples")
    q.add_argument("what", choices=["matrix", "cylinder", "sample"])
    q.add_argument("--rho", type=float, required=True)
    q.add_argument("--p", type=float, required=True)
    q.add_argument("--max-len", type=int, default=4)
    q.add_argument("--sites", type=int, default=100)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--v", type=float, default=1.0)
    q.add_argument("--r", type=float, default=0.0)
    q.add_argument("--configuration", action="store_true",
                   help="sample a transported ring configuration instead of a word")
    q.add_argument("--randomize-offset", action="store_true")
    q.set_defaults(func=_cmd_measure)

    q = sub.add_parser("periodic-points", help="cyclic words of a subshift")
    q.add_argument("--structure", choices=["no-11", "no-00", "full"], default="no-11")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--count-only", action="store_true")
    q.set_defaults(func=_cmd_periodic_points)

    q = sub.add_parser("stability-sweep", help="p -> 1 velocities and measure distances")
    q.add_argument("--rho", type=float, required=True)
    q.add_argument("--r", type=float, default=0.0)
    q.add_argument("--p-list", default="0.9,0.99,0.999")
    common_run(q, particles=2_000, steps=4_000)
    q.set_defaults(func=_cmd_stability_sweep)

    q = sub.add_parser("obstacles", help="velocity among static obstacles")
    q.add_argument("--ring", type=float, required=True)
    q.add_argument("--rho-x", dest="rho_x", type=float, required=True,
                   help="particle density; the count is rho_x * ring")
    q.add_argument("--count", type=int, default=100, help="evenly spaced obstacles")
    q.add_argument("--obstacles-csv", default=None)
    q.add_argument("--p", type=float, default=1.0)
    q.add_argument("--v", type=float, default=1.0)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--steps", type=int, default=20_000)
    q.add_argument("--burn-in", type=int, default=None)
    q.set_defaults(func=_cmd_obstacles)

    q = sub.add_parser("couple-check", help="exactness of statically coupled runs")
    q.add_argument("--mode", choices=["radius", "heterogeneous", "similarity"],
                   default="radius")
    q.add_argument("--rho", type=float, default=0.3)
    q.add_argument("--u", type=float, default=2.0)
    q.add_argument("--tol", type=float, default=1e-9)
    common_run(q, particles=1_000, steps=1_000)
    q.set_defaults(func=_cmd_couple_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    try:
        return args.func(args)
    except (AdmissibilityError, ValueError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return DOMAIN_ERROR


if __name__ == "__main__":
    sys.exit(main())

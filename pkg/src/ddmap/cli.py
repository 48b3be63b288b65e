"""Command-line interface: ``ddmap <subcommand> [options]``.

Exit status is 0 on success, 1 for invalid configuration and 2 when an orbit
diverges.  CSV numbers are written with 17 significant digits.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from functools import partial

import numpy as np

from . import analysis, ingest, svg, trajectory
from .core import (
    DEFAULT_OMEGA,
    EnergyVariant,
    KickParams,
    LogisticParams,
    energy_cycle,
    energy_cycle_derivative,
    kick_system,
    kick_velocity_derivative,
    kick_velocity_step,
    logistic_derivative,
    logistic_step,
    logistic_system,
    logistic_two_step,
    default_nu,
)
from .exceptions import DDMapError, DivergenceError

MAPS = ("kick", "logistic", "two-step-logistic")
LOGISTIC_X0 = 0.2


class ConfigError(DDMapError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def fmt(x) -> str:
    return f"{float(x):.17g}"


def parse_number(text: str) -> float:
    """Parse ``"0.25"`` or ``"1/4"``."""
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"not a number or fraction: {text!r}") from None


def parse_range(text: str) -> tuple[float, float]:
    """Parse ``"lo:hi"`` where both ends may be fractions (``7/50:1/5``)."""
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"range must look like lo:hi, got {text!r}")
    lo, hi = (parse_number(p) for p in parts)
    if not hi > lo:
        raise ConfigError(f"range must be ascending, got {text!r}")
    return lo, hi


# ---------------------------------------------------------------------------
# configuration helpers


def _nu(args):
    return default_nu(args.omega) if args.nu is None else args.nu


def kick_params(args) -> KickParams:
    if args.c is not None:
        return KickParams.from_omega_nu(args.c, args.omega, _nu(args))
    return KickParams.from_fraction(parse_number(args.c_frac), args.omega, _nu(args))


def logistic_params(args) -> LogisticParams:
    return LogisticParams(args.r)


def variant(args) -> EnergyVariant:
    return EnergyVariant(args.variant)


def one_step_map(args):
    """``(map, derivative, clamp, default_x0)`` for the selected map."""
    if args.map == "kick":
        p = kick_params(args)
        v = variant(args)
        return partial(energy_cycle, p=p, variant=v), partial(energy_cycle_derivative, p=p, variant=v), True, 1.0
    p = logistic_params(args)
    f = logistic_step if args.map == "logistic" else logistic_two_step
    return partial(f, p=p), partial(logistic_derivative, p=p), False, LOGISTIC_X0


def family(args):
    if args.map == "kick":
        return analysis.KickEnergyFamily(variant=variant(args), omega=args.omega, nu=args.nu)
    return analysis.LogisticFamily(two_step=args.map == "two-step-logistic")


def _open_out(args):
    if args.output in (None, "-"):
        return sys.stdout
    return open(args.output, "w", encoding="utf-8", newline="\n")


def _write(args, text: str):
    out = _open_out(args)
    try:
        out.write(text)
    finally:
        if out is not sys.stdout:
            out.close()


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args):
    if args.map == "kick" and args.series == "velocity":
        p = kick_params(args)
        f, clamp, x0 = partial(kick_velocity_step, p=p), False, 1.0
    else:
        f, _, clamp, x0 = one_step_map(args)
    x0 = x0 if args.x0 is None else args.x0
    orbit = analysis.iterate(f, x0, args.n, args.transient, clamp=clamp)
    ns = np.arange(args.transient + 1, args.n + 1)
    if args.format == "json":
        _write(args, _dump_json({"n": ns.tolist(), "value": orbit.samples.tolist()}))
    elif args.format == "svg":
        fig = svg.series_figure(ns, orbit.samples, title=f"{args.map} orbit", axis_values=not args.no_axis_values)
        _write(args, fig.render())
    else:
        lines = ["n,value"] + [f"{n},{fmt(v)}" for n, v in zip(ns, orbit.samples)]
        _write(args, "\n".join(lines) + "\n")


def cmd_cobweb(args):
    if args.map == "kick":
        p = kick_params(args)
        system = kick_system(p, variant(args))
        e0 = 1.0 if args.x0 is None else args.x0
        # x0 is a pre-impact energy; the two-step trace starts from its post-loss image
        trace = analysis.cobweb_trace(system, system.loss(e0), args.steps, clamp=True)
        title = f"kick gain/loss cobweb, C = {p.c_frac:.6g}/K"
    elif args.map == "two-step-logistic":
        p = logistic_params(args)
        x0 = LOGISTIC_X0 if args.x0 is None else args.x0
        trace = analysis.cobweb_trace(logistic_system(p), x0, args.steps)
        title = f"two-step logistic cobweb, r = {p.r:.6g}"
    else:
        p = logistic_params(args)
        x0 = LOGISTIC_X0 if args.x0 is None else args.x0
        trace = analysis.cobweb_trace(partial(logistic_step, p=p), x0, args.steps, domain=(0.0, 1.0))
        title = f"logistic cobweb, r = {p.r:.6g}"
    if args.format == "csv":
        lines = ["index,tag,x0,y0,x1,y1"]
        lines += [
            f"{i},{s.tag},{fmt(s.x0)},{fmt(s.y0)},{fmt(s.x1)},{fmt(s.y1)}"
            for i, s in enumerate(trace.segments)
        ]
        _write(args, "\n".join(lines) + "\n")
    elif args.format == "json":
        segs = [{"tag": s.tag, "x0": s.x0, "y0": s.y0, "x1": s.x1, "y1": s.y1} for s in trace.segments]
        _write(args, _dump_json({"segments": segs}))
    else:
        _write(args, svg.cobweb_figure(trace, title=title, axis_values=not args.no_axis_values).render())


def cmd_bifurcate(args):
    fam = family(args)
    if args.range is not None:
        lo, hi = parse_range(args.range)
    else:
        lo, hi = (0.0, 1.0) if args.map == "kick" else (2.5, 4.0)
    # C = 0 is not a valid damping factor: drop the left end for kick sweeps
    include_left = not (args.map == "kick" and lo <= 0.0)
    diagram = analysis.bifurcation_sweep(
        fam, (lo, hi), args.grid, x0=args.x0, transient=args.transient, keep=args.keep,
        p_max=args.p_max, tol=args.tol, warm_start=not args.cold, include_left=include_left,
        n_jobs=args.jobs,
    )
    lines = ["param,sample_index,value,period"]
    lines += [f"{fmt(c)},{j},{fmt(v)},{per}" for c, j, v, per in diagram.rows()]
    _write(args, "\n".join(lines) + "\n")
    if args.svg:
        xlabel = "C (units of 1/K)" if args.map == "kick" else "r"
        fig = svg.bifurcation_figure(diagram, title=f"{args.map} bifurcation diagram", xlabel=xlabel,
                                     axis_values=not args.no_axis_values)
        with open(args.svg, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(fig.render())


def cmd_fixed_points(args):
    f, df, _, _ = one_step_map(args)
    if args.domain is not None:
        domain = parse_range(args.domain)
    else:
        domain = (0.0, 50.0) if args.map == "kick" else (0.0, 1.0)
    fps = analysis.fixed_points(f, df, domain, args.grid)
    _write(args, _dump_json(fps.to_dicts()))


def cmd_lyapunov(args):
    if args.map == "kick" and args.series == "velocity":
        p = kick_params(args)
        f, df, clamp, x0 = partial(kick_velocity_step, p=p), partial(kick_velocity_derivative, p=p), False, 1.0
    else:
        f, df, clamp, x0 = one_step_map(args)
    x0 = x0 if args.x0 is None else args.x0
    lam = analysis.lyapunov(f, df, x0, args.n, args.transient, clamp=clamp)
    _write(args, fmt(lam) + "\n")


def cmd_trajectory(args):
    if args.map != "kick":
        raise ConfigError("trajectory needs --map kick")
    p = kick_params(args)
    path = trajectory.simulate_walk(p, args.v0, args.impacts, args.L, args.dt, args.transient)
    stats = trajectory.path_stats(path, args.bin_width)
    ns = np.arange(args.transient + 1, args.transient + args.impacts + 1)
    if args.format == "json":
        _write(args, _dump_json({
            "n": ns.tolist(), "x_wrapped": path.positions.tolist(),
            "x_unwrapped": path.unwrapped.tolist(), "v": path.velocities.tolist(),
            "stats": {"mean_speed": stats.mean_speed, "direction_switches": stats.direction_switch_count,
                      "occupied_bins": stats.occupied_bins},
        }))
    elif args.format == "svg":
        fig = svg.series_figure(ns, path.unwrapped, title="walker position (unwrapped)", ylabel="x",
                                axis_values=not args.no_axis_values)
        _write(args, fig.render())
    else:
        lines = ["n,x_wrapped,x_unwrapped,v"]
        lines += [
            f"{n},{fmt(a)},{fmt(b)},{fmt(v)}"
            for n, a, b, v in zip(ns, path.positions, path.unwrapped, path.velocities)
        ]
        _write(args, "\n".join(lines) + "\n")
    print(
        f"mean_speed={fmt(stats.mean_speed)} direction_switches={stats.direction_switch_count} "
        f"occupied_bins={stats.occupied_bins}",
        file=sys.stderr,
    )


def cmd_ingest(args):
    if args.input == "-":
        records = ingest.parse_impacts(sys.stdin)
    else:
        with open(args.input, encoding="utf-8") as fh:
            records = ingest.parse_impacts(fh)
    series = ingest.energy_series(records)
    gain, loss = ingest.fit_curves(series, args.loss_kind, args.gain_kind, args.bins, args.degree)
    _write(args, _dump_json(ingest.fit_report(series, gain, loss)))


def cmd_synth(args):
    p = kick_params(args)
    records = ingest.synthetic_impacts(p, args.impacts, args.v0, args.noise, args.relative_noise, args.seed)
    _write(args, ingest.format_impacts(records))


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--map", choices=MAPS, default="kick")
    cgroup = common.add_mutually_exclusive_group()
    cgroup.add_argument("--c-frac", default="1/6", help="C as a fraction of 1/K, e.g. 1/6 (default)")
    cgroup.add_argument("--c", type=float, default=None, help="absolute damping factor C")
    common.add_argument("--r", type=float, default=3.3, help="logistic growth rate")
    common.add_argument("--omega", type=float, default=DEFAULT_OMEGA)
    common.add_argument("--nu", type=float, default=None, help="default omega^2/(8.4 pi^2)")
    common.add_argument("--variant", choices=[v.value for v in EnergyVariant], default="exact-square")
    common.add_argument("--x0", type=float, default=None)
    common.add_argument("-o", "--output", default=None, help="output file (default stdout)")
    common.add_argument("--no-axis-values", action="store_true")
    common.add_argument("--seed", type=int, default=0)

    parser = _Parser(prog="ddmap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", parents=[common], help="iterate a map and write its orbit")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--transient", type=int, default=0)
    p.add_argument("--series", choices=("energy", "velocity"), default="energy")
    p.add_argument("--format", choices=("csv", "json", "svg"), default="csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("cobweb", parents=[common], help="cobweb plot (SVG) or segment list")
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--format", choices=("svg", "csv", "json"), default="svg")
    p.set_defaults(func=cmd_cobweb)

    p = sub.add_parser("bifurcate", parents=[common], help="bifurcation sweep to CSV")
    p.add_argument("--range", default=None, help="lo:hi; for kick in units of 1/K (default 0:1)")
    p.add_argument("--grid", type=int, default=2000)
    p.add_argument("--transient", type=int, default=analysis.TRANSIENT)
    p.add_argument("--keep", type=int, default=analysis.KEEP)
    p.add_argument("--p-max", type=int, default=analysis.P_MAX)
    p.add_argument("--tol", type=float, default=analysis.PERIOD_TOL)
    p.add_argument("--cold", action="store_true", help="restart every grid point from x0")
    p.add_argument("--jobs", type=int, default=None, help="worker processes for cold sweeps")
    p.add_argument("--svg", default=None, help="also write an SVG diagram here")
    p.set_defaults(func=cmd_bifurcate)

    p = sub.add_parser("fixed-points", parents=[common], help="fixed points as JSON")
    p.add_argument("--domain", default=None, help="lo:hi (default 0:50 for kick, 0:1 logistic)")
    p.add_argument("--grid", type=int, default=20001)
    p.set_defaults(func=cmd_fixed_points)

    p = sub.add_parser("lyapunov", parents=[common], help="Lyapunov exponent")
    p.add_argument("--n", type=int, default=10**6)
    p.add_argument("--transient", type=int, default=1000)
    p.add_argument("--series", choices=("energy", "velocity"), default="energy")
    p.set_defaults(func=cmd_lyapunov)

    p = sub.add_parser("trajectory", parents=[common], help="walker path on the annulus")
    p.add_argument("--impacts", type=int, default=9)
    p.add_argument("--v0", type=float, default=1.0)
    p.add_argument("--L", type=float, default=trajectory.DEFAULT_CIRCUMFERENCE)
    p.add_argument("--dt", type=float, default=trajectory.DEFAULT_DT)
    p.add_argument("--transient", type=int, default=0)
    p.add_argument("--bin-width", type=float, default=0.01)
    p.add_argument("--format", choices=("csv", "json", "svg"), default="csv")
    p.set_defaults(func=cmd_trajectory)

    p = sub.add_parser("ingest", parents=[common], help="energy gain/loss from impact CSV")
    p.add_argument("input", help="CSV file with header n,v_in,v_out ('-' for stdin)")
    p.add_argument("--loss-kind", default="linear", choices=("linear", "polynomial", "piecewise"))
    p.add_argument("--gain-kind", default="piecewise", choices=("linear", "polynomial", "piecewise"))
    p.add_argument("--bins", type=int, default=32)
    p.add_argument("--degree", type=int, default=3)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", parents=[common], help="synthetic impact CSV from the kick model")
    p.add_argument("--impacts", type=int, default=64)
    p.add_argument("--v0", type=float, default=0.3)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--relative-noise", action="store_true")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except DivergenceError as exc:
        print(f"ddmap: {exc}", file=sys.stderr)
        return 2
    except (DDMapError, ValueError, OSError) as exc:
        print(f"ddmap: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

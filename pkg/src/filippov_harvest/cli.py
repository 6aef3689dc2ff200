"""Command-line front end.

Subcommands: equilibria, sliding, simulate, scan-sp, sweep-m, basins,
bifurcations.  Every subcommand accepts the shared parameter-source flags
(--preset | --params, --set key=value ...) and writes CSV to --out (stdout
when omitted); --svg additionally writes a figure next to the CSV.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from .config import RunConfig, load_config
from .equilibria import (interior_equilibria, semi_trivial_equilibria,
                         tangent_points, boundary_equilibria)
from .errors import ConfigError, NumericsError, ParameterError
from .integrate import SimOptions, simulate
from .model import ModelParams, PsiMode
from .output import (SvgPlotSpec, csv_text, emit_svg, grid_csv_text,
                     grid_to_csv, write_csv)
from .records import Stability
from .scan import (both_exist_area_fraction, compute_basins, existence_boundary_p,
                   locate_boundary_bifurcations, scan_m_sweep, scan_sp_plane)
from .sliding import (pseudo_equilibrium, pseudo_equilibrium_y, pseudo_stability,
                      sliding_bounds, sliding_flow_derivative)

log = logging.getLogger(__name__)


def _parse_range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(part) for part in text.split(":"))
    except ValueError:
        raise ConfigError(f"expected a range like 0.05:0.8, got {text!r}") from None
    if not hi > lo:
        raise ConfigError(f"range must be increasing, got {text!r}")
    return lo, hi


def _parse_resolution(text: str):
    if "x" in text:
        a, _, b = text.partition("x")
        return int(a), int(b)
    return int(text)


def _emit(config: RunConfig, header, rows, comments=()) -> None:
    if config.out is None:
        sys.stdout.write(csv_text(header, rows, comments=list(comments)))
    else:
        write_csv(config.out, header, rows, comments=list(comments))


def _svg_path(out_path: str) -> str:
    root, _ = os.path.splitext(out_path)
    return root + ".svg"


# -- subcommands ---------------------------------------------------------------


def _cmd_equilibria(config: RunConfig, args) -> int:
    params = config.params
    header = ["mode", "x", "y", "kind", "placement", "stability",
              "eig1_re", "eig1_im", "eig2_re", "eig2_im"]
    rows = []

    def eig_cols(record):
        if record.eigenvalues is None:
            return (float("nan"),) * 4
        (e1, e2) = record.eigenvalues
        return e1.real, e1.imag, e2.real, e2.imag

    for mode in PsiMode:
        for record in (semi_trivial_equilibria(params, mode)
                       + interior_equilibria(params, mode)):
            rows.append([mode.label, record.x, record.y, record.kind.value,
                         record.placement.value, record.stability.value,
                         *eig_cols(record)])
    for record in boundary_equilibria(params):
        rows.append([record.mode.label, record.x, record.y, record.kind.value,
                     record.placement.value, record.stability.value,
                     *eig_cols(record)])
    pseudo = pseudo_equilibrium(params)
    if pseudo is not None:
        rows.append(["sliding", pseudo.x, pseudo.y, pseudo.kind.value,
                     pseudo.placement.value, pseudo.stability.value,
                     *eig_cols(pseudo)])
    _emit(config, header, rows)
    return 0


def _cmd_sliding(config: RunConfig, args) -> int:
    params = config.params
    bounds = sliding_bounds(params)
    y1 = pseudo_equilibrium_y(params)
    exists = (not bounds.is_empty) and bounds.contains(y1, closed=False)
    if exists:
        phi_prime = sliding_flow_derivative(y1, params)
        stability = pseudo_stability(params).value
    else:
        phi_prime = float("nan")
        stability = "-"
    header = ["S", "y_lower", "y_upper", "y_pseudo", "exists", "phi_prime", "stability"]
    _emit(config, header, [[params.S, bounds.y_lower, bounds.y_upper, y1,
                            exists, phi_prime, stability]])
    return 0


def _phase_portrait(trajectory, params: ModelParams) -> SvgPlotSpec:
    bounds = sliding_bounds(params)
    markers = []
    for mode in PsiMode:
        for record in interior_equilibria(params, mode):
            kind = "stable" if record.stability is Stability.STABLE else "irrelevant"
            label = "E1" if mode is PsiMode.NONHARVEST else "E2"
            markers.append((record.x, record.y, kind, label))
    pseudo = pseudo_equilibrium(params)
    if pseudo is not None:
        kind = "pseudo" if pseudo.stability is Stability.STABLE else "irrelevant"
        markers.append((pseudo.x, pseudo.y, kind, "EP"))
    if params.S < params.k1:
        for i, tangent in enumerate(tangent_points(params), start=1):
            if tangent.location.y >= 0.0:
                markers.append((tangent.location.x, tangent.location.y,
                                "tangent", f"T{i}"))
    return SvgPlotSpec(
        title=f"phase portrait (S={params.S:g})",
        x_label="prey density x",
        y_label="predator density y",
        series=[(seg.regime.value, seg.states) for seg in trajectory.segments],
        manifold_x=params.S,
        sliding_segment=(None if bounds.is_empty
                         else (max(bounds.y_lower, 0.0), bounds.y_upper)),
        markers=markers,
    )


def _cmd_simulate(config: RunConfig, args) -> int:
    options = SimOptions(t_end=args.t_end, rtol=args.rtol, atol=args.atol,
                         event_tol=args.event_tol,
                         attractor_radius=args.radius,
                         attractor_dwell=args.dwell)
    trajectory = simulate((args.x0, args.y0), config.params, options)
    header = ["t", "x", "y", "regime"]
    rows = [[t, state[0], state[1], seg.regime.value]
            for seg in trajectory.segments
            for t, state in zip(seg.times, seg.states)]
    _emit(config, header, rows)
    if config.svg:
        emit_svg(_phase_portrait(trajectory, config.params), _svg_path(config.out))
    attractor = trajectory.attractor
    log.info("terminal event %s at t=%.6g%s", trajectory.terminal_event.value,
             trajectory.final_time,
             f", attractor {attractor.kind.value}" if attractor else "")
    return 0


def _cmd_scan_sp(config: RunConfig, args) -> int:
    grid = scan_sp_plane(config.params, _parse_range(args.s_range),
                         _parse_range(args.p_range),
                         _parse_resolution(args.resolution))
    if config.out is None:
        sys.stdout.write(grid_csv_text(grid))
    else:
        grid_to_csv(grid, config.out)
        if config.svg:
            emit_svg(SvgPlotSpec(title="region scan", x_label="threshold S",
                                 y_label="predation rate p", heatmap=grid),
                     _svg_path(config.out))
    return 0


def _cmd_sweep_m(config: RunConfig, args) -> int:
    m_values = [float(v) for v in args.m_values.split(",")]
    grids = scan_m_sweep(config.params, m_values, _parse_range(args.s_range),
                         _parse_range(args.p_range),
                         _parse_resolution(args.resolution))
    header = ["m", "existence_p_nonharvest", "existence_p_harvest",
              "both_exist_area_fraction"]
    rows = []
    for m_value, grid in zip(m_values, grids):
        base = replace(config.params, m=m_value)
        rows.append([m_value,
                     existence_boundary_p(base, PsiMode.NONHARVEST),
                     existence_boundary_p(base, PsiMode.HARVEST),
                     both_exist_area_fraction(grid)])
        if config.out is not None:
            root, ext = os.path.splitext(config.out)
            grid_to_csv(grid, f"{root}_m{m_value:g}{ext or '.csv'}")
    _emit(config, header, rows)
    return 0


def _cmd_basins(config: RunConfig, args) -> int:
    params = config.params
    x_range = _parse_range(args.x_range) if args.x_range else (0.0, params.k1)
    y_range = _parse_range(args.y_range) if args.y_range else (0.0, 1.2 * params.k2)
    sim = SimOptions(t_end=args.t_end, rtol=args.rtol, atol=args.atol,
                     attractor_radius=args.radius, attractor_dwell=args.dwell)
    grid = compute_basins(params, x_range, y_range,
                          _parse_resolution(args.resolution), sim=sim,
                          n_jobs=args.jobs)
    if config.out is None:
        sys.stdout.write(grid_csv_text(grid))
    else:
        grid_to_csv(grid, config.out)
        if config.svg:
            emit_svg(SvgPlotSpec(title=f"basins of attraction (S={params.S:g})",
                                 x_label="initial prey density",
                                 y_label="initial predator density",
                                 heatmap=grid, manifold_x=params.S),
                     _svg_path(config.out))
    return 0


def _cmd_bifurcations(config: RunConfig, args) -> int:
    params = config.params
    if args.s_range:
        s_range = _parse_range(args.s_range)
    else:
        s_range = (0.05, 0.95 * params.k1)
    header = ["S", "mode", "observed_type",
              "eig1_re", "eig1_im", "eig2_re", "eig2_im"]
    rows = []
    for rec in locate_boundary_bifurcations(params, s_range):
        e1, e2 = rec.eigenvalues
        rows.append([rec.S, rec.mode.label, rec.observed_type,
                     e1.real, e1.imag, e2.real, e2.imag])
    _emit(config, header, rows)
    return 0


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", help="built-in parameter set (A1 or A2)")
    common.add_argument("--params", help="JSON file with the twelve model parameters")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one parameter (repeatable)")
    common.add_argument("--out", help="output CSV path (stdout when omitted)")
    common.add_argument("--svg", action="store_true",
                        help="also write an SVG figure next to --out")
    common.add_argument("--seed", type=int,
                        help="seed for randomized property-test drivers; "
                             "the core computations are deterministic")

    parser = argparse.ArgumentParser(
        prog="filippov-harvest",
        description="Simulation and bifurcation analysis of a predator-prey "
                    "system with prey refuge and threshold-triggered harvesting")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("equilibria", parents=[common],
                   help="classify all equilibria for one parameter set")
    sub.add_parser("sliding", parents=[common],
                   help="sliding-segment bounds and pseudo-equilibrium")

    p_sim = sub.add_parser("simulate", parents=[common],
                           help="integrate one trajectory")
    p_sim.add_argument("--x0", type=float, required=True)
    p_sim.add_argument("--y0", type=float, required=True)
    p_sim.add_argument("--t-end", type=float, default=500.0)
    p_sim.add_argument("--rtol", type=float, default=1e-8)
    p_sim.add_argument("--atol", type=float, default=1e-10)
    p_sim.add_argument("--event-tol", type=float, default=1e-9)
    p_sim.add_argument("--radius", type=float, default=1e-4,
                       help="attractor detection radius")
    p_sim.add_argument("--dwell", type=float, default=2.0,
                       help="time the state must stay within the radius")

    p_scan = sub.add_parser("scan-sp", parents=[common],
                            help="classify an (S, p) parameter grid")
    p_scan.add_argument("--s-range", default="0.05:0.8")
    p_scan.add_argument("--p-range", default="0.05:0.9")
    p_scan.add_argument("--resolution", default="200",
                        help="N or N_SxN_P cells per axis")

    p_sweep = sub.add_parser("sweep-m", parents=[common],
                             help="repeat the (S, p) scan for several refuge fractions")
    p_sweep.add_argument("--m-values", default="0.4,0.8,0.9")
    p_sweep.add_argument("--s-range", default="0.05:0.8")
    p_sweep.add_argument("--p-range", default="0.05:0.9")
    p_sweep.add_argument("--resolution", default="200")

    p_bas = sub.add_parser("basins", parents=[common],
                           help="basin-of-attraction grid")
    p_bas.add_argument("--x-range", help="default 0:k1")
    p_bas.add_argument("--y-range", help="default 0:1.2*k2")
    p_bas.add_argument("--resolution", default="400")
    p_bas.add_argument("--t-end", type=float, default=200.0)
    p_bas.add_argument("--rtol", type=float, default=1e-6)
    p_bas.add_argument("--atol", type=float, default=1e-9)
    p_bas.add_argument("--radius", type=float, default=1e-3)
    p_bas.add_argument("--dwell", type=float, default=1.0)
    p_bas.add_argument("--jobs", type=int, default=-1,
                       help="worker processes for the grid (-1 = all cores)")

    p_bif = sub.add_parser("bifurcations", parents=[common],
                           help="locate boundary-collision thresholds")
    p_bif.add_argument("--s-range", help="default 0.05:0.95*k1")
    return parser


_COMMANDS = {
    "equilibria": _cmd_equilibria,
    "sliding": _cmd_sliding,
    "simulate": _cmd_simulate,
    "scan-sp": _cmd_scan_sp,
    "sweep-m": _cmd_sweep_m,
    "basins": _cmd_basins,
    "bifurcations": _cmd_bifurcations,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = load_config(args)
        if config.seed is not None:
            np.random.seed(config.seed)
        return _COMMANDS[args.command](config, args)
    except (ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericsError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()

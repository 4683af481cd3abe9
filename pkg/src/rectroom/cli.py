"""Command-line interface.

Every subcommand writes one CSV (``--out``, default stdout) with complex
values split into ``re_*``/``im_*`` columns.  With ``--out`` a sidecar
``<out>.meta.json`` records the configuration, solver parameters, timings
and every warning raised on the way.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import os
import sys
import time
import warnings
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from rectroom import __version__
from rectroom.config import load_config
from rectroom.core import AxisBoundary, RoomSpec, SolverParams, make_gamma, make_wave_context
from rectroom.eigensolver import expected_count, fallback_region, solve_axis
from rectroom.errors import ConfigError, NumericalError, RectRoomError
from rectroom.greens import green_eval, transfer_function
from rectroom.metrics import frac, l2_relative_error, uniform_points
from rectroom.modal import build_basis
from rectroom.modes import mode_values
from rectroom.oracle import SearchRegion, enumerate_roots
from rectroom.reference import fdm_green_2d, green_1d_closed_form

log = logging.getLogger("rectroom")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    return str(v)


class Run:
    """Collects output rows and metadata for one invocation."""

    def __init__(self, args, argv):
        self.args = args
        self.meta = {"version": __version__, "command": args.command, "argv": list(argv), "notes": []}
        self.header: List[str] = []
        self.rows: List[Sequence] = []
        self.t0 = time.perf_counter()

    def note(self, text: str):
        self.meta["notes"].append(text)

    def write(self, caught):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for r in self.rows:
            w.writerow([_fmt(v) for v in r])
        self.meta["warnings"] = [f"{c.category.__name__}: {c.message}" for c in caught]
        self.meta["timings"] = {"total_s": time.perf_counter() - self.t0}
        out = self.args.out
        if out in (None, "-"):
            sys.stdout.write(buf.getvalue())
            return
        Path(out).write_text(buf.getvalue())
        Path(str(out) + ".meta.json").write_text(json.dumps(self.meta, indent=2, default=str) + "\n")


# -- argument helpers --------------------------------------------------------------


def _floats(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _point(room: RoomSpec, text: str, corner: bool, what: str) -> np.ndarray:
    p = _floats(text)
    if p.shape != (room.dim,):
        raise UsageError(f"{what} needs {room.dim} coordinate(s), got {text!r}")
    return room.from_corner(p) if corner else p


def _freqs(args) -> np.ndarray:
    if args.freq is not None:
        if any(v is not None for v in (args.f_start, args.f_stop, args.f_step)):
            raise UsageError("use either --freq or --f-start/--f-stop/--f-step")
        return _floats(args.freq)
    if None in (args.f_start, args.f_stop, args.f_step):
        raise UsageError("frequency sweep needs --f-start, --f-stop and --f-step")
    if args.f_step <= 0 or args.f_stop < args.f_start:
        raise UsageError("need f_step > 0 and f_stop >= f_start")
    n = int(math.floor((args.f_stop - args.f_start) / args.f_step + 1e-9)) + 1
    return args.f_start + args.f_step * np.arange(n)


def _single_freq(args) -> float:
    if args.freq is None:
        raise UsageError("--freq is required")
    f = _floats(args.freq)
    if f.size != 1:
        raise UsageError("--freq takes a single value here")
    return float(f[0])


def _axes(args, room: RoomSpec) -> List[int]:
    if args.axis is None:
        return list(range(room.dim))
    if not 0 <= args.axis < room.dim:
        raise UsageError(f"--axis must lie in 0..{room.dim - 1}")
    return [args.axis]


def _eval_points(args, room: RoomSpec) -> np.ndarray:
    chosen = [v is not None for v in (args.grid, args.points, args.random_points)]
    if sum(chosen) != 1:
        raise UsageError("give exactly one of --grid, --points, --random-points")
    if args.grid is not None:
        counts = [int(v) for v in _floats(args.grid)]
        if len(counts) != room.dim or min(counts) < 1:
            raise UsageError(f"--grid needs {room.dim} positive counts")
        axes = [
            np.linspace(-l / 2, l / 2, n) if n > 1 else np.zeros(1) for n, l in zip(counts, room.lengths)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])
    if args.random_points is not None:
        return uniform_points(room.lengths, args.random_points, args.seed)
    pts = np.atleast_2d(np.loadtxt(args.points, delimiter=",", ndmin=2))
    if pts.shape[1] != room.dim:
        raise UsageError(f"--points file needs {room.dim} columns")
    return room.from_corner(pts) if args.corner_coords else pts


def _coords_out(room, pts, corner):
    return room.to_corner(pts) if corner else pts


def _coord_names(dim):
    return ["x", "y", "z"][:dim]


def _params(args, p: SolverParams) -> SolverParams:
    return p.with_n_max(args.nmax) if args.nmax is not None else p


def _load(args, run: Run):
    if not args.config:
        raise UsageError("--config is required")
    room, p, doc = load_config(args.config)
    p = _params(args, p)
    run.meta["config"] = doc
    run.meta["solver"] = dataclasses.asdict(p)
    return room, p


# -- subcommands ---------------------------------------------------------------


def cmd_eigenvalues(args, run: Run):
    room, p = _load(args, run)
    ctx = make_wave_context(room, _single_freq(args))
    run.header = ["axis", "index", "re_q", "im_q", "residual", "group", "in_disc"]
    for j in _axes(args, room):
        g = make_gamma(room.axes[j], ctx)
        rs = solve_axis(g, p, room.axes[j].length)
        run.note(f"axis {j}: {len(rs)} roots, certified {rs.expected} in disc ({rs.certified_by})")
        run.meta.setdefault("fallback", {})[str(j)] = rs.fallback_used
        for msg in rs.notes:
            run.note(f"axis {j}: {msg}")
        for i, r in enumerate(rs.roots):
            inside = abs(r.q_hat) <= p.n_max + 0.5
            run.rows.append([j, i, r.q_hat.real, r.q_hat.imag, r.residual, r.group.value, inside])


def cmd_roots_oracle(args, run: Run):
    room, p = _load(args, run)
    ctx = make_wave_context(room, _single_freq(args))
    j = _axes(args, room)[0] if args.axis is not None else 0
    if args.region is None:
        raise UsageError("--region re_min,re_max,im_min,im_max is required")
    b = _floats(args.region)
    if b.size != 4:
        raise UsageError("--region needs four numbers")
    region = SearchRegion(*b)
    g = make_gamma(room.axes[j], ctx)
    enum = enumerate_roots(region, g, tol=p.eps_newton)
    run.meta["winding"] = enum.winding
    run.note(f"axis {j}: winding count {enum.winding} over {region}")
    run.header = ["re_q", "im_q", "multiplicity"]
    for z in enum.roots:
        run.rows.append([z.real, z.imag, 1])
    for z, m in enum.clusters:
        run.rows.append([z.real, z.imag, m])


def cmd_basis(args, run: Run):
    room, p = _load(args, run)
    ctx = make_wave_context(room, _single_freq(args))
    run.header = ["axis", "n", "re_q", "im_q", "re_b", "im_b", "re_lambda", "im_lambda", "near_defective"]
    for j in _axes(args, room):
        basis = build_basis(room.axes[j], ctx, p)
        if basis.rootset is not None:
            for msg in basis.rootset.notes:
                run.note(f"axis {j}: {msg}")
        for n, e in enumerate(basis.entries):
            run.rows.append(
                [j, n, e.q_hat.real, e.q_hat.imag, e.b_hat.real, e.b_hat.imag, e.lam.real, e.lam.imag, e.near_defective]
            )


def _grid_rows(run: Run, room, pts, values, corner):
    run.header = _coord_names(room.dim) + ["re_G", "im_G"]
    for x, v in zip(_coords_out(room, pts, corner), values):
        run.rows.append([*x, v.real, v.imag])


def cmd_green(args, run: Run):
    room, p = _load(args, run)
    ctx = make_wave_context(room, _single_freq(args))
    if args.source is None:
        raise UsageError("--source is required")
    x0 = _point(room, args.source, args.corner_coords, "--source")
    pts = _eval_points(args, room)
    fg = green_eval(room, ctx, x0, pts, p)
    run.meta.update(frequency=ctx.f, n_max=fg.n_max, n_terms=fg.n_terms, room_hash=fg.room_hash)
    for msg in fg.notes:
        run.note(msg)
    _grid_rows(run, room, pts, fg.values, args.corner_coords)


def cmd_tf(args, run: Run):
    room, p = _load(args, run)
    if args.source is None or args.receiver is None:
        raise UsageError("--source and --receiver are required")
    x0 = _point(room, args.source, args.corner_coords, "--source")
    x = _point(room, args.receiver, args.corner_coords, "--receiver")
    freqs = _freqs(args)
    jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
    tf = transfer_function(room, x0, x, freqs, p, jobs=jobs)
    for f, err in tf.errors.items():
        msg = f"{f:g} Hz: {err}"
        run.note(msg)
        warnings.warn(msg, RuntimeWarning)
    for msg in tf.notes:
        run.note(msg)
    run.meta["failed_frequencies"] = sorted(tf.errors)
    run.header = ["f_hz", "re_G", "im_G", "spl_db"]
    for f, v, s in zip(tf.frequencies, tf.values, tf.spl):
        run.rows.append([f, v.real, v.imag, s])


def cmd_modes(args, run: Run):
    room, p = _load(args, run)
    j = _axes(args, room)[0] if args.axis is not None else 0
    lo, hi = 1, p.n_max
    if args.n_range:
        try:
            lo, hi = (int(v) for v in args.n_range.split(":"))
        except ValueError:
            raise UsageError("--n-range expects LO:HI") from None
    axis, c = room.axes[j], room.speed_of_sound
    run.header = ["n", "re_q", "im_q", "f_hz", "df_hz"]
    for m in mode_values(axis, range(lo, hi + 1)):
        f = m.re_part * c / (2 * axis.length)
        run.rows.append([m.n, m.re_part, m.im_part, f, f - m.n * c / (2 * axis.length)])


def cmd_reference(args, run: Run):
    room, p = _load(args, run)
    ctx = make_wave_context(room, _single_freq(args))
    if args.source is None:
        raise UsageError("--source is required")
    x0 = _point(room, args.source, args.corner_coords, "--source")
    if room.dim == 1:
        pts = _eval_points(args, room)
        vals = green_1d_closed_form(room.axes[0], ctx, float(x0[0]), pts[:, 0])
        run.note("1D closed-form reference")
    elif room.dim == 2:
        fd = fdm_green_2d(room, ctx, x0, epw=args.epw)
        run.note(fd.notes[0] + f", epw {args.epw:g}")
        if any(v is not None for v in (args.grid, args.points, args.random_points)):
            pts = _eval_points(args, room)
            vals = fd.interpolate(pts)
        else:
            pts, vals = fd.points, fd.values
    else:
        raise UsageError("reference supports 1D and 2D rooms only")
    run.meta.update(frequency=ctx.f)
    _grid_rows(run, room, pts, vals, args.corner_coords)


def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise UsageError(f"{path}: empty file")
    head, body = rows[0], rows[1:]
    if "re_G" not in head or "im_G" not in head:
        raise UsageError(f"{path}: no re_G/im_G columns")
    data = np.array([[float(v) for v in r] for r in body if r]) if body else np.zeros((0, len(head)))
    vals = data[:, head.index("re_G")] + 1j * data[:, head.index("im_G")]
    keys = [h for h in head if h in ("x", "y", "z", "f_hz")]
    coords = data[:, [head.index(k) for k in keys]]
    return keys, coords, vals


def cmd_compare(args, run: Run):
    if len(args.files) != 2:
        raise UsageError("compare needs two CSV files: MODEL REFERENCE")
    k1, c1, v1 = _read_csv(args.files[0])
    k2, c2, v2 = _read_csv(args.files[1])
    if k1 != k2 or c1.shape != c2.shape or not np.allclose(c1, c2, rtol=0, atol=1e-9):
        raise UsageError("files do not share the same points/frequencies")
    keep = np.isfinite(v1) & np.isfinite(v2)
    if args.source is not None and "f_hz" not in k1:
        x0 = _floats(args.source)
        keep &= np.linalg.norm(c1 - x0, axis=1) > args.exclude_radius
    if not keep.any():
        raise UsageError("no comparable samples")
    run.meta["samples"] = int(keep.sum())
    run.header = ["metric", "value"]
    run.rows.append(["l2_relative_error", l2_relative_error(v1[keep], v2[keep])])
    run.rows.append(["frac", frac(v1[keep], v2[keep])])


def cmd_selfcheck(args, run: Run):
    """Rigid-wall exactness and seeded oracle equivalence."""
    results = []
    p = SolverParams(n_max=args.nmax if args.nmax is not None else 10)
    rigid = AxisBoundary.constant(1.0, 0, 0)
    ctx = make_wave_context(RoomSpec((rigid,)), 1000.0)
    rs = solve_axis(make_gamma(rigid, ctx), p)
    ok = len(rs) == p.n_max and np.allclose(rs.q, np.arange(1, p.n_max + 1), atol=1e-12, rtol=0)
    ok &= expected_count(p.n_max, make_gamma(rigid, ctx)) == p.n_max
    results.append(("rigid-wall roots", ok))

    rng = np.random.default_rng(args.seed)
    bad = 0
    for _ in range(args.configs):
        b = rng.uniform(0, 5, 2) * np.exp(1j * rng.uniform(-np.pi, np.pi, 2))
        kl = rng.uniform(1, 100)
        ax = AxisBoundary.constant(1.0, complex(b[0]), complex(b[1]))
        g = make_gamma(ax, make_wave_context(RoomSpec((ax,)), kl * 343.0 / (2 * np.pi)))
        got = solve_axis(g, p)
        ref = [z for z in enumerate_roots(fallback_region(g, p.n_max), g, tol=p.eps_newton).roots]
        ref = [-z if z.real < -p.zero_tol or (abs(z.real) <= p.zero_tol and z.imag < 0) else z for z in ref]
        ref = np.array([z for z in ref if p.zero_tol < abs(z) <= p.n_max + 0.5])
        mine = got.q[np.abs(got.q) <= p.n_max + 0.5]
        same = len(ref) == len(mine) == got.expected and all(np.min(np.abs(ref - z)) < 1e-8 for z in mine)
        bad += not same
    results.append((f"oracle equivalence ({args.configs} configs, seed {args.seed})", bad == 0))
    run.header = ["check", "status"]
    for name, ok in results:
        run.rows.append([name, "PASS" if ok else "FAIL"])
        print(f"{'PASS' if ok else 'FAIL'}  {name}", file=sys.stderr)
    run.meta["passed"] = all(ok for _, ok in results)


COMMANDS = {
    "eigenvalues": cmd_eigenvalues,
    "roots-oracle": cmd_roots_oracle,
    "basis": cmd_basis,
    "green": cmd_green,
    "tf": cmd_tf,
    "modes": cmd_modes,
    "reference": cmd_reference,
    "compare": cmd_compare,
    "selfcheck": cmd_selfcheck,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="room/solver config (YAML or JSON)")
    common.add_argument("--out", help="output CSV (default stdout); writes OUT.meta.json alongside")
    common.add_argument("--nmax", type=int, help="truncation order n_max")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, help="worker processes (default: all cores)")
    common.add_argument("--corner-coords", action="store_true", help="coordinates measured from the room corner")
    common.add_argument("--freq", help="frequency in Hz (tf: comma-separated list)")
    common.add_argument("--f-start", type=float)
    common.add_argument("--f-stop", type=float)
    common.add_argument("--f-step", type=float)
    common.add_argument("--source", help="source point x[,y[,z]]")
    common.add_argument("--receiver", help="receiver point x[,y[,z]]")
    common.add_argument("--axis", type=int, help="axis index (default: all / first)")
    common.add_argument("--grid", help="points per axis, e.g. 21,29")
    common.add_argument("--points", help="CSV file of evaluation points")
    common.add_argument("--random-points", type=int, help="N uniformly random points (uses --seed)")
    common.add_argument("--epw", type=float, default=40.0, help="points per wavelength (reference only)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="rectroom", description="Rectangular-room eigenvalues and Green's functions")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    sub.add_parser("eigenvalues", parents=[common], help="per-axis eigenvalues q")
    ro = sub.add_parser("roots-oracle", parents=[common], help="contour root enumeration")
    ro.add_argument("--region", help="re_min,re_max,im_min,im_max")
    sub.add_parser("basis", parents=[common], help="eigenfunction data per axis")
    sub.add_parser("green", parents=[common], help="Green's function on points")
    sub.add_parser("tf", parents=[common], help="transfer function over frequency")
    md = sub.add_parser("modes", parents=[common], help="closed-form resonance modes")
    md.add_argument("--n-range", help="LO:HI branch indices (default 1:n_max)")
    sub.add_parser("reference", parents=[common], help="closed-form (1D) or finite-difference (2D) reference")
    cp = sub.add_parser("compare", parents=[common], help="relative L2 error and FRAC of two CSVs")
    cp.add_argument("files", nargs="*")
    cp.add_argument("--exclude-radius", type=float, default=0.0, help="skip points this close to --source")
    sc = sub.add_parser("selfcheck", parents=[common], help="built-in consistency checks")
    sc.add_argument("--configs", type=int, default=20, help="random configurations for the oracle check")
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    state = Run(args, argv)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            COMMANDS[args.command](args, state)
        except UsageError as exc:
            print(f"usage error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except NumericalError as exc:
            print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        except (ConfigError, RectRoomError, ValueError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
    for c in caught:
        print(f"warning: {c.category.__name__}: {c.message}", file=sys.stderr)
    state.write(caught)
    if args.command == "selfcheck" and not state.meta.get("passed"):
        return EXIT_NUMERICAL
    return EXIT_OK


def main():  # pragma: no cover
    sys.exit(run())

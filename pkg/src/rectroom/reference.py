"""Independent Green's function references.

* 1D: exact closed form from two wall-matched homogeneous solutions.
* 2D: second-order finite differences on a uniform node grid, impedance
  walls via ghost-point elimination, solved as a banded system.

Neither uses the eigenvalue machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.interpolate import RegularGridInterpolator

from rectroom.core import AxisBoundary, RoomSpec, WaveContext
from rectroom.errors import DegenerateWronskian, GridTooLarge, OutOfDomain, SolveFailure
from rectroom.greens import FieldGrid, room_hash

MAX_UNKNOWNS = 200_000


def green_1d_closed_form(axis: AxisBoundary, ctx: WaveContext, x0: float, x) -> np.ndarray:
    """Exact 1D Green's function, ``G'' + k^2 G = -delta(x - x0)``.

    ``u-(x) = cos(k(x + l/2)) + i b- sin(k(x + l/2))`` meets the left wall
    condition, ``u+(x) = cos(k(l/2 - x)) + i b+ sin(k(l/2 - x))`` the right
    one, and ``G = -u-(min(x, x0)) u+(max(x, x0)) / W`` with the constant
    Wronskian ``W = u- u+' - u-' u+``.
    """
    k, l = ctx.k, axis.length
    if not k > 0:
        raise ValueError("closed form needs k > 0")
    bm, bp = axis.beta_minus(ctx.f), axis.beta_plus(ctx.f)
    x = np.asarray(x, dtype=float)
    half = 0.5 * l * (1 + 1e-12)
    if abs(x0) > half or np.any(np.abs(x) > half):
        raise OutOfDomain("coordinate outside the axis")

    def um(s):
        return np.cos(k * (s + l / 2)) + 1j * bm * np.sin(k * (s + l / 2))

    def dum(s):
        return -k * np.sin(k * (s + l / 2)) + 1j * bm * k * np.cos(k * (s + l / 2))

    def up(s):
        return np.cos(k * (l / 2 - s)) + 1j * bp * np.sin(k * (l / 2 - s))

    def dup(s):
        return k * np.sin(k * (l / 2 - s)) - 1j * bp * k * np.cos(k * (l / 2 - s))

    w = um(x0) * dup(x0) - dum(x0) * up(x0)
    scale = k * (abs(1 + bm * bp) + abs(bm + bp))
    if abs(w) < 1e-12 * scale:
        raise DegenerateWronskian(f"degenerate Wronskian {abs(w):.3g} at f = {ctx.f} Hz (lossless resonance)")
    lo = np.minimum(x, x0)
    hi = np.maximum(x, x0)
    return -um(lo) * up(hi) / w


@dataclass(frozen=True)
class FDMField(FieldGrid):
    """Node values of the finite-difference solution on a tensor grid."""

    xs: Optional[np.ndarray] = None
    ys: Optional[np.ndarray] = None

    @property
    def grid_values(self) -> np.ndarray:
        return self.values.reshape(len(self.xs), len(self.ys))

    def interpolate(self, points) -> np.ndarray:
        """Bilinear interpolation of the node values at centre-referenced points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        gv = self.grid_values
        re = RegularGridInterpolator((self.xs, self.ys), gv.real)
        im = RegularGridInterpolator((self.xs, self.ys), gv.imag)
        # Clip onto the closure to absorb round-off at the walls.
        pts = np.clip(pts, [self.xs[0], self.ys[0]], [self.xs[-1], self.ys[-1]])
        return re(pts) + 1j * im(pts)


def grid_intervals(room: RoomSpec, ctx: WaveContext, epw: float) -> Tuple[int, int]:
    """Interval counts per axis for a nominal spacing ``c / (f epw)``."""
    if epw < 10:
        raise ValueError("epw must be at least 10")
    if not ctx.f > 0:
        raise ValueError("finite-difference reference needs f > 0")
    h = room.speed_of_sound / (ctx.f * epw)
    return tuple(max(7, math.ceil(l / h - 1e-9)) for l in room.lengths)


def fdm_operator_2d(room: RoomSpec, ctx: WaveContext, intervals: Sequence[int]) -> sp.csr_matrix:
    """Assembled complex-symmetric system matrix (rows scaled by cell area).

    Node ``(i, j)`` has index ``i * (ny + 1) + j`` when ``nx >= ny`` and
    ``j * (nx + 1) + i`` otherwise, so the bandwidth is the smaller node count.
    Wall rows carry the half (corner: quarter) control volume, which is the
    symmetric form of the ghost-point elimination.
    """
    (nx, ny), (lx, ly) = intervals, room.lengths
    hx, hy = lx / nx, ly / ny
    k = ctx.k
    bx = (room.axes[0].beta_minus(ctx.f), room.axes[0].beta_plus(ctx.f))
    by = (room.axes[1].beta_minus(ctx.f), room.axes[1].beta_plus(ctx.f))
    index = _node_index(nx, ny)
    i, j = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1), indexing="ij")
    i, j = i.ravel(), j.ravel()
    wx = np.where((i == 0) | (i == nx), 0.5, 1.0)
    wy = np.where((j == 0) | (j == ny), 0.5, 1.0)
    diag = (k * k * hx * hy * wx * wy).astype(complex)
    diag -= np.where(i == 0, 1j * k * bx[0] * wy * hy, 0)
    diag -= np.where(i == nx, 1j * k * bx[1] * wy * hy, 0)
    diag -= np.where(j == 0, 1j * k * by[0] * wx * hx, 0)
    diag -= np.where(j == ny, 1j * k * by[1] * wx * hx, 0)
    rows, cols, vals = [], [], []
    me = index(i, j)
    for di, dj, coef in ((1, 0, wy * hy / hx), (-1, 0, wy * hy / hx), (0, 1, wx * hx / hy), (0, -1, wx * hx / hy)):
        ok = (i + di >= 0) & (i + di <= nx) & (j + dj >= 0) & (j + dj <= ny)
        rows.append(me[ok])
        cols.append(index(i[ok] + di, j[ok] + dj))
        vals.append(coef[ok].astype(complex))
        diag -= np.where(ok, coef, 0)
    rows.append(me)
    cols.append(me)
    vals.append(diag)
    n = (nx + 1) * (ny + 1)
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )


def _node_index(nx: int, ny: int):
    if nx >= ny:
        return lambda i, j: i * (ny + 1) + j
    return lambda i, j: j * (nx + 1) + i


def _source_weights(room: RoomSpec, intervals, x0) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bilinear split of a unit point source over the four surrounding nodes."""
    out_i, out_j, out_w = [], [], []
    idx, frac = [], []
    for n, l, s in zip(intervals, room.lengths, x0):
        t = (s + l / 2) / (l / n)
        c = min(max(int(math.floor(t)), 0), n - 1)
        idx.append(c)
        frac.append(t - c)
    for a in (0, 1):
        for b in (0, 1):
            w = (frac[0] if a else 1 - frac[0]) * (frac[1] if b else 1 - frac[1])
            if w > 0:
                out_i.append(idx[0] + a)
                out_j.append(idx[1] + b)
                out_w.append(w)
    return np.array(out_i), np.array(out_j), np.array(out_w)


def fdm_green_2d(
    room: RoomSpec,
    ctx: WaveContext,
    x0,
    epw: float = 40.0,
    intervals: Optional[Sequence[int]] = None,
    max_unknowns: int = MAX_UNKNOWNS,
) -> FDMField:
    """Finite-difference Green's function of a 2D room on its node grid.

    The unit source is split bilinearly over the four nodes around ``x0``
    (nearest-node placement when ``x0`` is a node).  ``intervals`` overrides
    the spacing derived from ``epw`` (used for nested-grid studies).
    """
    if room.dim != 2:
        raise ValueError("finite-difference reference is two-dimensional only")
    x0 = np.asarray(x0, dtype=float)
    if not room.contains(x0):
        raise OutOfDomain("source outside the room")
    if intervals is None:
        intervals = grid_intervals(room, ctx, epw)
    nx, ny = (int(v) for v in intervals)
    n = (nx + 1) * (ny + 1)
    if n > max_unknowns:
        raise GridTooLarge(f"{n} unknowns exceed the limit of {max_unknowns}")
    A = fdm_operator_2d(room, ctx, (nx, ny))
    index = _node_index(nx, ny)
    si, sj, sw = _source_weights(room, (nx, ny), x0)
    rhs = np.zeros(n, dtype=complex)
    rhs[index(si, sj)] = -sw
    bw = min(nx, ny) + 1
    ab = _to_banded(A, bw)
    try:
        sol = scipy.linalg.solve_banded((bw, bw), ab, rhs, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolveFailure(f"finite-difference system singular at f = {ctx.f} Hz: {exc}") from exc
    if not np.all(np.isfinite(sol)):
        raise SolveFailure(f"finite-difference solution not finite at f = {ctx.f} Hz")
    xs = -room.lengths[0] / 2 + np.arange(nx + 1) * room.lengths[0] / nx
    ys = -room.lengths[1] / 2 + np.arange(ny + 1) * room.lengths[1] / ny
    ii, jj = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1), indexing="ij")
    values = sol[index(ii.ravel(), jj.ravel())]
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return FDMField(
        points=np.column_stack([X.ravel(), Y.ravel()]),
        values=values,
        frequency=ctx.f,
        n_max=0,
        room_hash=room_hash(room),
        n_terms=n,
        notes=(f"fdm grid {nx + 1}x{ny + 1} nodes",),
        xs=xs,
        ys=ys,
    )


def _to_banded(A: sp.spmatrix, bw: int) -> np.ndarray:
    coo = A.tocoo()
    n = A.shape[0]
    if np.any(np.abs(coo.row - coo.col) > bw):
        raise AssertionError("matrix bandwidth exceeds the expected band")
    ab = np.zeros((2 * bw + 1, n), dtype=complex)
    np.add.at(ab, (bw + coo.row - coo.col, coo.col), coo.data)
    return ab


def fdm_self_convergence(
    room: RoomSpec,
    ctx: WaveContext,
    x0,
    epw: float,
    exclude_radius: float = 0.0,
) -> Tuple[float, float, float]:
    """Nested-grid convergence ratio ``|G_h - G_h/2| / |G_h/2 - G_h/4|``.

    The base grid follows ``epw``; the finer grids halve and quarter its
    spacing exactly so coarse nodes coincide with fine ones.  Differences
    are L2 norms over coarse nodes farther than ``exclude_radius`` from the
    source.  Returns ``(ratio, d_coarse, d_fine)``.
    """
    nx, ny = grid_intervals(room, ctx, epw)
    f1 = fdm_green_2d(room, ctx, x0, intervals=(nx, ny))
    f2 = fdm_green_2d(room, ctx, x0, intervals=(2 * nx, 2 * ny))
    f4 = fdm_green_2d(room, ctx, x0, intervals=(4 * nx, 4 * ny))
    g1 = f1.grid_values
    g2 = f2.grid_values[::2, ::2]
    g4 = f4.grid_values[::4, ::4]
    mask = (np.linalg.norm(f1.points - np.asarray(x0), axis=1) > exclude_radius).reshape(g1.shape)
    d1 = float(np.linalg.norm((g1 - g2)[mask]))
    d2 = float(np.linalg.norm((g2 - g4)[mask]))
    return d1 / d2, d1, d2

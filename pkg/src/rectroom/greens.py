"""Green's function by eigenfunction expansion.

    G_k(x | x0) = sum_n  phi_n(x) phi_n(x0) / (Lambda_n (k_n^2 - k^2))

The d-dimensional eigenfunctions are products of 1D ones, ``k_n^2`` is the
sum of the axis values and ``Lambda_n`` the product of the axis constants.
The sum runs over the full tensor product of the axis bases and is
factorized: each axis contributes one table ``phi(x_j) phi(x0_j)/Lambda``
over the distinct coordinates, and the multi-index sum reduces to matrix
products against the ``1/(k_n^2 - k^2)`` array.
"""

from __future__ import annotations

import hashlib
import logging
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from rectroom.core import RoomSpec, SolverParams, WaveContext, make_wave_context
from rectroom.errors import NearResonance, NumericalError, OutOfDomain
from rectroom.modal import Basis1D, build_basis

log = logging.getLogger(__name__)

DENOM_TOL = 1e-12
P_REF = 2e-5
_CHUNK = 4096


def room_hash(room: RoomSpec) -> str:
    return hashlib.sha1(repr(room).encode()).hexdigest()[:12]


@dataclass(frozen=True)
class FieldGrid:
    points: np.ndarray
    values: np.ndarray
    frequency: float
    n_max: int
    room_hash: str
    n_terms: int = 0
    notes: Tuple[str, ...] = ()


@dataclass(frozen=True)
class TransferFunction:
    """Receiver pressure over frequency; failed frequencies hold ``nan``."""

    frequencies: np.ndarray
    values: np.ndarray
    errors: Dict[float, str] = field(default_factory=dict)
    notes: Tuple[str, ...] = ()

    @property
    def spl(self) -> np.ndarray:
        return spl(self.values)


def spl(values, p0: float = P_REF) -> np.ndarray:
    """Sound pressure level ``20 log10(|p| / p0)`` in dB; ``|p| = 0`` gives ``-inf``."""
    if not p0 > 0:
        raise ValueError("reference pressure must be positive")
    a = np.abs(np.asarray(values, dtype=complex))
    with np.errstate(divide="ignore"):
        return 20 * np.log10(a / p0)


def build_bases(room: RoomSpec, ctx: WaveContext, p: SolverParams) -> List[Basis1D]:
    return [build_basis(axis, ctx, p) for axis in room.axes]


def _axis_table(basis: Basis1D, coords: np.ndarray, x0: float) -> np.ndarray:
    """``phi_n(x) phi_n(x0) / Lambda_n`` on ``coords`` (via distinct values)."""
    uniq, inv = np.unique(coords, return_inverse=True)
    tab = basis.normalized_values(uniq) * basis.normalized_values([x0])[0]
    return tab[inv.reshape(-1)]


def _denominators(bases: Sequence[Basis1D], k: float) -> np.ndarray:
    ksq = [b.k_hat_sq for b in bases]
    total = ksq[0]
    for extra in ksq[1:]:
        total = np.add.outer(total, extra)
    den = total - k * k
    worst = np.min(np.abs(den)) if den.size else np.inf
    if worst < DENOM_TOL * max(k * k, 1e-300):
        idx = np.unravel_index(np.argmin(np.abs(den)), den.shape)
        raise NearResonance(
            f"|k_n^2 - k^2| = {worst:.3g} at multi-index {tuple(int(i) for i in idx)} (k = {k:.6g})"
        )
    return 1.0 / den


def sum_series(tables: Sequence[np.ndarray], inv_den: np.ndarray) -> np.ndarray:
    """Multi-index sum ``sum_n prod_j T_j[p, n_j] * D[n]`` for every point ``p``."""
    d = len(tables)
    if d == 1:
        return tables[0] @ inv_den
    if d == 2:
        return np.sum(tables[0] * (tables[1] @ inv_den.T), axis=1)
    out = np.zeros(tables[0].shape[0], dtype=complex)
    for n1 in range(inv_den.shape[0]):
        inner = np.sum(tables[1] * (tables[2] @ inv_den[n1].T), axis=1)
        out += tables[0][:, n1] * inner
    return out


def _check_points(room: RoomSpec, pts: np.ndarray, what: str):
    half = np.asarray(room.lengths) / 2
    if np.any(np.abs(pts) > half * (1 + 1e-12)):
        raise OutOfDomain(f"{what} outside the room")


def green_eval(
    room: RoomSpec,
    ctx: WaveContext,
    x0,
    points,
    p: SolverParams,
    bases: Optional[Sequence[Basis1D]] = None,
) -> FieldGrid:
    """Evaluate the truncated expansion at ``points`` for a source at ``x0``.

    Coordinates are centre-referenced, shape ``(N, d)`` (a flat array is
    accepted in 1D).  Pre-built ``bases`` may be passed to reuse them.
    """
    d = room.dim
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1) if d == 1 else pts.reshape(1, -1)
    if pts.shape[1] != d or x0.shape != (d,):
        raise ValueError(f"points and source must have {d} coordinates")
    _check_points(room, x0[None, :], "source")
    _check_points(room, pts, "evaluation point")
    if not ctx.k > 0:
        raise ValueError("Green's function needs a positive frequency")
    if bases is None:
        bases = build_bases(room, ctx, p)
    inv_den = _denominators(bases, ctx.k)
    values = np.empty(len(pts), dtype=complex)
    for start in range(0, len(pts), _CHUNK):
        sl = slice(start, start + _CHUNK)
        tables = [_axis_table(b, pts[sl, j], x0[j]) for j, b in enumerate(bases)]
        values[sl] = sum_series(tables, inv_den)
    notes = []
    for j, b in enumerate(bases):
        if b.rootset is not None:
            notes.extend(f"axis {j}: {n}" for n in b.rootset.notes)
        notes.extend(
            f"axis {j}: near-defective eigenfunction at q={e.q_hat}" for e in b.entries if e.near_defective
        )
    return FieldGrid(
        points=pts,
        values=values,
        frequency=ctx.f,
        n_max=p.n_max,
        room_hash=room_hash(room),
        n_terms=int(np.prod([len(b) for b in bases])),
        notes=tuple(notes),
    )


def _one_frequency(args):
    room, x0, x, f, p = args
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            ctx = make_wave_context(room, f)
            fg = green_eval(room, ctx, x0, np.atleast_2d(x), p)
            value, err, notes = complex(fg.values[0]), None, list(fg.notes)
        except NumericalError as exc:
            value, err, notes = complex("nan+nanj"), f"{type(exc).__name__}: {exc}", []
    notes += [f"{f:g} Hz: {w.category.__name__}: {w.message}" for w in caught]
    return value, err, notes


def transfer_function(
    room: RoomSpec,
    x0,
    x,
    freqs,
    p: SolverParams,
    jobs: int = 1,
) -> TransferFunction:
    """Receiver response over a frequency sweep.

    The bases are rebuilt at every frequency.  Numerical failures at a single
    frequency (e.g. :class:`NearResonance`) are recorded in ``errors`` and
    the value set to ``nan``; the sweep continues.  ``jobs > 1`` spreads the
    frequencies over worker processes; results keep input order.
    """
    freqs = np.asarray(freqs, dtype=float)
    if freqs.ndim != 1 or np.any(np.diff(freqs) <= 0):
        raise ValueError("frequencies must be strictly increasing")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    work = [(room, x0, x, float(f), p) for f in freqs]
    if jobs is None:
        jobs = os.cpu_count() or 1
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_one_frequency, work, chunksize=max(1, len(work) // (4 * jobs))))
    else:
        results = [_one_frequency(w) for w in work]
    values = np.array([r[0] for r in results], dtype=complex)
    errors = {float(f): r[1] for f, r in zip(freqs, results) if r[1]}
    notes = tuple(n for r in results for n in r[2])
    return TransferFunction(freqs, values, errors, notes)

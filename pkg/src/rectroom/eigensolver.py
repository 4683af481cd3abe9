"""Per-axis eigenvalue solver.

Pipeline: asymptotic candidates -> damped Newton on the pole-free residual
-> fold onto the right half-plane and deduplicate -> verify the number of
roots inside ``|q| <= n_max + 1/2`` and fall back to contour enumeration when
the count is short.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from rectroom.asymptotics import Candidate, Group, candidate_set, coalesced_pair, parity_pair
from rectroom.core import GammaPair, SolverParams
from rectroom.errors import ContourOnRoot, CountMismatch, NonConvergenceWarning
from rectroom.oracle import SearchRegion, disc_winding_count, enumerate_roots, winding_count
from rectroom.residual import (
    EPS,
    is_root,
    newton_data_scaled,
    polish_extended,
    residual,
    residual_derivative,
    residual_scaled,
    scale_factor,
    sincos_scaled,
)

log = logging.getLogger(__name__)

__all__ = [
    "EigenRoot",
    "RootSet",
    "canonicalize_and_dedup",
    "certified_count",
    "expected_count",
    "newton_refine",
    "residual",
    "residual_derivative",
    "rouche_applies",
    "solve_axis",
]

DEGENERACY_TOL = 1e-9
FALLBACK_MARGIN = 0.5
FLOOR_STEPS = 3
TIGHT_DEDUP = 1e-9


@dataclass(frozen=True)
class EigenRoot:
    q_hat: complex
    residual: float
    group: Group
    length: float = 1.0

    @property
    def k_hat(self) -> complex:
        return math.pi * self.q_hat / self.length


@dataclass(frozen=True)
class RootSet:
    """Deduplicated roots of one axis, sorted by ``(Re q, Im q)``.

    ``expected`` is the certified number of roots with ``|q| <= n_max + 1/2``
    and ``certified_by`` says how it was obtained (``"theorem"`` when the
    asymptotic counting formula provably applies, ``"winding"`` otherwise).
    """

    roots: Tuple[EigenRoot, ...]
    gamma: GammaPair
    n_max: int
    expected: int = -1
    certified_by: str = ""
    fallback_used: bool = False
    notes: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def q(self) -> np.ndarray:
        return np.array([r.q_hat for r in self.roots], dtype=complex)

    def __len__(self):
        return len(self.roots)

    def __iter__(self):
        return iter(self.roots)

    def count_in_disc(self) -> int:
        return count_in_disc(self.q, self.n_max)


def count_in_disc(q, n_max: int) -> int:
    return int(np.count_nonzero(np.abs(np.asarray(q)) <= n_max + 0.5))


# -- Newton ----------------------------------------------------------------------


def newton_refine(
    candidates: Sequence[Candidate], g: GammaPair, p: SolverParams
) -> List[Tuple[complex, float, Group, bool]]:
    """Damped Newton ``q <- q - alpha v/v'`` on every candidate.

    Steps shorter than ``polish_step`` (relative) are taken undamped.

    Iteration stops per candidate once ``|v| <= eps_newton``, after a few
    extra steps at the rounding floor of ``v``, or when the step falls to
    rounding level.  Returns ``(q, |v|, group, converged)`` tuples;
    candidates that hit a vanishing derivative or non-finite values are
    dropped with a :class:`NonConvergenceWarning`.
    """
    if not candidates:
        return []
    q = np.array([c.q_hat for c in candidates], dtype=complex)
    groups = [c.group for c in candidates]
    active = np.isfinite(q)
    dropped = ~active
    hits = np.zeros(len(q), dtype=int)
    for it in range(p.n_newton):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        qa = q[active]
        v, dv, floor = newton_data_scaled(qa, g)
        strict = np.abs(v) <= p.eps_newton / scale_factor(qa)
        at_floor = np.abs(v) <= floor
        # At the rounding floor a few more full steps still pick a better
        # neighbouring double; stop after FLOOR_STEPS of them.
        # A guess already at the floor (e.g. the closed-form pair of a
        # near-double root) is kept: steps there are noise.
        hits[idx[at_floor]] += 1 if it else FLOOR_STEPS + 1
        done = strict | (hits[idx] > FLOOR_STEPS)
        bad = ~np.isfinite(v) | ~np.isfinite(dv) | ((np.abs(dv) < 1e-300) & ~(strict | at_floor))
        full = np.where(bad | done, 0, v / np.where(bad | (dv == 0), 1, dv))
        small = np.abs(full) < p.polish_step * np.maximum(1.0, np.abs(qa))
        step = np.where(small | at_floor, 1.0, p.alpha_newton) * full
        q[active] = qa - step
        tiny = (np.abs(step) <= 2 * EPS * np.maximum(1.0, np.abs(qa))) & ~at_floor
        dropped[idx[bad]] = True
        active[idx[bad | done | tiny]] = False
    if dropped.any():
        warnings.warn(
            f"{int(dropped.sum())} Newton candidate(s) dropped (vanishing derivative or overflow)",
            NonConvergenceWarning,
            stacklevel=2,
        )
    fin = np.isfinite(q) & ~dropped
    q[fin] = polish_extended(q[fin], g)
    conv = is_root(q, g, p.eps_newton)
    res = _abs_residual(q, g)
    return [
        (complex(qi), float(ri), grp, bool(ci))
        for qi, ri, grp, ci, di in zip(q, res, groups, conv, dropped)
        if not di
    ]


def _abs_residual(q, g: GammaPair) -> np.ndarray:
    """``|v(q)|`` in extended precision; scaled fallback where it overflows."""
    q = np.asarray(q, dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.abs(residual(q, g))
        alt = np.abs(residual_scaled(q, g)) * scale_factor(q)
    return np.where(np.isfinite(out), out, alt)


def canonicalize_and_dedup(
    points: Sequence[Tuple],
    p: SolverParams,
    g: Optional[GammaPair] = None,
    length: float = 1.0,
    tol: Optional[float] = None,
) -> RootSet:
    """Fold points into the right half-plane, drop ``q = 0`` and duplicates.

    ``points`` holds ``(q, residual)`` or ``(q, residual, group, ...)``
    tuples.  Points with ``Re q < -zero_tol`` are negated; those on the
    imaginary axis are flipped to ``Im q > 0``.  Within each cluster of
    radius ``dedup_tol`` (or ``tol``) the lowest-residual member is kept,
    except that a coalescing symmetric even/odd pair is resolved by parity
    and kept as two roots.
    """
    tol = p.dedup_tol if tol is None else tol
    parity = g is not None and coalesced_pair(g)
    folded = []
    for pt in points:
        qv, rv = complex(pt[0]), float(pt[1])
        grp = pt[2] if len(pt) > 2 else Group.G1
        if qv.real < -p.zero_tol or (abs(qv.real) <= p.zero_tol and qv.imag < 0):
            qv = -qv
        if abs(qv) <= p.zero_tol:
            continue
        folded.append((qv, rv, grp))
    folded.sort(key=lambda t: t[1])
    kept: List[Tuple[complex, float, Group]] = []
    if folded:
        xy = np.array([(t[0].real, t[0].imag) for t in folded])
        near = cKDTree(xy).query_ball_point(xy, tol)
        taken = np.zeros(len(folded), dtype=bool)
        for i, t in enumerate(folded):
            if taken[i]:
                continue
            kept.append(t)
            taken[near[i]] = True
    if parity:
        kept = _split_parity_pair(kept, g, tol)
    kept.sort(key=lambda t: (round(t[0].real, 12), t[0].imag))
    roots = tuple(EigenRoot(qv, rv, grp, length) for qv, rv, grp in kept)
    return RootSet(roots=roots, gamma=g, n_max=p.n_max)


# -- counting ------------------------------------------------------------------


def expected_count(m: int, g: GammaPair, degeneracy_tol: float = DEGENERACY_TOL) -> int:
    """Asymptotic number of right-half-plane roots with ``|q| <= m + 1/2``.

    ``m`` when ``g- g+ = i (g- + g+)`` (triple root at 0), else ``m + 1``.
    Only guaranteed for ``m`` large enough; see :func:`rouche_applies`.
    """
    if m < 0:
        raise ValueError("m must be non-negative")
    return m if is_degenerate(g, degeneracy_tol) else m + 1


def is_degenerate(g: GammaPair, tol: float = DEGENERACY_TOL) -> bool:
    return abs(g.product - 1j * g.total) <= tol * max(1.0, abs(g.product))


def rouche_applies(m: int, g: GammaPair, margin: float = 0.8) -> bool:
    """Whether the counting formula is certified at ``m``.

    Checks ``|v2| < margin |v1|`` on the circle ``|q| = m + 1/2``, where
    ``v1`` is the sine term and ``v2`` the cosine term of the residual.
    """
    r = m + 0.5
    if math.pi**2 * r * r <= abs(g.product):
        return False
    if g.total == 0:
        return True
    t = np.linspace(0.0, 1.0, int(max(512, 64 * r)), endpoint=False)
    z = r * np.exp(2j * np.pi * t)
    pz = np.pi * z
    s, c = sincos_scaled(pz)
    v1 = np.abs(pz * pz + g.product) * np.abs(s)
    v2 = np.abs(g.total * pz) * np.abs(c)
    return bool(np.all(v2 < margin * v1))


def certified_count(m: int, g: GammaPair) -> Tuple[int, str]:
    """Number of right-half-plane roots in ``|q| <= m + 1/2`` and its source."""
    if rouche_applies(m, g):
        return expected_count(m, g), "theorem"
    total = disc_winding_count(m + 0.5, g)
    at_zero = 3 if is_degenerate(g) else 1
    return max(0, (total - at_zero) // 2), "winding"


def fallback_region(g: GammaPair, n_max: int) -> SearchRegion:
    """Rectangle covering the counting disc and the negative-reactance roots."""
    i_max = max(5.0, 2 * max(abs(g.gamma_minus), abs(g.gamma_plus)) / math.pi, n_max + 1.0)
    return SearchRegion(-0.0371, n_max + 0.5 + FALLBACK_MARGIN, -i_max, i_max)


# -- pipeline ------------------------------------------------------------------


def _split_parity_pair(kept, g: GammaPair, tol: float):
    """Replace the merged even/odd ``G3`` cluster by its parity-resolved pair.

    The two roots are tagged ``G3+`` (even) and ``G3-`` (odd); they may
    share one double value of ``q``.
    """
    q_even, q_odd = parity_pair(g)
    lim = 2 * max(tol, abs(q_even - q_odd))
    kept = [t for t in kept if min(abs(t[0] - q_even), abs(t[0] + q_even)) > lim]
    # parity tags belong to the resolved pair only
    sym = (Group.G3_SYM_PLUS, Group.G3_SYM_MINUS)
    kept = [(t[0], t[1], Group.G3 if t[2] in sym else t[2]) for t in kept]
    pair = []
    for qv, grp in ((q_even, Group.G3_SYM_PLUS), (q_odd, Group.G3_SYM_MINUS)):
        if qv.real < 0:
            qv = -qv
        pair.append((qv, float(_abs_residual(np.array([qv]), g)[0]), grp))
    return kept + pair


def _certified_tight(good, p: SolverParams, g: GammaPair, length: float) -> Optional[RootSet]:
    """Newton roots merged at the tight tolerance, if every split is certified.

    Each group of kept roots within ``dedup_tol`` of one another must match
    the winding number of a small box around it; otherwise ``None``.
    """
    raw = [(t[0], t[1], t[2]) for t in good]
    tight = canonicalize_and_dedup(raw, p, g, length, tol=TIGHT_DEDUP * max(1.0, p.n_max))
    q = tight.q
    if q.size < 2:
        return None
    pairs = cKDTree(np.column_stack([q.real, q.imag])).query_pairs(p.dedup_tol)
    if not pairs:
        return None
    parent = list(range(q.size))

    def find(i):
        while parent[i] != i:
            i = parent[i]
        return i

    for i, j in pairs:
        parent[find(i)] = find(j)
    groups = {}
    for i in {i for pr in pairs for i in pr}:
        groups.setdefault(find(i), []).append(i)
    for members in groups.values():
        z = q[members]
        if np.all(z == z[0]):
            continue  # coalesced parity pair, one root of v
        c = z.mean()
        half = max(4 * np.max(np.abs(z - c)), 1e-9 * max(1.0, abs(c)))
        box = SearchRegion(c.real - half, c.real + half, c.imag - half, c.imag + half)
        try:
            if winding_count(box, g, clearance_step=0.1 * half) != len(members):
                return None
        except ContourOnRoot:
            return None
    return tight


def solve_axis(g: GammaPair, p: SolverParams, length: float = 1.0) -> RootSet:
    """All eigenvalues ``q`` of one axis up to truncation order ``p.n_max``.

    Roots outside the counting disc that Newton happens to find are kept.
    Raises :class:`CountMismatch` when even the contour fallback cannot
    produce the certified count.
    """
    cands = candidate_set(g, p.n_max)
    refined = newton_refine(cands, g, p)
    # Far beyond every guess family the rounding floor of v is too coarse
    # to certify anything; such points are never genuine eigenvalues here.
    cap = 4 * (p.n_max + 1) + 4 * max(abs(g.gamma_minus), abs(g.gamma_plus)) / math.pi + 10
    good = [t for t in refined if t[3] and abs(t[0]) <= cap]
    n_bad = len(refined) - len(good)
    rs = canonicalize_and_dedup(good, p, g, length)
    expected, how = certified_count(p.n_max, g)
    found = rs.count_in_disc()
    notes = []
    fallback = False
    if found < expected:
        tight = _certified_tight(good, p, g, length)
        if tight is not None and tight.count_in_disc() == expected:
            rs, found = tight, expected
            notes.append(f"roots closer than dedup_tol={p.dedup_tol:g} kept apart (tolerance {TIGHT_DEDUP:g})")
    if found != expected:
        fallback = True
        region = fallback_region(g, p.n_max)
        notes.append(
            f"count {found} != certified {expected} ({how}); contour fallback over "
            f"Re[{region.re_min:g},{region.re_max:g}] Im[{region.im_min:g},{region.im_max:g}]"
        )
        if n_bad:
            warnings.warn(
                f"{n_bad} candidate(s) did not converge and {expected - found} root(s) were missing",
                NonConvergenceWarning,
                stacklevel=2,
            )
        log.info(notes[-1])
        enum = enumerate_roots(region, g, tol=p.eps_newton)
        zs = polish_extended(np.array(enum.roots, dtype=complex), g)
        extra = [(complex(z), float(r), Group.ORACLE) for z, r in zip(zs, _abs_residual(zs, g))]
        merged = [(r.q_hat, r.residual, r.group) for r in rs.roots] + extra
        rs = canonicalize_and_dedup(merged, p, g, length)
        found = rs.count_in_disc()
        if found < expected:
            # Distinct roots closer than dedup_tol (near-coalescing pairs):
            # merge again keeping only copies equal to rounding accuracy.
            # Newton results are trusted there; oracle roots only fill gaps,
            # as inside a cluster they are limited by residual noise.
            raw = [(t[0], t[1], t[2]) for t in good]
            near = np.array([t[0] for t in raw] + [-t[0] for t in raw], dtype=complex)
            gaps = [t for t in extra if near.size == 0 or np.min(np.abs(near - t[0])) > p.dedup_tol]
            tight = canonicalize_and_dedup(raw + gaps, p, g, length, tol=TIGHT_DEDUP * max(1.0, p.n_max))
            if tight.count_in_disc() == expected:
                rs, found = tight, expected
                notes.append(f"roots closer than dedup_tol={p.dedup_tol:g} kept apart (tolerance {TIGHT_DEDUP:g})")
        if found != expected:
            raise CountMismatch(
                f"found {found} roots in |q| <= {p.n_max + 0.5}, expected {expected} ({how}); "
                f"roots: {[complex(round(r.q_hat.real, 6), round(r.q_hat.imag, 6)) for r in rs.roots]}",
                found=found,
                expected=expected,
                roots=rs.roots,
            )
    return RootSet(
        roots=rs.roots,
        gamma=g,
        n_max=p.n_max,
        expected=expected,
        certified_by=how,
        fallback_used=fallback,
        notes=tuple(notes),
    )

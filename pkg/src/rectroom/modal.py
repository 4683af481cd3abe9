"""Eigenfunction data of one axis.

Each root ``q`` of the axis condition defines

    phi(x) = cos(pi q x / l + b),      x in [-l/2, l/2]

with the phase offset ``b`` fixed by the right-wall condition and the
normalization ``Lambda = int phi^2 dx`` known in closed form.  Products
``phi_n(x) phi_n(x0) / Lambda_n`` are evaluated in log form so that
boundary-localized modes with large ``Im q`` do not overflow.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from rectroom.asymptotics import Group, coalesced_pair
from rectroom.core import AxisBoundary, GammaPair, SolverParams, WaveContext, make_gamma
from rectroom.eigensolver import EigenRoot, RootSet, solve_axis
from rectroom.errors import LeftBcViolation, NearDefectiveWarning, OutOfDomain
from rectroom.residual import sincos_scaled

LAMBDA_WARN_TOL = 1e-6
BC_TOL = 1e-8
EXP_ONLY_TOL = 1e-12


@dataclass(frozen=True)
class ModalRoot:
    root: EigenRoot
    b_hat: complex
    lam: complex
    near_defective: bool = False

    @property
    def q_hat(self) -> complex:
        return self.root.q_hat

    @property
    def k_hat(self) -> complex:
        return self.root.k_hat


def _wall_residuals(q, b, gm: complex, gp: complex):
    """Relative left/right wall-condition residuals of ``cos(pi q x/l + b)``.

    In units of ``1/l``: left ``pi q sin(b - pi q/2) + i g- cos(b - pi q/2)``,
    right ``-pi q sin(b + pi q/2) + i g+ cos(b + pi q/2)``; both are scaled by
    ``(|pi q| + |g|) * max|phi|`` with ``max|phi|`` taken at the walls.
    Vectorized over ``q`` and ``b``.
    """
    pq = math.pi * np.asarray(q, dtype=complex)
    b = np.asarray(b, dtype=complex)
    tl, tr = b - pq / 2, b + pq / 2
    (sl, cl), (sr, cr) = sincos_scaled(tl), sincos_scaled(tr)
    # Common rescaling so both walls share one exponential factor.
    top = np.maximum(np.abs(tl.imag), np.abs(tr.imag))
    fl, fr = np.exp(np.abs(tl.imag) - top), np.exp(np.abs(tr.imag) - top)
    sl, cl, sr, cr = sl * fl, cl * fl, sr * fr, cr * fr
    size = np.maximum.reduce([np.abs(sl), np.abs(cl), np.abs(sr), np.abs(cr)])
    left = pq * sl + 1j * gm * cl
    right = -pq * sr + 1j * gp * cr
    return (
        np.abs(left) / ((np.abs(pq) + abs(gm)) * size),
        np.abs(right) / ((np.abs(pq) + abs(gp)) * size),
    )


def _phase_offsets(q, g: GammaPair):
    """Phase offsets ``b`` with their left and right wall residuals.

    Right wall: ``b = arctan(i g+ / (pi q)) - pi q / 2``; left wall:
    ``b = arctan(-i g- / (pi q)) + pi q / 2``.  Both are evaluated as
    ``(i/2) log`` ratios of ``pi q +- g`` so the cancellation near the
    arctan branch points happens in a single subtraction.  For an exact
    root the two agree modulo ``pi``.  A rounded root ``q* + d`` shifts them
    by ``s_r d`` and ``s_l d``; the combination
    ``(s_l b_r - s_r b_l) / (s_l - s_r)`` removes that first-order error,
    which matters for nearly coalescing roots.  Of the three values the one
    with the smallest worse-wall residual is kept, reduced to ``|Re b| <= pi``.
    """
    pq = math.pi * np.atleast_1d(np.asarray(q, dtype=complex))
    gm, gp = g.gamma_minus, g.gamma_plus
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        b_r = 0.5j * (np.log(pq + gp) - np.log(pq - gp)) - pq / 2
        b_l = 0.5j * (np.log(pq - gm) - np.log(pq + gm)) + pq / 2
        b_l = b_l + math.pi * np.round(np.nan_to_num((b_r - b_l).real) / math.pi)
        s_r = -1j * math.pi * gp / (pq * pq - gp * gp) - math.pi / 2
        s_l = 1j * math.pi * gm / (pq * pq - gm * gm) + math.pi / 2
        comb = (s_l * b_r - s_r * b_l) / (s_l - s_r)
    best = np.full(pq.shape, np.nan, dtype=complex)
    best_res = np.full(pq.shape, np.inf)
    res_l = np.full(pq.shape, np.inf)
    res_r = np.full(pq.shape, np.inf)
    # Where pi q = g+ = -g- the eigenfunction is a pure exponential, the
    # limit Im b -> +-inf; a finite offset reproduces it to ~exp(-40).
    big = 20.0 + 0.5 * np.abs(pq.imag)
    for j, cand in enumerate((b_r, b_l, comb, 1j * big, -1j * big)):
        # |Im b| beyond ``big`` is a pure exponential to rounding; larger
        # offsets only overflow later.
        ok = np.isfinite(cand) & (np.abs(cand.imag) <= big)
        if j >= 3:
            # Only a last resort: the shared scaling hides the small wall.
            ok &= ~(best_res <= EXP_ONLY_TOL)
        c = np.where(ok, cand, 0)
        c = c - 2 * math.pi * np.round(c.real / (2 * math.pi))
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            left, right = _wall_residuals(pq / math.pi, c, gm, gp)
        worst = np.where(ok, np.nan_to_num(np.maximum(left, right), nan=np.inf), np.inf)
        better = worst < best_res
        best = np.where(better, c, best)
        best_res = np.where(better, worst, best_res)
        res_l = np.where(better, left, res_l)
        res_r = np.where(better, right, res_r)
    return best, res_l, res_r


def _check_walls(q, res_l, res_r, bc_tol: float):
    """Both walls must hold; a failure means ``q`` is not a root."""
    worst = np.maximum(res_l, res_r)
    if not np.all(worst <= bc_tol):
        i = int(np.argmax(np.where(np.isfinite(worst), worst, np.inf)))
        raise LeftBcViolation(
            f"wall residuals (left {res_l[i]:.3g}, right {res_r[i]:.3g}) at "
            f"q={np.ravel(q)[i]} exceed {bc_tol:g}; spurious root?"
        )


def b_from_q(root: EigenRoot, g: GammaPair, bc_tol: float = BC_TOL) -> complex:
    """Phase offset ``b = arctan(i g+ / (pi q)) - pi q / 2``, refined.

    The right-wall formula is combined with its left-wall counterpart to
    cancel the error of a rounded root (see :func:`_phase_offsets`) and
    shifted by a multiple of ``2 pi`` so that ``|Re b| <= pi``.  Raises
    :class:`LeftBcViolation` if the left-wall condition, which a genuine root
    satisfies automatically, fails (the right wall is checked as well).
    """
    q = complex(root.q_hat)
    if abs(q) == 0:
        raise ValueError("phase offset undefined for q = 0")
    b, res_l, res_r = _phase_offsets(q, g)
    _check_walls(np.array([q]), res_l, res_r, bc_tol)
    return complex(b[0])


def lambda_of(root_or_q, b_hat: complex, length: float) -> complex:
    """``Lambda = (l/2)(1 + sin(pi q) cos(2b) / (pi q))``."""
    q = complex(getattr(root_or_q, "q_hat", root_or_q))
    pq = math.pi * q
    if abs(pq) < 1e-3:
        sinc = 1 - pq**2 / 6 + pq**4 / 120
    else:
        sinc = np.sin(pq) / pq
    return complex(0.5 * length * (1 + sinc * np.cos(2 * b_hat)))


def eigenfunction_eval(entry: ModalRoot, length: float, x):
    """``phi(x) = cos(pi q x / l + b)``; raises :class:`OutOfDomain` outside the axis."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 0.5 * length * (1 + 1e-12)):
        raise OutOfDomain(f"coordinate outside [-{length / 2}, {length / 2}]")
    return np.cos(math.pi * entry.q_hat * x / length + entry.b_hat)


def _logcos(t):
    t = np.asarray(t, dtype=complex)
    t = np.where(t.imag > 0, -t, t)
    return 1j * t - math.log(2) + np.log1p(np.exp(-2j * t))


def _loglambda(q, b, length: float):
    """``log Lambda`` without overflow; vectorized."""
    q = np.asarray(q, dtype=complex)
    b = np.asarray(b, dtype=complex)
    pq = math.pi * q
    small = np.abs(pq) < 1e-3
    safe = np.where(small, 1.0, pq)
    s, _ = sincos_scaled(safe)
    _, c2 = sincos_scaled(2 * b)
    expo = np.abs(safe.imag) + np.abs(2 * b.imag)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        ratio = s * c2 / safe
        direct = np.log(0.5 * length * (1 + ratio * np.exp(np.minimum(expo, 600))))
        log_t = np.log(ratio) + expo
        big = math.log(0.5 * length) + log_t + np.log1p(np.exp(-log_t))
    out = np.where(expo < 600, direct, big)
    if np.any(small):
        out[small] = [np.log(lambda_of(qi, bi, length)) for qi, bi in zip(q[small], b[small])]
    return out


def _log_peak_sq(q, b, length: float):
    """``log(l cosh^2 m)`` with ``m`` the largest ``|Im(pi q x / l + b)|`` on the axis."""
    m = np.maximum(np.abs((0.5 * math.pi * q + b).imag), np.abs((-0.5 * math.pi * q + b).imag))
    return math.log(length) + 2 * (m + np.log1p(np.exp(-2 * m)) - math.log(2))


@dataclass(frozen=True)
class Basis1D:
    """Complete eigenfunction set of one axis at one excitation frequency."""

    axis: AxisBoundary
    ctx: WaveContext
    gamma: GammaPair
    entries: Tuple[ModalRoot, ...]
    rootset: Optional[RootSet] = None
    has_constant_mode: bool = False

    def __len__(self):
        return len(self.entries)

    @property
    def length(self) -> float:
        return self.axis.length

    @property
    def q(self) -> np.ndarray:
        return np.array([e.q_hat for e in self.entries], dtype=complex)

    @property
    def b(self) -> np.ndarray:
        return np.array([e.b_hat for e in self.entries], dtype=complex)

    @property
    def lam(self) -> np.ndarray:
        return np.array([e.lam for e in self.entries], dtype=complex)

    @property
    def k_hat_sq(self) -> np.ndarray:
        return (math.pi * self.q / self.length) ** 2

    @cached_property
    def _log_lam(self) -> np.ndarray:
        return _loglambda(self.q, self.b, self.length)

    def values(self, x) -> np.ndarray:
        """``phi_n(x)`` as an array of shape ``(len(x), len(self))``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(np.abs(x) > 0.5 * self.length * (1 + 1e-12)):
            raise OutOfDomain(f"coordinate outside [-{self.length / 2}, {self.length / 2}]")
        return np.cos(math.pi * np.outer(x, self.q) / self.length + self.b)

    def normalized_values(self, x) -> np.ndarray:
        """``phi_n(x) / sqrt(Lambda_n)``, overflow-safe; shape ``(len(x), len(self))``.

        The square-root branch is arbitrary but fixed per entry, so products
        of two such values always equal ``phi(x) phi(x') / Lambda``.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(np.abs(x) > 0.5 * self.length * (1 + 1e-12)):
            raise OutOfDomain(f"coordinate outside [-{self.length / 2}, {self.length / 2}]")
        if not self.entries:
            return np.zeros((len(x), 0), dtype=complex)
        half_log_lam = 0.5 * self._log_lam
        theta = math.pi * np.outer(x, self.q) / self.length + self.b
        return np.exp(_logcos(theta) - half_log_lam)


def build_basis(
    axis: AxisBoundary,
    ctx: WaveContext,
    p: SolverParams,
    lambda_warn_tol: float = LAMBDA_WARN_TOL,
) -> Basis1D:
    """Solve the axis and attach ``b`` and ``Lambda`` to every root.

    An entry is flagged near-defective when ``|Lambda|`` falls below
    ``lambda_warn_tol`` times ``l max|phi|^2``; the reference grows like
    ``cosh^2`` of the imaginary phase, so strongly evanescent pairs are
    judged relative to their own size.

    The constant mode (``q = 0``, ``b = 0``, ``Lambda = l``) is added when both
    walls act as rigid at this frequency (``g- = g+ = 0``).
    """
    g = make_gamma(axis, ctx)
    rs = solve_axis(g, p, axis.length)
    entries = []
    rigid = g.gamma_minus == 0 and g.gamma_plus == 0
    if rigid:
        const = EigenRoot(0j, 0.0, Group.CONSTANT, axis.length)
        entries.append(ModalRoot(const, 0j, complex(axis.length)))
    roots = rs.roots
    q = np.array([r.q_hat for r in roots], dtype=complex)
    flagged = []
    if len(roots):
        b, res_l, res_r = _phase_offsets(q, g)
        if coalesced_pair(g):
            # parity-resolved pair: even cos (b = 0) or odd sin (b = pi/2)
            par = {Group.G3_SYM_PLUS: 0.0, Group.G3_SYM_MINUS: math.pi / 2}
            idx = [i for i, r in enumerate(roots) if r.group in par]
            if idx:
                b[idx] = [par[roots[i].group] for i in idx]
                res_l[idx], res_r[idx] = _wall_residuals(q[idx], b[idx], g.gamma_minus, g.gamma_plus)
        _check_walls(q, res_l, res_r, BC_TOL)
        log_ref = _log_peak_sq(q, b, axis.length) + math.log(lambda_warn_tol)
        log_lam = _loglambda(q, b, axis.length).real
        for r, bi, ll, lr in zip(roots, b, log_lam, log_ref):
            lam = lambda_of(r, complex(bi), axis.length)
            bad = ll < lr
            if bad:
                flagged.append(r.q_hat)
            entries.append(ModalRoot(r, complex(bi), lam, bad))
    if flagged:
        warnings.warn(
            f"near-defective eigenfunctions (|Lambda| < {lambda_warn_tol:g} l max|phi|^2) at q = {flagged}",
            NearDefectiveWarning,
            stacklevel=2,
        )
    return Basis1D(axis, ctx, g, tuple(entries), rs, rigid)

"""First-order eigenvalue guesses and their regime selection.

Each guess family approximates roots of the axis eigenvalue condition in a
different wall regime:

* ``G1``  hard walls, ``q ~ n`` perturbed by ``gamma_minus + gamma_plus``
* ``G2``  soft walls, ``q ~ n`` perturbed by the parallel combination
* ``G3``  negative-reactance walls, ``q ~ gamma / pi`` (large ``Im q``)
* ``G1P`` strongly asymmetric walls, ``q ~ n + 1/2``

The selection in :func:`candidate_set` is deliberately over-inclusive;
Newton refinement and deduplication discard redundant guesses.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import List, Tuple

from rectroom.core import GammaPair

SYMMETRIC_TOL = 1e-9


class Group(enum.Enum):
    G1 = "G1"
    G2 = "G2"
    G3 = "G3"
    G3_SYM_PLUS = "G3+"
    G3_SYM_MINUS = "G3-"
    G1P = "G1P"
    ORACLE = "oracle"
    CONSTANT = "const"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Candidate:
    q_hat: complex
    group: Group
    n: int = 0


def group1_guess(n: int, g: GammaPair) -> complex:
    """Hard-wall guess ``(n + sqrt(n^2 + 4i(g- + g+)/pi^2)) / 2``."""
    root = cmath.sqrt(n * n + 4j * g.total / math.pi**2)
    return 0.5 * (n + root)


def group2_guess(n: int, g: GammaPair) -> complex:
    """Soft-wall guess ``n (1 + i / (g_par - i))``."""
    if g.gamma_parallel is None:
        raise ValueError("soft-wall guess undefined: gamma_minus + gamma_plus == 0")
    return n * (1 + 1j / (g.gamma_parallel - 1j))


def group3_guess(g: GammaPair, symmetric_tol: float = SYMMETRIC_TOL) -> List[Candidate]:
    """Negative-reactance guesses ``gamma/pi`` for each wall with ``Im gamma > 0``.

    When both walls carry the same ``gamma`` the two guesses coincide, and
    the split pair ``(gamma/pi)(1 +- 2 exp(i gamma))`` is returned instead.
    """
    gm, gp = g.gamma_minus, g.gamma_plus
    if abs(gm - gp) <= symmetric_tol * max(1.0, abs(gm)):
        if gm.imag <= 0:
            return []
        split = 2 * cmath.exp(1j * gm)
        return [
            Candidate(gm / math.pi * (1 + split), Group.G3_SYM_PLUS),
            Candidate(gm / math.pi * (1 - split), Group.G3_SYM_MINUS),
        ]
    return [Candidate(gamma / math.pi, Group.G3) for gamma in (gm, gp) if gamma.imag > 0]


def coalesced_pair(g: GammaPair, symmetric_tol: float = SYMMETRIC_TOL, resolution: float = 1e-4) -> bool:
    """Symmetric walls whose even/odd ``G3`` pair is closer than ``resolution``.

    The pair ``(gamma/pi)(1 +- 2 exp(i gamma))`` is separated by about
    ``4 |gamma| exp(-Im gamma) / pi``; below the merge tolerance of a generic
    root search it is resolved with :func:`parity_pair` instead.
    """
    gm, gp = g.gamma_minus, g.gamma_plus
    # Im gamma > 8 keeps the pair clear of the root at 0 and |E| tiny
    if gm.imag <= 8 or abs(gm - gp) > symmetric_tol * max(1.0, abs(gm)):
        return False
    return 4 * abs(gm) * math.exp(-gm.imag) / math.pi < resolution


def parity_pair(g: GammaPair, iters: int = 60) -> Tuple[complex, complex]:
    """Even and odd eigenvalue of a coalescing symmetric ``G3`` pair.

    With equal walls ``v`` factors into ``pi q tan(pi q / 2) = i gamma``
    (even) and ``pi q cot(pi q / 2) = -i gamma`` (odd).  Writing
    ``E = exp(i pi q)`` these read ``pi q = gamma (1 +- E) / (1 -+ E)``, a
    strong contraction when ``|gamma E|`` is small.
    """
    gamma = 0.5 * (g.gamma_minus + g.gamma_plus)
    out = []
    for sign in (1, -1):
        w = gamma
        for _ in range(iters):
            e = cmath.exp(1j * w)
            nxt = gamma + sign * 2 * gamma * e / (1 - sign * e)
            if nxt == w:
                break
            w = nxt
        out.append(w / math.pi)
    return out[0], out[1]


def group1p_guess(n: int, g: GammaPair) -> complex:
    """Asymmetric-wall guess ``(n + 1/2)(1 + i / (g- + g+))``."""
    s = g.total
    if s == 0:
        raise ValueError("asymmetric-wall guess undefined: gamma_minus + gamma_plus == 0")
    return (n + 0.5) * (1 + 1j / s)


def candidate_set(g: GammaPair, n_max: int) -> List[Candidate]:
    """All initial guesses for branches ``0..n_max``.

    Family ``G1`` is used above the hard/soft cutoff ``a12`` (or everywhere
    if ``a12 < 1``), ``G2`` below it, ``G1P`` from ``a12`` up to ``a11p``;
    the ``G3`` guesses are always appended.  ``G1`` and ``G1P`` also seed
    the last branch below ``a12``, where the regimes overlap and neither
    family alone is reliable.  Duplicates are kept.
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    out = []
    a12, a11p = g.a12, g.a11p
    lo = a12 - 1 if a12 >= 1 else a12
    for n in range(n_max + 1):
        if n > lo or a12 < 1:
            out.append(Candidate(group1_guess(n, g), Group.G1, n))
        if n < a12 and g.gamma_parallel is not None:
            out.append(Candidate(group2_guess(n, g), Group.G2, n))
        if lo < n < a11p or a12 <= n < a11p:
            out.append(Candidate(group1p_guess(n, g), Group.G1P, n))
    out.extend(group3_guess(g))
    return out

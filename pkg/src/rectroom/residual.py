"""Pole-free residual of the axis eigenvalue condition.

    v(q) = ((pi q)^2 + g- g+) sin(pi q) - i (g- + g+) (pi q) cos(pi q)

``sin`` and ``cos`` grow like ``exp(pi |Im q|)``; the ``*_scaled`` variants
return the same quantities multiplied by ``exp(-pi |Im q|)``, which keeps
them finite everywhere and leaves phases and ratios unchanged.
"""

from __future__ import annotations

import numpy as np

from rectroom.core import GammaPair

EPS = np.finfo(float).eps


def sincos_scaled(z):
    """``sin(z)``, ``cos(z)`` times ``exp(-|Im z|)``, overflow-free."""
    z = np.asarray(z, dtype=complex)
    a, b = z.real, z.imag
    e = np.exp(-2 * np.abs(b))
    ch = 0.5 * (1 + e)
    sh = 0.5 * np.sign(b) * (1 - e)
    s = np.sin(a) * ch + 1j * np.cos(a) * sh
    c = np.cos(a) * ch - 1j * np.sin(a) * sh
    return s, c


def scale_factor(q):
    """Positive factor relating scaled and unscaled values: ``exp(pi |Im q|)``."""
    return np.exp(np.pi * np.abs(np.imag(q)))


def residual_scaled(q, g: GammaPair):
    q = np.asarray(q, dtype=complex)
    pq = np.pi * q
    s, c = sincos_scaled(pq)
    return (pq * pq + g.product) * s - 1j * g.total * pq * c


def residual_derivative_scaled(q, g: GammaPair):
    q = np.asarray(q, dtype=complex)
    pq = np.pi * q
    s, c = sincos_scaled(pq)
    P, S = g.product, g.total
    return (
        2 * np.pi * pq * s
        + np.pi * (pq * pq + P) * c
        - 1j * S * np.pi * c
        + 1j * S * np.pi * pq * s
    )


def newton_data_scaled(q, g: GammaPair):
    """Scaled ``v``, ``v'`` and the rounding floor from one trig evaluation."""
    q = np.asarray(q, dtype=complex)
    pq = np.pi * q
    s, c = sincos_scaled(pq)
    P, S = g.product, g.total
    a = (pq * pq + P) * s
    b = S * pq * c
    v = a - 1j * b
    dv = 2 * np.pi * pq * s + np.pi * (pq * pq + P) * c - 1j * S * np.pi * c + 1j * S * np.pi * pq * s
    with np.errstate(over="ignore", invalid="ignore"):
        floor = 8 * EPS * (np.abs(a) + np.abs(b) + np.maximum(1.0, np.abs(q)) * np.abs(dv))
    return v, dv, np.where(np.isfinite(floor), floor, 0.0)


def residual_terms_scaled(q, g: GammaPair):
    """Magnitude of the two residual terms (scaled): the cancellation scale."""
    q = np.asarray(q, dtype=complex)
    pq = np.pi * q
    s, c = sincos_scaled(pq)
    return np.abs(pq * pq + g.product) * np.abs(s) + np.abs(g.total * pq) * np.abs(c)


PI_LD = 4 * np.arctan(np.longdouble(1))


def _terms_ld(q, g: GammaPair):
    """``pi q``, ``sin``, ``cos`` in extended precision (where the platform has it)."""
    q = np.asarray(q, dtype=np.clongdouble)
    pq = PI_LD * q
    with np.errstate(over="ignore", invalid="ignore"):
        return pq, np.sin(pq), np.cos(pq)


def residual(q, g: GammaPair):
    """Exact ``v(q)``; may overflow for ``pi |Im q|`` beyond ~700.

    Evaluated in extended precision and rounded, so the result is accurate
    to a few units in the last place even where the two terms cancel.
    """
    pq, s, c = _terms_ld(q, g)
    P, S = np.clongdouble(g.product), np.clongdouble(g.total)
    with np.errstate(over="ignore", invalid="ignore"):
        return ((pq * pq + P) * s - 1j * S * pq * c).astype(complex)


def residual_derivative(q, g: GammaPair):
    """Closed-form ``dv/dq`` (extended precision, rounded)."""
    pq, s, c = _terms_ld(q, g)
    P, S = np.clongdouble(g.product), np.clongdouble(g.total)
    with np.errstate(over="ignore", invalid="ignore"):
        d = 2 * PI_LD * pq * s + PI_LD * (pq * pq + P) * c - 1j * S * PI_LD * c + 1j * S * PI_LD * pq * s
    return d.astype(complex)


def polish_extended(q, g: GammaPair, steps: int = 3):
    """A few undamped Newton steps in extended precision, rounded to double.

    Used on already converged roots to land on (or next to) the double
    closest to the true root.  Results that move a root by more than
    ``1e-12 |q|`` or do not lower the extended-precision residual are
    rejected.
    """
    q0 = np.asarray(q, dtype=complex)
    z = q0.astype(np.clongdouble)
    for _ in range(steps):
        pq, s, c = _terms_ld(z, g)
        P, S = np.clongdouble(g.product), np.clongdouble(g.total)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            v = (pq * pq + P) * s - 1j * S * pq * c
            dv = 2 * PI_LD * pq * s + PI_LD * (pq * pq + P) * c - 1j * S * PI_LD * c + 1j * S * PI_LD * pq * s
            step = v / dv
        ok = np.isfinite(step) & (dv != 0)
        z = np.where(ok, z - np.where(ok, step, 0), z)
    out = z.astype(complex)
    moved = np.abs(out - q0) > 1e-12 * np.maximum(1.0, np.abs(q0))
    keep = moved | ~np.isfinite(out)
    with np.errstate(over="ignore", invalid="ignore"):
        keep |= ~(np.abs(residual(out, g)) < np.abs(residual(q0, g)))
    return np.where(keep & (out != q0), q0, out)


def rounding_floor_scaled(q, g: GammaPair):
    """Smallest scaled ``|v|`` resolvable in double precision at ``q``.

    Combines cancellation between the two terms and the rounding of
    ``pi q`` propagated through ``v'``.
    """
    q = np.asarray(q, dtype=complex)
    terms = residual_terms_scaled(q, g)
    dv = np.abs(residual_derivative_scaled(q, g))
    with np.errstate(over="ignore", invalid="ignore"):
        floor = 8 * EPS * (terms + np.maximum(1.0, np.abs(q)) * dv)
    # an overflowing floor would accept anything
    return np.where(np.isfinite(floor), floor, 0.0)


def residual_tolerance(q, g: GammaPair, eps: float):
    """Acceptance bound on the *unscaled* ``|v(q)|``: ``max(eps, floor)``."""
    return np.maximum(eps, rounding_floor_scaled(q, g) * scale_factor(q))


def is_root(q, g: GammaPair, eps: float):
    """Vectorized acceptance test carried out in scaled form (no overflow)."""
    q = np.asarray(q, dtype=complex)
    vs = np.abs(residual_scaled(q, g))
    bound = np.maximum(eps / scale_factor(q), rounding_floor_scaled(q, g))
    return np.isfinite(vs) & (vs <= bound)

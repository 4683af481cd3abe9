"""Closed-form resonance modes of a 1D room and reflection coefficients.

A mode solves the axis condition with the eigenvalue equal to the excitation
wavenumber; for frequency-independent walls this gives

    q~ = arctan(i (b- + b+) / (1 + b- b+)) / pi + n

with ``Re q~ = arg(R- R+) / (2 pi) + n`` and ``Im q~ = -ln|R- R+| / (2 pi)``,
``R = (1 - beta) / (1 + beta)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, List

import numpy as np

from rectroom.core import AxisBoundary
from rectroom.errors import ConfigError, RectRoomError


class DegenerateDenominator(RectRoomError, ValueError):
    """``1 + beta_minus * beta_plus == 0``."""


class AbsorbingPole(RectRoomError, ValueError):
    """A wall with ``beta = 1`` makes ``R- R+ = 0`` (infinite damping)."""


class FrequencyDependentAdmittance(ConfigError):
    """Mode formulas need constant admittances."""


@dataclass(frozen=True)
class ModeValue:
    q_tilde: complex
    n: int
    re_part: float
    im_part: float


def reflection_coefficient(beta: complex) -> complex:
    beta = complex(beta)
    if beta == -1:
        raise ValueError("reflection coefficient has a pole at beta = -1")
    return (1 - beta) / (1 + beta)


def _arg(z: complex) -> float:
    """Argument in (-pi, pi]."""
    a = cmath.phase(z)
    return math.pi if a == -math.pi else a


def mode_q(n: int, beta_minus: complex, beta_plus: complex) -> ModeValue:
    """Resonance mode ``n`` from the arctan form, cross-checked against ``R- R+``."""
    bm, bp = complex(beta_minus), complex(beta_plus)
    den = 1 + bm * bp
    if den == 0:
        raise DegenerateDenominator(f"1 + beta- beta+ = 0 for beta = {bm}, {bp}")
    rr = reflection_coefficient(bm) * reflection_coefficient(bp)
    if rr == 0:
        raise AbsorbingPole(f"R- R+ = 0 for beta = {bm}, {bp}: infinite damping")
    q = complex(np.arctan(1j * (bm + bp) / den)) / math.pi + n
    re = _arg(rr) / (2 * math.pi) + n
    im = -math.log(abs(rr)) / (2 * math.pi)
    # arctan lands in Re (-1/2, 1/2); arg in (-pi, pi] gives (-1/2, 1/2].
    shift = round(re - q.real)
    if abs(q.real + shift - re) > 1e-10 or abs(q.imag - im) > 1e-10 * max(1.0, abs(im)):
        raise ArithmeticError(f"mode representations disagree: {q} vs {re}+{im}i")
    return ModeValue(q + shift, n, re, im)


def _constant_betas(axis: AxisBoundary):
    if not (axis.beta_minus.is_constant and axis.beta_plus.is_constant):
        raise FrequencyDependentAdmittance("resonance-mode formulas need frequency-independent admittance")
    return axis.beta_minus.constant, axis.beta_plus.constant


def mode_values(axis: AxisBoundary, n_range: Iterable[int]) -> List[ModeValue]:
    bm, bp = _constant_betas(axis)
    return [mode_q(n, bm, bp) for n in n_range]


def mode_frequencies(axis: AxisBoundary, c: float, n_range: Iterable[int]) -> np.ndarray:
    """Peak frequencies ``Re(q~) c / (2 l)`` in Hz."""
    return np.array([m.re_part * c / (2 * axis.length) for m in mode_values(axis, n_range)])

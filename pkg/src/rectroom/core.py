"""Domain types shared by every module.

Coordinates are measured from the room centre: axis ``j`` spans
``[-l_j/2, l_j/2]``.  Admittances are dimensionless normalized values
``beta`` entering the wall condition ``dp/dn + i k beta p = 0``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from rectroom.errors import AdmittanceRangeError, ConfigError


@dataclass(frozen=True)
class Admittance:
    """Normalized wall admittance, constant or tabulated over frequency.

    A table holds strictly increasing frequencies (Hz) and the real and
    imaginary parts of ``beta``; both parts are interpolated linearly and
    independently.  Evaluation outside the table raises
    :class:`AdmittanceRangeError`.
    """

    constant: Optional[complex] = None
    freqs: Tuple[float, ...] = ()
    re: Tuple[float, ...] = ()
    im: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.constant is not None:
            if self.freqs:
                raise ConfigError("admittance is either constant or tabulated")
            c = complex(self.constant)
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise ConfigError(f"non-finite admittance {c}")
            object.__setattr__(self, "constant", c)
            return
        if not (len(self.freqs) == len(self.re) == len(self.im)) or not self.freqs:
            raise ConfigError("admittance table needs equal-length, non-empty columns")
        f = np.asarray(self.freqs, dtype=float)
        if np.any(np.diff(f) <= 0):
            raise ConfigError("admittance table frequencies must be strictly increasing")
        if not (np.all(np.isfinite(self.re)) and np.all(np.isfinite(self.im))):
            raise ConfigError("admittance table holds non-finite values")

    @classmethod
    def const(cls, beta: complex) -> "Admittance":
        return cls(constant=complex(beta))

    @classmethod
    def from_impedance(cls, zeta: complex) -> "Admittance":
        """Constant admittance ``1/zeta`` from a normalized impedance."""
        zeta = complex(zeta)
        if zeta == 0:
            raise ConfigError("zero impedance has no finite admittance")
        return cls(constant=1.0 / zeta)

    @classmethod
    def from_table(cls, rows: Sequence[Sequence[float]]) -> "Admittance":
        """Build from ``(f_hz, re_beta, im_beta)`` rows."""
        rows = [tuple(float(v) for v in r) for r in rows]
        if any(len(r) != 3 for r in rows):
            raise ConfigError("admittance table rows need exactly 3 columns")
        f, re, im = zip(*rows) if rows else ((), (), ())
        return cls(freqs=tuple(f), re=tuple(re), im=tuple(im))

    @classmethod
    def from_csv(cls, path) -> "Admittance":
        """Read comma-separated ``f_hz, re_beta, im_beta`` rows.

        Blank lines and lines starting with ``#`` are skipped, as is a
        single non-numeric header line.
        """
        rows = []
        header_ok = True
        with open(path, newline="") as fh:
            for rec in csv.reader(fh):
                if not rec or not "".join(rec).strip() or rec[0].lstrip().startswith("#"):
                    continue
                try:
                    rows.append([float(v) for v in rec])
                except ValueError:
                    if not header_ok:
                        raise ConfigError(f"{path}: bad admittance row {rec!r}") from None
                header_ok = False
        return cls.from_table(rows)

    @property
    def is_constant(self) -> bool:
        return self.constant is not None

    def is_zero_at(self, f: float) -> bool:
        return self(f) == 0

    def __call__(self, f: float) -> complex:
        if self.constant is not None:
            return self.constant
        f = float(f)
        lo, hi = self.freqs[0], self.freqs[-1]
        if not lo <= f <= hi:
            raise AdmittanceRangeError(
                f"frequency {f} Hz outside admittance table range [{lo}, {hi}] Hz"
            )
        return complex(np.interp(f, self.freqs, self.re), np.interp(f, self.freqs, self.im))


@dataclass(frozen=True)
class AxisBoundary:
    """One room axis: length (m) and the admittances of its two walls."""

    length: float
    beta_minus: Admittance
    beta_plus: Admittance

    def __post_init__(self):
        if not (self.length > 0 and math.isfinite(self.length)):
            raise ConfigError(f"axis length must be positive, got {self.length}")

    @classmethod
    def constant(cls, length: float, beta_minus: complex, beta_plus: complex) -> "AxisBoundary":
        return cls(float(length), Admittance.const(beta_minus), Admittance.const(beta_plus))


@dataclass(frozen=True)
class RoomSpec:
    axes: Tuple[AxisBoundary, ...]
    speed_of_sound: float = 343.0

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        if not 1 <= len(self.axes) <= 3:
            raise ConfigError(f"room needs 1 to 3 axes, got {len(self.axes)}")
        if not self.speed_of_sound > 0:
            raise ConfigError("speed of sound must be positive")

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def lengths(self) -> Tuple[float, ...]:
        return tuple(a.length for a in self.axes)

    def contains(self, point, tol: float = 1e-12) -> bool:
        p = np.atleast_1d(np.asarray(point, dtype=float))
        if p.shape != (self.dim,):
            return False
        half = np.asarray(self.lengths) / 2
        return bool(np.all(np.abs(p) <= half * (1 + tol)))

    def from_corner(self, points):
        """Shift corner-referenced coordinates to centre-referenced ones."""
        return np.asarray(points, dtype=float) - np.asarray(self.lengths) / 2

    def to_corner(self, points):
        return np.asarray(points, dtype=float) + np.asarray(self.lengths) / 2


@dataclass(frozen=True)
class WaveContext:
    """Excitation frequency ``f`` (Hz), wavenumber ``k`` and per-axis ``q = k l / pi``."""

    f: float
    k: float
    q: Tuple[float, ...]


def make_wave_context(room: RoomSpec, f: float) -> WaveContext:
    f = float(f)
    if not f >= 0:
        raise ConfigError(f"frequency must be non-negative, got {f}")
    k = 2 * math.pi * f / room.speed_of_sound
    return WaveContext(f=f, k=k, q=tuple(k * a.length / math.pi for a in room.axes))


@dataclass(frozen=True)
class GammaPair:
    """Wall parameters ``gamma = beta k l`` of one axis and the derived cutoffs.

    ``gamma_parallel`` is ``None`` when ``gamma_minus + gamma_plus == 0``.
    ``a12`` separates the hard-wall and soft-wall guess families and
    ``a11p`` the hard-wall and asymmetric-wall families.
    """

    gamma_minus: complex
    gamma_plus: complex
    gamma_parallel: Optional[complex] = field(init=False)
    a12: float = field(init=False)
    a11p: float = field(init=False)

    def __post_init__(self):
        gm, gp = complex(self.gamma_minus), complex(self.gamma_plus)
        object.__setattr__(self, "gamma_minus", gm)
        object.__setattr__(self, "gamma_plus", gp)
        s = gm + gp
        object.__setattr__(self, "gamma_parallel", None if s == 0 else gm * gp / s)
        object.__setattr__(self, "a12", math.sqrt(abs(gm * gp)) / math.pi)
        object.__setattr__(self, "a11p", abs(s) / math.pi)

    @property
    def product(self) -> complex:
        return self.gamma_minus * self.gamma_plus

    @property
    def total(self) -> complex:
        return self.gamma_minus + self.gamma_plus


def make_gamma(axis: AxisBoundary, ctx: WaveContext) -> GammaPair:
    kl = ctx.k * axis.length
    return GammaPair(axis.beta_minus(ctx.f) * kl, axis.beta_plus(ctx.f) * kl)


@dataclass(frozen=True)
class SolverParams:
    """Truncation order and Newton / deduplication tolerances.

    ``eps_newton`` is an absolute bound on ``|v|``; roots whose residual
    cannot reach it in double precision are held to the rounding floor of
    the residual instead (see :func:`rectroom.residual.residual_tolerance`).
    Once the full Newton step is below ``polish_step * max(1, |q|)`` the
    damping is dropped for quadratic convergence; ``0`` keeps it throughout.
    """

    n_max: int = 20
    n_newton: int = 100
    alpha_newton: float = 0.3
    eps_newton: float = 1e-11
    dedup_tol: float = 1e-4
    zero_tol: float = 1e-4
    polish_step: float = 1e-3

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 0:
            raise ConfigError(f"n_max must be a non-negative integer, got {self.n_max}")
        if int(self.n_newton) != self.n_newton or self.n_newton < 0:
            raise ConfigError("n_newton must be a non-negative integer")
        if not 0 < self.alpha_newton <= 1:
            raise ConfigError("alpha_newton must lie in (0, 1]")
        if not self.polish_step >= 0:
            raise ConfigError("polish_step must be non-negative")
        for name in ("eps_newton", "dedup_tol", "zero_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        object.__setattr__(self, "n_max", int(self.n_max))
        object.__setattr__(self, "n_newton", int(self.n_newton))

    def with_n_max(self, n_max: int) -> "SolverParams":
        return replace(self, n_max=int(n_max))

import math

import numpy as np
import pytest

from rectroom import AxisBoundary, RoomSpec, make_gamma, make_wave_context

C = 343.0

# PASS/FAIL lines of the acceptance criteria, echoed in the run summary.
ACCEPTANCE = []

# Fig.-1 style axis configurations at l = 1 m, f = 5000 Hz.
FIG1 = {
    "A": (0.01 + 0.01j, 0.02),
    "B": (0.1 + 0.1j, 0.2 + 0.07j),
    "C": (0.1 + 0.06j, 0.0),
}

# Two-dimensional test room: impedances per wall, lengths 1.0 x 1.4 m.
ZETA_2D = (10 - 3j, 6, 12 - 5j, 4 - 4j)


def axis_gamma(bm, bp, f=5000.0, length=1.0):
    ax = AxisBoundary.constant(length, bm, bp)
    ctx = make_wave_context(RoomSpec((ax,), C), f)
    return ax, ctx, make_gamma(ax, ctx)


def gamma_from_kl(bm, bp, kl):
    """Gamma pair for a 1 m axis at the frequency giving ``k l = kl``."""
    return axis_gamma(bm, bp, f=kl * C / (2 * math.pi))[2]


def room_2d():
    z = ZETA_2D
    return RoomSpec(
        (
            AxisBoundary.constant(1.0, 1 / z[0], 1 / z[1]),
            AxisBoundary.constant(1.4, 1 / z[2], 1 / z[3]),
        ),
        C,
    )


def random_configs(n, seed=1):
    """Seeded admittance pairs with modulus U(0, 5), phase U(-pi, pi), and kl U(1, 100)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        mod = rng.uniform(0, 5, 2)
        ph = rng.uniform(-np.pi, np.pi, 2)
        b = mod * np.exp(1j * ph)
        out.append((complex(b[0]), complex(b[1]), float(rng.uniform(1, 100))))
    return out


@pytest.fixture
def fig1():
    return {k: axis_gamma(*v) for k, v in FIG1.items()}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)

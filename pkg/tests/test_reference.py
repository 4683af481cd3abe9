import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rectroom import AxisBoundary, RoomSpec, SolverParams, make_wave_context
from rectroom.errors import DegenerateWronskian, GridTooLarge, OutOfDomain
from rectroom.greens import green_eval
from rectroom.metrics import l2_relative_error
from rectroom.reference import (
    fdm_green_2d,
    fdm_operator_2d,
    fdm_self_convergence,
    green_1d_closed_form,
    grid_intervals,
)

from conftest import C, room_2d

beta = st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False)


def setup_1d(bm, bp, f=600.0):
    ax = AxisBoundary.constant(1.0, bm, bp)
    return ax, make_wave_context(RoomSpec((ax,), C), f)


@given(beta, beta, st.floats(50, 3000), st.floats(-0.45, 0.45))
@settings(max_examples=60)
def test_closed_form_walls_and_jump(bm, bp, f, x0):
    ax, ctx = setup_1d(bm, bp, f)
    k = ctx.k
    try:
        g = lambda x: green_1d_closed_form(ax, ctx, x0, np.asarray(x, float))
        g(0.0)
    except DegenerateWronskian:
        return
    h = 1e-6
    gl, gl1, gr, gr1 = g([-0.5, -0.5 + h, 0.5, 0.5 - h])
    scale = np.abs(g(np.linspace(-0.5, 0.5, 41))).max()
    d_left = (gl1 - gl) / h
    d_right = (gr - gr1) / h
    # O(h) one-sided differences: tolerance follows h k^2
    fd = 1e-6 * k * k * scale + 1e-7 * k * scale
    assert abs(-d_left + 1j * k * bm * gl) <= fd
    assert abs(d_right + 1j * k * bp * gr) <= fd
    # derivative jump across the source is -1
    e = 1e-7
    a, b, c, d = g([x0 - 2 * e, x0 - e, x0 + e, x0 + 2 * e])
    jump = (d - c) / e - (b - a) / e
    assert abs(jump + 1) < 1e-4 + 1e-6 * k * k * scale


def test_closed_form_exact_walls():
    # analytic derivative of the homogeneous pieces gives the wall conditions to rounding
    bm, bp = 0.3 - 0.2j, 0.1 + 0.4j
    ax, ctx = setup_1d(bm, bp)
    k = ctx.k
    x0 = 0.17
    um = lambda s: np.cos(k * (s + 0.5)) + 1j * bm * np.sin(k * (s + 0.5))
    dum = lambda s: -k * np.sin(k * (s + 0.5)) + 1j * bm * k * np.cos(k * (s + 0.5))
    assert abs(-dum(-0.5) + 1j * k * bm * um(-0.5)) < 1e-10 * k
    up = lambda s: np.cos(k * (0.5 - s)) + 1j * bp * np.sin(k * (0.5 - s))
    dup = lambda s: k * np.sin(k * (0.5 - s)) - 1j * bp * k * np.cos(k * (0.5 - s))
    assert abs(dup(0.5) + 1j * k * bp * up(0.5)) < 1e-10 * k
    assert green_1d_closed_form(ax, ctx, x0, 0.5) == pytest.approx(-um(x0) * up(0.5) / (um(x0) * dup(x0) - dum(x0) * up(x0)))


def test_closed_form_reciprocity():
    ax, ctx = setup_1d(0.2 + 0.1j, 0.05)
    for a, b in ((-0.3, 0.2), (0.1, 0.45)):
        assert green_1d_closed_form(ax, ctx, a, b) == pytest.approx(green_1d_closed_form(ax, ctx, b, a), rel=1e-14)


def test_closed_form_errors():
    ax, ctx = setup_1d(0, 0, C / 2)  # lossless resonance
    with pytest.raises(DegenerateWronskian):
        green_1d_closed_form(ax, ctx, 0.1, 0.2)
    ax, ctx = setup_1d(0.1, 0.1)
    with pytest.raises(OutOfDomain):
        green_1d_closed_form(ax, ctx, 0.6, 0.0)


def test_operator_is_complex_symmetric():
    room = room_2d()
    ctx = make_wave_context(room, 500.0)
    A = fdm_operator_2d(room, ctx, (9, 12))
    assert abs(A - A.T).max() == 0
    assert abs(A - A.conj().T).max() > 0


def test_rigid_square_vs_expansion():
    ax = AxisBoundary.constant(1.0, 0, 0)
    room = RoomSpec((ax, ax), C)
    ctx = make_wave_context(room, 260.0)
    x0 = np.array([0.13, -0.21])
    fdm = fdm_green_2d(room, ctx, x0, epw=40)
    lam = C / ctx.f
    keep = np.linalg.norm(fdm.points - x0, axis=1) > lam / 8
    ee = green_eval(room, ctx, x0, fdm.points[keep], SolverParams(n_max=40))
    assert l2_relative_error(ee.values, fdm.values[keep]) < 0.05


def test_self_convergence_is_second_order():
    room = room_2d()
    ctx = make_wave_context(room, 300.0)
    ratio, _, _ = fdm_self_convergence(room, ctx, [0.1, 0.2], 20, exclude_radius=C / 300.0 / 8)
    assert 3 <= ratio <= 5


def test_grid_checks():
    room = room_2d()
    ctx = make_wave_context(room, 500.0)
    assert min(grid_intervals(room, ctx, 10)) >= 7
    with pytest.raises(ValueError):
        grid_intervals(room, ctx, 5)
    with pytest.raises(GridTooLarge):
        fdm_green_2d(room, ctx, [0, 0], epw=40, max_unknowns=100)
    with pytest.raises(OutOfDomain):
        fdm_green_2d(room, ctx, [0.7, 0], epw=20)

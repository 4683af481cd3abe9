import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import rectroom.eigensolver as es
from rectroom import GammaPair, SolverParams
from rectroom.asymptotics import Candidate, Group, coalesced_pair
from rectroom.eigensolver import (
    TIGHT_DEDUP,
    canonicalize_and_dedup,
    certified_count,
    expected_count,
    newton_refine,
    residual,
    residual_derivative,
    rouche_applies,
    solve_axis,
)
from rectroom.errors import CountMismatch, NonConvergenceWarning
from rectroom.residual import is_root, residual_scaled, scale_factor

from conftest import FIG1, axis_gamma, gamma_from_kl

cplx = st.complex_numbers(max_magnitude=30, allow_nan=False, allow_infinity=False)
qs = st.complex_numbers(max_magnitude=20, allow_nan=False, allow_infinity=False).filter(lambda z: abs(z.imag) < 8)


# -- residual ------------------------------------------------------------------


@given(cplx, cplx)
def test_residual_zero_at_origin(gm, gp):
    assert residual(0j, GammaPair(gm, gp)) == 0


def test_residual_rigid_integers():
    g = GammaPair(0, 0)
    assert np.all(np.abs(residual(np.arange(0, 12), g)) < 1e-10)


@given(qs, cplx, cplx)
def test_residual_odd(q, gm, gp):
    g = GammaPair(gm, gp)
    a, b = residual(q, g), residual(-q, g)
    assert abs(a + b) <= 1e-12 * max(1.0, abs(a))


@given(qs, cplx, cplx)
def test_scaled_residual_consistent(q, gm, gp):
    g = GammaPair(gm, gp)
    a = residual(q, g)
    b = residual_scaled(q, g) * scale_factor(q)
    assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


def test_residual_derivative_finite_difference():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        q = complex(rng.uniform(-10, 10), rng.uniform(-3, 3))
        g = GammaPair(complex(*rng.uniform(-20, 20, 2)), complex(*rng.uniform(-20, 20, 2)))
        h = 1e-6 * max(1.0, abs(q))
        fd = (residual(q + h, g) - residual(q - h, g)) / (2 * h)
        d = residual_derivative(q, g)
        worst = max(worst, abs(fd - d) / abs(d))
    assert worst < 1e-6


def test_residual_derivative_closed_values():
    g0 = GammaPair(0, 0)
    for n in range(1, 6):
        assert residual_derivative(n, g0) == pytest.approx((-1) ** n * math.pi**3 * n**2, rel=1e-12)
    g = GammaPair(2 + 1j, -0.5 + 3j)
    expect = math.pi * g.product - 1j * math.pi * g.total
    assert residual_derivative(0j, g) == pytest.approx(expect, rel=1e-14)


# -- Newton and dedup ------------------------------------------------------------------


def test_newton_rigid_is_noop():
    g = GammaPair(0, 0)
    cands = [Candidate(complex(n), Group.G1, n) for n in range(6)]
    out = newton_refine(cands, g, SolverParams(n_max=5, n_newton=0))
    assert [q for q, *_ in out] == [complex(n) for n in range(6)]
    out = newton_refine(cands, g, SolverParams(n_max=5))
    assert [q for q, *_ in out] == [complex(n) for n in range(6)]


def test_newton_drops_bad_candidates():
    g = GammaPair(1 + 1j, 2)
    cands = [Candidate(complex("nan"), Group.G1, 0), Candidate(1.2 + 0.1j, Group.G1, 1)]
    with pytest.warns(NonConvergenceWarning):
        out = newton_refine(cands, g, SolverParams())
    assert len(out) == 1 and out[0][3]


def test_canonicalize_folds_and_dedups():
    p = SolverParams()
    pts = [(1 + 0.1j, 1e-12), (-1 - 0.1j, 1e-13), (0j, 0.0), (-0.5j, 1e-12), (1 + 0.1j + 5e-5, 1e-11), (3 + 0j, 0)]
    rs = canonicalize_and_dedup(pts, p)
    assert [r.q_hat for r in rs.roots] == [0.5j, -1 * (-1 - 0.1j), 3]
    assert rs.roots[1].residual == 1e-13
    d = np.abs(np.subtract.outer(rs.q, rs.q))
    # near-coalescing genuine pairs are kept at a tighter separation
    tight = any("kept apart" in n for n in rs.notes)
    sep = TIGHT_DEDUP * p.n_max if tight else p.dedup_tol
    assert np.all(d[~np.eye(len(rs), dtype=bool)] > sep)


# -- counting --------------------------------------------------------------------


def test_expected_count_branches():
    assert expected_count(5, GammaPair(0, 0)) == 5
    assert expected_count(5, GammaPair(1 + 1j, 2)) == 6
    # g- g+ = i (g- + g+): g- = 2i, g+ = 2i gives -4 = i * 4i
    assert expected_count(7, GammaPair(2j, 2j)) == 7
    with pytest.raises(ValueError):
        expected_count(-1, GammaPair(0, 0))


def test_rouche_and_certified_count():
    g = axis_gamma(*FIG1["A"])[2]
    assert rouche_applies(8, g)
    assert certified_count(8, g) == (9, "theorem")
    # large admittance and small m: the asymptotic count does not hold yet
    g = gamma_from_kl(3 + 4j, 4 - 1j, 90)
    assert not rouche_applies(3, g)
    n, how = certified_count(3, g)
    assert how == "winding" and n >= 0


# -- pipeline --------------------------------------------------------------------


@pytest.mark.parametrize("case", sorted(FIG1))
def test_solve_fig1(case):
    g = axis_gamma(*FIG1[case])[2]
    rs = solve_axis(g, SolverParams(n_max=8))
    inside = [r for r in rs.roots if abs(r.q_hat) <= 8.5]
    assert len(inside) == 9 == rs.expected
    assert all(abs(residual(r.q_hat, g)) < 1e-10 for r in inside)
    assert list(rs.roots) == sorted(rs.roots, key=lambda r: (r.q_hat.real, r.q_hat.imag))
    for r in rs.roots:
        assert r.q_hat.real > -1e-4 and abs(r.q_hat) > 1e-4
        assert r.k_hat == pytest.approx(math.pi * r.q_hat)


def test_solve_rigid():
    rs = solve_axis(GammaPair(0, 0), SolverParams(n_max=5))
    assert np.allclose(rs.q, [1, 2, 3, 4, 5], atol=1e-12, rtol=0)
    assert rs.expected == 5 and rs.certified_by == "theorem" and not rs.fallback_used


def test_fallback_recovers_missing_roots(monkeypatch):
    g = axis_gamma(*FIG1["B"])[2]
    full = es.candidate_set
    monkeypatch.setattr(es, "candidate_set", lambda g, n: [c for c in full(g, n) if c.n % 3])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rs = solve_axis(g, SolverParams(n_max=8))
    assert rs.fallback_used and rs.count_in_disc() == 9
    assert any(r.group is Group.ORACLE for r in rs.roots)
    assert "fallback" in rs.notes[0]


def test_count_mismatch_raised(monkeypatch):
    g = axis_gamma(*FIG1["B"])[2]
    monkeypatch.setattr(es, "candidate_set", lambda g, n: [])
    empty = type("E", (), {"roots": ()})()
    monkeypatch.setattr(es, "enumerate_roots", lambda *a, **k: empty)
    with pytest.raises(CountMismatch) as info:
        solve_axis(g, SolverParams(n_max=8))
    assert info.value.found == 0 and info.value.expected == 9


@settings(max_examples=25, deadline=None)
@given(
    st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
    st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
    st.floats(1, 100),
)
def test_solve_properties(bm, bp, kl):
    g = gamma_from_kl(bm, bp, kl)
    p = SolverParams(n_max=6)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rs = solve_axis(g, p)
    assert rs.count_in_disc() == rs.expected
    assert np.all(is_root(rs.q, g, p.eps_newton))
    d = np.abs(np.subtract.outer(rs.q, rs.q))
    # near-coalescing genuine pairs are kept at a tighter separation
    tight = any("kept apart" in n for n in rs.notes)
    sep = TIGHT_DEDUP * p.n_max if tight else p.dedup_tol
    # a coalescing symmetric pair is resolved by parity and may sit closer
    twin = np.array([r.group in (Group.G3_SYM_PLUS, Group.G3_SYM_MINUS) for r in rs.roots])
    twin &= coalesced_pair(g)
    off = ~np.eye(len(rs), dtype=bool) & ~np.outer(twin, twin)
    assert np.all(d[off] > sep)

import cmath
import math

import numpy as np
import pytest

from rectroom import GammaPair, SolverParams
from rectroom.asymptotics import (
    Candidate,
    Group,
    candidate_set,
    group1_guess,
    group1p_guess,
    group2_guess,
    group3_guess,
)
from rectroom.eigensolver import fallback_region, newton_refine
from rectroom.oracle import enumerate_roots
from rectroom.residual import residual

from conftest import FIG1, axis_gamma

P = SolverParams(n_max=8)


def refine(cands, g):
    return newton_refine(cands, g, P)


def test_group1_rigid_and_zero_index():
    g0 = GammaPair(0, 0)
    assert group1_guess(2, g0) == 2
    g = GammaPair(1 + 2j, 0.5 - 1j)
    assert group1_guess(0, g) == pytest.approx(cmath.sqrt(1j * g.total) / math.pi)
    for n in range(6):
        assert group1_guess(n, g).real >= 0


def test_group1_refines_fig1a():
    g = axis_gamma(*FIG1["A"])[2]
    out = refine([Candidate(group1_guess(n, g), Group.G1, n) for n in range(1, 9)], g)
    assert all(conv for *_, conv in out)
    assert all(abs(residual(q, g)) < 1e-10 for q, *_ in out)


def test_group2_limits_and_error():
    g = axis_gamma(*FIG1["B"])[2]
    assert group2_guess(0, g) == 0
    huge = GammaPair(1e9j, 1e9j)
    assert group2_guess(3, huge) == pytest.approx(3, abs=1e-6)
    with pytest.raises(ValueError):
        group2_guess(1, GammaPair(1 + 1j, -1 - 1j))


def test_group2_refines_fig1b_to_oracle_roots():
    g = axis_gamma(*FIG1["B"])[2]
    out = refine([Candidate(group2_guess(n, g), Group.G2, n) for n in range(1, 6)], g)
    oracle = enumerate_roots(fallback_region(g, 8), g).roots
    for q, res, _, conv in out:
        assert conv and abs(residual(q, g)) < 1e-10
        q = q if q.real >= 0 else -q
        assert min(abs(np.array(oracle) - q)) < 1e-8


def test_group3_symmetric_and_empty():
    gam = 3 + 2j
    c = group3_guess(GammaPair(gam, gam))
    vals = {x.q_hat for x in c}
    expected = {(gam / math.pi) * (1 + 2 * cmath.exp(1j * gam)), (gam / math.pi) * (1 - 2 * cmath.exp(1j * gam))}
    assert len(c) == 2 and all(min(abs(v - e) for e in expected) < 1e-14 for v in vals)
    assert {x.group for x in c} == {Group.G3_SYM_PLUS, Group.G3_SYM_MINUS}
    assert group3_guess(GammaPair(1 - 1j, 2 + 0j)) == []
    single = group3_guess(GammaPair(1 + 1j, 2 - 1j))
    assert [x.q_hat for x in single] == [pytest.approx((1 + 1j) / math.pi)]


def test_group3_fig1b_two_distinct_roots():
    g = axis_gamma(*FIG1["B"])[2]
    c = group3_guess(g)
    assert len(c) == 2 and all(x.group is Group.G3 for x in c)
    out = refine(c, g)
    qs = [q for q, *_ in out]
    assert all(conv for *_, conv in out)
    assert abs(qs[0] - qs[1]) > 1e-3


def test_group1p_limit_and_error():
    assert group1p_guess(2, GammaPair(1e12, 1e12)) == pytest.approx(2.5)
    with pytest.raises(ValueError):
        group1p_guess(0, GammaPair(1j, -1j))


def test_candidate_set_rigid():
    c = candidate_set(GammaPair(0, 0), 5)
    assert [x.q_hat for x in c] == [0, 1, 2, 3, 4, 5]
    assert all(x.group is Group.G1 for x in c)
    with pytest.raises(ValueError):
        candidate_set(GammaPair(0, 0), -1)


def test_candidate_set_fig1c_regimes():
    g = axis_gamma(*FIG1["C"])[2]
    c = candidate_set(g, 8)
    g1p = sorted(x.n for x in c if x.group is Group.G1P)
    g1 = sorted(x.n for x in c if x.group is Group.G1)
    assert g1p == [0, 1, 2, 3]
    assert set(range(4, 9)) <= set(g1)
    assert not any(x.group is Group.G2 for x in c)


def test_candidate_set_over_inclusive_fig1b():
    g = axis_gamma(*FIG1["B"])[2]
    c = candidate_set(g, 8)
    groups = {x.group for x in c}
    assert {Group.G1, Group.G2, Group.G3} <= groups
    assert Group.G1P not in groups or g.a11p > g.a12

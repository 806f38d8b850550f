from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from curvlab.model import (
    BangBangBox,
    Box,
    DomainError,
    Grid,
    HalfLineNonPos,
    LevelSet,
    Objective,
    Polyhedron,
    PowerEpigraph,
    RefusalError,
    StructuralError,
    UnitBall,
    check_objective,
    membership,
    norm,
    require_feasible,
)


def test_norm_examples():
    assert norm([3, 4]) == 5.0
    g = Grid(((0, 1),), 4)
    assert norm(np.ones(4), "weighted_l1", g) == pytest.approx(1.0)
    assert norm(np.zeros(4), "weighted_l1", g) == 0.0


def test_norm_errors():
    with pytest.raises(StructuralError):
        norm(np.ones(3), "weighted_l1", Grid(((0, 1),), 4))
    with pytest.raises(StructuralError):
        norm(np.ones(3), "weighted_l2")
    with pytest.raises(StructuralError):
        norm(np.ones(3), "sup")


def test_membership_examples():
    assert membership(Box([-1, -1], [1, 1]), [0.5, -1], tol=0)
    assert not membership(PowerEpigraph(1.5), [0.1, 0.01], tol=0)
    g = Grid(((0, 1),), 8)
    x = -np.ones(8)
    x[3] = 1 + 1e-9
    assert membership(BangBangBox(g), x, tol=1e-8)


def test_grid_invariants():
    g = Grid(((-1, 1), (0, 2)), 5)
    assert g.volumes.sum() == pytest.approx(g.measure)
    lo = np.array([-1, 0])
    hi = np.array([1, 2])
    assert np.all(g.nodes > lo) and np.all(g.nodes < hi)
    assert g.nodes.shape == (25, 2)
    with pytest.raises(StructuralError):
        Grid.from_nodes([0.0, 0.1, 0.3])
    assert Grid.from_nodes([0.125, 0.375, 0.625, 0.875]).bounds == ((0.0, 1.0),)
    with pytest.raises(StructuralError):
        Grid(((0, 1), (0, 1), (0, 1)), 3)


def test_set_validation():
    with pytest.raises(StructuralError):
        Box([1.0], [0.0])
    with pytest.raises(StructuralError):
        PowerEpigraph(2.0)
    with pytest.raises(StructuralError):
        LevelSet(lambda x: x, lambda x: x, lambda x: x, PowerEpigraph(), 2)


def test_levelset_refuses_without_cq():
    L = LevelSet(lambda x: [x @ x - 1], lambda x: 2 * x[None], lambda x: 2 * np.eye(2)[None], HalfLineNonPos(), 2)
    with pytest.raises(RefusalError):
        L.normal_generators(np.array([1.0, 0.0]))
    assert L.zkcq_holds([1.0, 0.0])


def test_require_feasible():
    with pytest.raises(DomainError):
        require_feasible(UnitBall(2), [2.0, 0.0])


def test_objective_checks_quadratic():
    J = Objective.quadratic([[2, 1], [1, 3]], [1, -1])
    rep = check_objective(J, np.random.default_rng(0).standard_normal((4, 2)))
    assert rep.ok


def test_objective_check_catches_wrong_gradient():
    J = Objective.quadratic(np.eye(2), [0, 0])
    bad = Objective(J.value, lambda x: 2 * x, J.hess_form)
    assert not check_objective(bad, [[0.3, -0.2]]).grad_ok


_ints = st.integers(-20, 20)


@given(st.lists(st.tuples(_ints, _ints, _ints), min_size=1, max_size=4), st.integers(1, 3))
def test_box_membership_matches_exact_arithmetic(triples, scale):
    lo = [min(a, b) for a, b, _ in triples]
    hi = [max(a, b) for a, b, _ in triples]
    x = [c for _, _, c in triples]
    exact = all(Fraction(l) <= Fraction(v) <= Fraction(u) for l, v, u in zip(lo, x, hi))
    assert Box(lo, hi).contains(x, tol=0.0) == exact


@given(st.lists(st.tuples(_ints, _ints, _ints), min_size=1, max_size=4), _ints, _ints)
def test_polyhedron_membership_matches_exact_arithmetic(rows, x1, x2):
    A = [[a, b] for a, b, _ in rows]
    b = [c for *_, c in rows]
    exact = all(Fraction(a) * x1 + Fraction(bb) * x2 <= Fraction(c) for (a, bb), c in zip(A, b))
    assert Polyhedron(A, b).contains([x1, x2], tol=0.0) == exact


@given(
    st.floats(-2, 2),
    st.floats(-2, 2),
    st.floats(0, 1e-3),
    st.floats(0, 1e-3),
    st.sampled_from(["box", "ball", "power_above", "power_below"]),
)
def test_membership_tol_monotone(a, b, t1, dt, which):
    C = {
        "box": Box([-1, -1], [1, 1]),
        "ball": UnitBall(2),
        "power_above": PowerEpigraph(1.5, "above"),
        "power_below": PowerEpigraph(1.5, "below"),
    }[which]
    if C.contains([a, b], tol=t1):
        assert C.contains([a, b], tol=t1 + dt)


@given(st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=4), st.floats(0, 10), st.sampled_from(["euclidean", "weighted_l1", "weighted_l2"]))
def test_norm_homogeneous_and_definite(v, alpha, tag):
    g = Grid(((0, 1),), 4)
    v = np.array(v)
    n = norm(v, tag, g)
    assert n >= 0
    assert (n == 0) == bool(np.all(v == 0))
    assert norm(alpha * v, tag, g) == pytest.approx(alpha * n, rel=1e-12, abs=1e-300)

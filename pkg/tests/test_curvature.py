import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvlab.bangbang import AdjointField, extract_zero_set
from curvlab.curvature import (
    BruteForceConfig,
    curvature_brute_force,
    curvature_closed_form,
    curvature_pullback,
    mrc_probe,
)
from curvlab.model import (
    BangBangBox,
    Box,
    DomainError,
    Grid,
    HalfLineNonPos,
    LevelSet,
    PowerEpigraph,
    UnitBall,
    UnsupportedError,
)

FAST = BruteForceConfig()
BOX2 = Box([-1, -1], [1, 1])


def ball_levelset(convex=True):
    return LevelSet(
        lambda x: [x @ x - 1.0],
        lambda x: 2.0 * np.asarray(x)[None, :],
        lambda x: 2.0 * np.eye(2)[None],
        HalfLineNonPos(),
        2,
        zkcq=True,
        quadratic=True,
        convex=convex,
    )


def test_box_curvature_zero():
    # the functional must lie in -N_C(x); at x1 = 1 that is phi = (-1, 0)
    v = curvature_brute_force(BOX2, [1, 0], [-1, 0], [0, 1], FAST)
    assert v.kind == "finite" and abs(v.value) < 1e-9
    assert v.upper_bound
    assert curvature_closed_form(BOX2, [1, 0], [-1, 0], [0, 1]).value == 0.0


def test_power_epigraph_plus_infinity():
    v = curvature_brute_force(PowerEpigraph(1.5), [0, 0], [0, 1], [1, 0])
    assert v.kind == "plus_infinity"
    assert v.trail


def test_flipped_power_epigraph_minus_infinity():
    v = curvature_brute_force(PowerEpigraph(1.5, "below"), [0, 0], [0, -1], [1, 0])
    assert v.kind == "minus_infinity"


def test_unit_ball_closed_form_and_sampling_oracle():
    cf = curvature_closed_form(UnitBall(2), [1, 0], [-2, 0], [0, 1])
    assert cf.value == pytest.approx(2.0)
    # oracle: feasible r at t = 1e-3 on a grid, minimize <phi, r>
    t = 1e-3
    r1 = np.linspace(-3, 0, 30001)
    ok = np.hypot(1 + 0.5 * t * t * r1, t) <= 1.0
    oracle = np.min(-2 * r1[ok])
    assert cf.value == pytest.approx(oracle, rel=1e-2)
    bf = curvature_brute_force(UnitBall(2), [1, 0], [-2, 0], [0, 1], FAST)
    assert bf.value == pytest.approx(2.0, rel=1e-2)


def test_zero_direction():
    assert curvature_closed_form(UnitBall(2), [1, 0], [-2, 0], [0, 0]).value == 0.0
    assert curvature_brute_force(UnitBall(2), [1, 0], [-2, 0], [0, 0]).value == 0.0


def test_closed_form_unsupported():
    with pytest.raises(UnsupportedError):
        curvature_closed_form(PowerEpigraph(1.5), [0, 0], [0, 1], [1, 0])


def test_non_critical_and_non_normal_rejected():
    with pytest.raises(DomainError):
        curvature_brute_force(BOX2, [1, 0], [-1, 0], [-1, 0], FAST)
    with pytest.raises(DomainError):
        curvature_brute_force(BOX2, [1, 0], [1, 0], [0, 1], FAST)


def test_pullback_examples():
    L = ball_levelset()
    assert curvature_pullback(L, [1, 0], [-2, 0], [1.0], [0, 1]).value == pytest.approx(2.0)
    assert curvature_pullback(L, [1, 0], [-2, 0], [1.0], [0, 2]).value == pytest.approx(8.0)
    assert curvature_pullback(L, [0.5, 0], [0, 0], [0.0], [0, 1]).value == 0.0
    with pytest.raises(DomainError):
        curvature_pullback(L, [1, 0], [-2, 0], [2.0], [0, 1])


def test_pullback_matches_brute_force():
    L = ball_levelset()
    bf = curvature_brute_force(L, [1, 0], [-2, 0], [0, 1], FAST)
    assert bf.value == pytest.approx(2.0, rel=1e-2)


def test_pullback_for_general_multiplier():
    L = ball_levelset()
    x = np.array([0.6, 0.8])
    lam = 1.5
    h = np.array([-0.8, 0.6])
    v = curvature_pullback(L, x, -2 * lam * x, [lam], h)
    assert v.value == pytest.approx(2 * lam)
    assert curvature_closed_form(L, x, -2 * lam * x, h).value == pytest.approx(2 * lam)


def test_mrc_box_agrees():
    rep = mrc_probe(BOX2, [1, 0], [-1, 0], [[0, 1], [0, -0.5]], FAST)
    assert rep.suspect == []


def test_mrc_finite_dimensional_ball_agrees():
    rep = mrc_probe(UnitBall(2), [1, 0], [-2, 0], [[0, 1]], FAST)
    assert rep.suspect == []


def test_mrc_bangbang_flags_surface_directions():
    grid = Grid(((0, 1),), 512)
    f = AdjointField.from_callables(grid, lambda p: p[:, 0] - 0.5, lambda p: np.ones_like(p))
    sm = extract_zero_set(f).with_density(2.0)
    rep = mrc_probe(BangBangBox(grid), f.xbar, f.values, [sm], field=f)
    assert rep.suspect == [0]
    row = rep.rows[0]
    assert row.strong.kind == "plus_infinity"
    assert row.relaxed.value == pytest.approx(2.0, rel=1e-2)


def test_workers_do_not_change_result():
    a = curvature_brute_force(UnitBall(2), [1, 0], [-2, 0], [0, 1], BruteForceConfig(restarts=6, workers=1))
    b = curvature_brute_force(UnitBall(2), [1, 0], [-2, 0], [0, 1], BruteForceConfig(restarts=6, workers=8))
    assert a.kind == b.kind and a.trail == b.trail


# -------------------------------------------------------------------- properties

_t = st.floats(-2, 2)


@settings(max_examples=10)
@given(st.floats(-2, 2), st.sampled_from([0.5, 2.0, 3.0]))
def test_homogeneity_ball(s, alpha):
    h = np.array([0.0, s])
    q1 = curvature_brute_force(UnitBall(2), [1, 0], [-2, 0], h, FAST)
    q2 = curvature_brute_force(UnitBall(2), [1, 0], [-2, 0], alpha * h, FAST)
    assert abs(q2.value - alpha**2 * q1.value) <= 1e-2 * alpha**2 * (1 + abs(q1.value))


@settings(max_examples=25)
@given(st.floats(0.05, 3), st.floats(0, 2 * np.pi), st.floats(-3, 3))
def test_nonnegative_on_convex_sets(lam, angle, s):
    x = np.array([np.cos(angle), np.sin(angle)])
    h = s * np.array([-x[1], x[0]])
    q = curvature_closed_form(UnitBall(2), x, -lam * x, h)
    assert q.value >= -1e-8
    assert q.value == pytest.approx(lam * s * s, rel=1e-9, abs=1e-12)


@settings(max_examples=10)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3))
def test_homogeneity_and_nonnegativity_box(h):
    C = Box(-np.ones(3), np.ones(3))
    x = np.array([0.1, 0.2, -0.3])
    for alpha in (0.5, 2.0, 3.0):
        q = curvature_brute_force(C, x, np.zeros(3), alpha * np.array(h), BruteForceConfig(k_max=4))
        assert abs(q.value) <= 1e-8


def test_lower_semicontinuity_probe():
    # h_n -> h along the ball's critical cone with bounded corrections
    hs = [np.array([0.0, 1.0 + 2.0**-n]) for n in range(3, 7)]
    tail = min(curvature_closed_form(UnitBall(2), [1, 0], [-2, 0], h).value for h in hs)
    limit = curvature_closed_form(UnitBall(2), [1, 0], [-2, 0], [0, 1]).value
    assert limit <= tail + 1e-9

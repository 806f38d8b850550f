import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvlab import bangbang as bb
from curvlab import problems
from curvlab.model import (
    AssumptionViolation,
    BangBangBox,
    Grid,
    ResolutionError,
    StructuralError,
)
from curvlab.problems import Numerics, analyze


def line_field(cells=2048, shift=0.5):
    grid = Grid(((0, 1),), cells)
    return bb.AdjointField.from_callables(grid, lambda p: p[:, 0] - shift, lambda p: np.ones_like(p))


def circle_field(cells):
    grid = Grid(((-1, 1), (-1, 1)), cells)
    return bb.AdjointField.from_callables(
        grid, lambda p: p[:, 0] ** 2 + p[:, 1] ** 2 - 0.25, lambda p: 2 * p
    )


@pytest.fixture(scope="module")
def circle():
    f = circle_field(256)
    return f, bb.extract_zero_set(f)


# ------------------------------------------------------------------ zero sets


def test_zero_set_1d():
    sm = bb.extract_zero_set(line_field())
    assert sm.size == 1
    assert sm.nodes[0, 0] == pytest.approx(0.5, abs=1e-12)
    assert sm.weights[0] == 1.0 and sm.grad_norm[0] == pytest.approx(1.0)


def test_zero_set_circle_length(circle):
    f, sm = circle
    assert sm.length == pytest.approx(math.pi, rel=1e-2)
    assert np.allclose(np.hypot(sm.nodes[:, 0], sm.nodes[:, 1]), 0.5, atol=1e-8)
    assert np.all(sm.weights > 0)


def test_zero_set_empty():
    grid = Grid(((0, 1),), 64)
    f = bb.AdjointField.from_callables(grid, lambda p: p[:, 0] + 1, lambda p: np.ones_like(p))
    sm = bb.extract_zero_set(f)
    assert sm.size == 0 and sm.length == 0.0


def test_zero_set_gradient_floor():
    grid = Grid(((0, 1),), 64)
    f = bb.AdjointField.from_callables(grid, lambda p: (p[:, 0] - 0.5) ** 3, lambda p: 3 * (p - 0.5) ** 2)
    with pytest.raises(AssumptionViolation):
        bb.extract_zero_set(f)


# ------------------------------------------------------------------ level-set constant


def test_level_set_constant_line_centered():
    lsc = bb.level_set_constant(line_field(), 0.05, 6)
    assert lsc.K_estimate == pytest.approx(1 / 8, abs=1e-3)
    assert lsc.monotone_flag
    assert all(np.diff(lsc.measures[::-1]) >= 0)


def test_level_set_constant_line_at_boundary():
    f = line_field(shift=0.0)
    lsc = bb.level_set_constant(f, 0.05, 4)
    assert lsc.K_estimate == pytest.approx(1 / 4, abs=1e-3)


def test_level_set_constant_annulus(circle):
    f, _ = circle
    lsc = bb.level_set_constant(f, 0.08, 4)
    # annulus area pi((1/4 + s) - (1/4 - s)) = 2 pi s
    for s, m in zip(lsc.s_schedule, lsc.measures):
        assert m == pytest.approx(2 * math.pi * s, rel=1e-2)
    assert lsc.K_estimate == pytest.approx(1 / (8 * math.pi), rel=1e-2)


def test_level_set_constant_resolution_error():
    with pytest.raises(ResolutionError):
        bb.level_set_constant(line_field(cells=64), 0.05, 6)
    assert bb.resolved_levels(line_field(cells=64), 0.05, 6) < 6


# ------------------------------------------------------------------ surface curvature


def test_surface_curvature_examples(circle):
    sm = bb.extract_zero_set(line_field())
    assert bb.surface_curvature(sm.with_density(2.0)) == pytest.approx(2.0)
    assert bb.surface_curvature(sm.with_density(0.0)) == 0.0
    _, smc = circle
    assert bb.surface_curvature(smc.with_density(1.0)) == pytest.approx(math.pi / 2, rel=1e-2)


def test_surface_curvature_needs_density():
    sm = bb.extract_zero_set(line_field())
    with pytest.raises(StructuralError):
        bb.surface_curvature(sm)


@given(st.floats(-5, 5), st.floats(-3, 3))
def test_surface_curvature_homogeneous(g, alpha):
    sm = bb.extract_zero_set(line_field(256))
    a = bb.surface_curvature(sm.with_density(alpha * g))
    b = alpha**2 * bb.surface_curvature(sm.with_density(g))
    assert a == pytest.approx(b, rel=1e-12, abs=1e-300)


@settings(max_examples=10)
@given(st.floats(-3, 3), st.floats(-1, 1))
def test_coercivity(c0, c1):
    f = line_field()
    sm = bb.extract_zero_set(f).with_density(lambda p: c0 + c1 * p[:, 0])
    K = bb.level_set_constant(f).K_estimate
    assert bb.surface_curvature(sm) >= K * sm.total_variation() ** 2 * 0.99 - 1e-12


def test_coercivity_circle(circle):
    f, sm = circle
    K = bb.level_set_constant(f, 0.08, 4).K_estimate
    for g in (lambda p: np.ones(len(p)), lambda p: 1 + 0.5 * p[:, 0], lambda p: p[:, 0] * p[:, 1] + 0.3):
        smg = sm.with_density(g)
        assert bb.surface_curvature(smg) >= 0.99 * K * smg.total_variation() ** 2


def test_grid_refinement_2d():
    vals = []
    for n in (64, 128, 256):
        f = circle_field(n)
        sm = bb.extract_zero_set(f)
        vals.append((sm.length, bb.level_set_constant(f, 0.08, 2).K_estimate, bb.surface_curvature(sm.with_density(1.0))))
    vals = np.array(vals)
    d1 = np.abs(vals[1] - vals[0])
    d2 = np.abs(vals[2] - vals[1])
    assert np.all(d2 < 2 * d1 + 1e-12)


# ------------------------------------------------------------------ recovery strips


def test_recovery_strip_1d():
    f = line_field()
    sm = bb.extract_zero_set(f).with_density(2.0)
    strip = bb.recovery_strip_sequence(f, sm, 1e-3)
    assert strip.feasible()
    # height 2/t on a strip of width t |g| / 2: total mass |g| = 2
    assert strip.l1() == pytest.approx(2.0, rel=1e-6)
    assert strip.pair(lambda p: p[:, 0]) == pytest.approx(1.0, abs=2e-3)
    assert 2 * strip.phi_pairing / 1e-3 == pytest.approx(2.0, rel=1e-2)


def test_recovery_limits_first_order():
    f = line_field()
    sm = bb.extract_zero_set(f).with_density(2.0)
    rep = bb.verify_recovery_limits(f, sm, [4e-3, 2e-3, 1e-3], [lambda p: p[:, 0], lambda p: np.cos(p[:, 0])])
    e = rep.errors(2)
    assert e["pairing"] < 5e-3 and e["l1"] < 1e-6 and e["curvature"] < 1e-2
    assert rep.rates["pairing"] == pytest.approx(1.0, abs=0.3)


def test_recovery_limits_zero_density():
    f = line_field()
    sm = bb.extract_zero_set(f).with_density(0.0)
    rep = bb.verify_recovery_limits(f, sm, [1e-3], [lambda p: p[:, 0]])
    assert rep.pairings[0][0] == 0 and rep.l1_norms[0] == 0 and rep.curvatures[0] == 0


def test_recovery_limits_circle(circle):
    f, sm = circle
    rep = bb.verify_recovery_limits(f, sm.with_density(1.0), [1e-3], [lambda p: np.ones(len(p))])
    assert rep.pairings[0][0] == pytest.approx(math.pi, rel=2e-2)
    assert rep.curvatures[0] == pytest.approx(math.pi / 2, rel=2e-2)


def test_strip_too_wide():
    f = line_field(256)
    sm = bb.extract_zero_set(f).with_density(2.0)
    with pytest.raises(ResolutionError):
        bb.recovery_strip_sequence(f, sm, 0.9)


# ------------------------------------------------------------------ Taylor and fundamental estimate


def test_taylor_constant_direction_exact():
    rep = bb.l1_taylor_check(line_field(), 1.0, 2.0 ** -np.arange(3, 9))
    assert rep.max_abs_residual < 1e-6
    assert rep.surface == pytest.approx(1.0)


def test_taylor_zero_direction():
    rep = bb.l1_taylor_check(line_field(), 0.0, [1e-2, 1e-3])
    assert rep.max_abs_residual == 0.0


def test_taylor_linear_direction_first_order():
    rep = bb.l1_taylor_check(line_field(), lambda p: p[:, 0], 2.0 ** -np.arange(4, 10))
    assert rep.surface == pytest.approx(0.25)
    r = np.abs(rep.residuals)
    assert r[-1] < 1e-2
    slope = np.polyfit(np.log(rep.t_schedule), np.log(r), 1)[0]
    assert slope == pytest.approx(1.0, abs=0.2)


def test_fundamental_estimate():
    f = line_field()
    sm = bb.extract_zero_set(f).with_density(2.0)
    Q = bb.surface_curvature(sm)
    vs = [lambda p, k=k: p[:, 0] ** k for k in range(4)] + [lambda p: 3 - 7 * p[:, 0]]
    alphas = np.linspace(-5, 5, 41)
    assert bb.fundamental_estimate_check(f, sm, vs, alphas, Q).ok
    assert bb.fundamental_estimate_check(f, sm, [lambda p: np.zeros(len(p))], alphas, Q).ok
    corrupted = bb.fundamental_estimate_check(f, sm, [lambda p: 2.0 * np.ones(len(p))], alphas, Q / 10)
    assert not corrupted.ok and corrupted.witness is not None


# ------------------------------------------------------------------ no-gap pipeline


def test_bangbang_linear_1d():
    out, growth = analyze(problems.bangbang_1d(), "full", Numerics())
    assert out["verdict"] == "no_gap_consistent"
    assert out["ssc"]["holds"]
    assert growth.fitted_c == pytest.approx(0.25, rel=2e-2)
    assert out["diagnostics"]["K_estimate"] == pytest.approx(0.125, abs=1e-3)
    assert all(m >= 0 for m in out["diagnostics"]["coercivity_margin"])
    assert out["ndc"]["established_via"] == "c"


def test_bangbang_centered_strip_ratio():
    out, growth = analyze(problems.bangbang_1d(), "full", Numerics())
    centered = [s.ratio for s in growth.samples if s.tag == "centered"]
    assert centered
    assert min(centered) == pytest.approx(0.25, rel=1e-2)


def test_bangbang_corrupted_kernel():
    out, growth = analyze(problems.bangbang_1d(kappa=2.0), "full", Numerics())
    assert out["verdict"] == "inconsistent"
    assert out["ssc"]["holds"] is False
    assert growth.fitted_c < 0


def test_bangbang_empty_zero_set():
    grid = Grid(((0, 1),), 256)
    f = bb.AdjointField.from_callables(grid, lambda p: p[:, 0] + 1, lambda p: np.ones_like(p))
    rep = bb.bangbang_no_gap(f, bb.BangBangObjective.build(f), [lambda p: np.ones(len(p))])
    assert rep.ssc.holds and "vacuous" in rep.ssc.note
    assert math.isinf(rep.diagnostics["level_set"]["K_estimate"])
    assert rep.growth.fitted_c > 0
    assert rep.verdict == "no_gap_consistent"


def test_bangbang_circle():
    out, growth = analyze(problems.bangbang_2d_circle(), "full", Numerics())
    assert out["verdict"] == "no_gap_consistent"
    assert growth.fitted_c > 0
    assert out["diagnostics"]["zero_set_length"] == pytest.approx(math.pi, rel=1e-2)


def test_objective_rejects_grid_only_hessian():
    f = line_field(64)
    from curvlab.model import Objective

    J = Objective.quadratic(np.eye(64), f.values)
    with pytest.raises(Exception):
        bb.bangbang_no_gap(f, J, [2.0])


def test_dense_kernel_matches_separable():
    f = line_field(128)
    eta = lambda p: np.exp(-np.sum((np.atleast_2d(p) - 0.5) ** 2, axis=1) / 0.01)
    sep = bb.BangBangObjective.build(f, bb.SeparableKernel.make(-2.0, eta))
    dense = bb.BangBangObjective.build(f, bb.Kernel(lambda s, t: -2.0 * np.outer(eta(s), eta(t))))
    sm = bb.extract_zero_set(f).with_density(1.5)
    assert sep.hess_surface(sm) == pytest.approx(dense.hess_surface(sm), rel=1e-12)
    v = np.sin(np.arange(128.0))
    assert sep.hess_form(f.xbar, v, v) == pytest.approx(dense.hess_form(f.xbar, v, v), rel=1e-10)


def test_strip_points_feasible():
    p = problems.bangbang_1d(cells=512)
    rng = np.random.default_rng(0)
    pts = bb.strip_points(p.C, p.xbar, p.J.grad(p.xbar), 0.05, 32, rng)
    assert pts
    for u, tag in pts:
        assert p.C.contains(u)
        assert p.C.norm(u - p.xbar) <= 0.05 * (1 + 1e-12)


def test_bangbang_box_normal():
    f = line_field(128)
    C = BangBangBox(f.grid)
    from curvlab.cones import normal_cone_contains

    assert normal_cone_contains(C, f.xbar, -f.values)

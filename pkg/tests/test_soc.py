import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from curvlab import problems
from curvlab.cones import critical_directions
from curvlab.model import Box, Grid, Objective, PowerEpigraph, UnitBall
from curvlab.problems import Numerics, analyze
from curvlab.soc import (
    GrowthConfig,
    SocConfig,
    fonc_check,
    growth_sample,
    ndc_check,
    no_gap_report,
    snc_scan,
    ssc_check,
)

SQUARE = Objective.quadratic([[2.0]], [0.0])  # J(x) = x^2
BOX1 = Box([-1], [1])


def test_fonc_examples():
    # at the upper bound the gradient must point inward: J = -x^2 has J'(1) = -2
    assert fonc_check(BOX1, Objective.quadratic([[-2.0]], [0.0]), [1.0]).holds
    # J = x^2 at x = 1 descends along h = -1
    assert not fonc_check(BOX1, SQUARE, [1.0]).holds
    res = fonc_check(BOX1, SQUARE, [0.5])
    assert not res.holds
    assert res.witness[0] == pytest.approx(-1.0)
    J = Objective.quadratic(np.diag([-2.0, 0.0]), [0.0, 1.0])
    assert np.allclose(J.grad(np.zeros(2)), [0.0, 1.0])
    assert fonc_check(PowerEpigraph(1.5), J, [0, 0]).holds


def test_ndc_examples():
    assert ndc_check(Box([-1, -1], [1, 1]), Objective.quadratic(np.eye(2), [0, 0]), [0, 0]).established_via == "d"
    grid = Grid(((0, 1),), 16)
    C = Box(-np.ones(16), np.ones(16), grid=grid)
    J = Objective.quadratic(grid.cell_volume * np.eye(16), np.zeros(16))
    res = ndc_check(C, J, np.zeros(16))
    assert res.established_via == "a"
    assert res.min_eigenvalue == pytest.approx(1.0)


def test_ndc_bangbang_first_order_growth():
    p = problems.bangbang_1d(cells=1024)
    res = ndc_check(p.C, p.J, p.xbar)
    assert res.established_via == "c"
    assert res.fitted_c == pytest.approx(0.25, rel=2e-2)


def test_snc_examples():
    p = problems.control_constrained()
    dirs = critical_directions(p.C, p.xbar, p.J.grad(p.xbar), count=8, seed=0)
    res = snc_scan(p.C, p.J, p.xbar, 0.0, dirs)
    assert res and all(r.residual >= 0 and r.status == "ok" for r in res)
    # residual is exactly J''h^2 because Q vanishes on boxes
    assert all(r.residual == pytest.approx(r.hessian) for r in res)
    zero = snc_scan(p.C, p.J, p.xbar, 5.0, [np.zeros(p.C.dim)])
    assert zero[0].residual == 0.0
    f = problems.power_epigraph_flipped()
    r = snc_scan(f.C, f.J, f.xbar, 0.0, [[1.0, 0.0]])
    assert r[0].residual == -math.inf and r[0].status == "violated"


def test_ssc_examples():
    p = problems.power_epigraph(M=10.0)
    res = ssc_check(p.C, p.J, p.xbar, [[1.0, 0.0], [-1.0, 0.0]], ndc=ndc_check(p.C, p.J, p.xbar))
    assert res.holds and not res.advisory
    for lam, expected in ((1.0, True), (0.75, True), (0.4, False), (0.25, False)):
        b = problems.state_constrained_ball(lam)
        out = ssc_check(b.C, b.J, b.xbar, [[0.0, 1.0]], ndc=ndc_check(b.C, b.J, b.xbar))
        assert out.holds is expected
        # value along the unit tangent: 2 lam - 1
        assert out.values[0] == pytest.approx(2 * lam - 1, abs=1e-9)


def test_ssc_vacuous_on_trivial_critical_cone():
    C = Box([-1, -1], [1, 1])
    J = Objective.quadratic(-np.eye(2), [-1.0, -1.0])
    x = np.array([1.0, 1.0])
    assert critical_directions(C, x, J.grad(x), count=16) == []
    res = ssc_check(C, J, x, [], ndc=ndc_check(C, J, x))
    assert res.holds and "vacuous" in res.note


def test_ssc_without_ndc_is_advisory():
    res = ssc_check(BOX1, SQUARE, [0.0], [[1.0]], ndc=None)
    assert res.holds and res.advisory


def test_growth_box_square():
    rep = growth_sample(BOX1, SQUARE, [0.0])
    assert rep.fitted_c == pytest.approx(2.0, rel=1e-9)
    assert all(BOX1.contains([0.0 + s.distance]) for s in rep.samples)
    assert rep.raw_min <= rep.fitted_c


def _polar_oracle(eps=0.1, M=1.0, alpha=1.5):
    # inf of 2 (x2 - M x1^2)/|x|^2 over the feasible region inside the eps-ball
    r = np.geomspace(1e-6, eps, 600)
    th = np.linspace(0, np.pi, 4001)
    R, T = np.meshgrid(r, th)
    x1, x2 = R * np.cos(T), R * np.sin(T)
    ok = x2 >= np.abs(x1) ** alpha
    ratio = 2 * (x2 - M * x1**2) / (x1**2 + x2**2)
    return ratio[ok].min()


def test_growth_power_epigraph_against_polar_grid():
    C = PowerEpigraph(1.5)
    J = Objective.quadratic(np.diag([-2.0, 0.0]), [0.0, 1.0])
    ref = _polar_oracle()
    assert ref > 0
    rep = growth_sample(C, J, [0, 0], GrowthConfig(eps_schedule=tuple(0.1 * 2.0 ** -np.arange(6))))
    assert rep.fitted_c > 0
    # sampled infimum can only sit above the true one
    assert rep.raw_min >= ref - 1e-9


def test_growth_trimmed_min_below_every_kept_ratio():
    p = problems.box_qp()
    rep = growth_sample(p.C, p.J, p.xbar)
    kept = np.sort(rep.ratios)[int(0.01 * rep.sample_count):]
    assert np.all(kept >= rep.fitted_c - 1e-12)
    assert rep.raw_min <= rep.fitted_c


def test_growth_skips_unreachable_radius():
    C = Box([0.0, 0.0], [0.0, 0.0])
    rep = growth_sample(C, Objective.quadratic(np.eye(2), [0, 0]), [0.0, 0.0])
    assert rep.sample_count == 0 and rep.notes


def test_control_problem_matches_independent_solver():
    p = problems.control_constrained(cells=20, gamma=0.1)
    H = p.J.hessian_matrix(p.xbar)
    res = optimize.minimize(
        p.J.value, np.zeros(20), jac=p.J.grad, method="L-BFGS-B", bounds=[(-1, 1)] * 20,
        options={"ftol": 1e-15, "gtol": 1e-13, "maxiter": 10000},
    )
    assert np.max(np.abs(res.x - p.xbar)) < 1e-6
    assert np.all(np.linalg.eigvalsh(H) > 0)
    rep = no_gap_report(p.C, p.J, p.xbar)
    assert rep.verdict == "no_gap_consistent"
    assert rep.growth.fitted_c == pytest.approx(0.1, rel=5e-2)


def test_flipped_power_epigraph_inconsistent():
    p = problems.power_epigraph_flipped()
    out, growth = analyze(p, "full", Numerics())
    assert out["verdict"] == "inconsistent"
    assert growth.raw_min < 0


def test_infeasible_point_reported():
    rep = no_gap_report(UnitBall(2), Objective.quadratic(np.eye(2), [0, 0]), [2.0, 0.0])
    assert rep.verdict == "inconclusive"
    assert "error" in rep.diagnostics


def test_report_determinism():
    p = problems.state_constrained_ball()
    a = analyze(p, "full", Numerics(seed=4))[0]
    b = analyze(p, "full", Numerics(seed=4))[0]
    assert a == b


QUICK = ["box_qp", "control_constrained", "state_constrained_ball", "power_epigraph"]


@pytest.mark.parametrize("name", QUICK)
def test_scale_invariance(name):
    p = problems.build_example(name)
    cfg = SocConfig(n_directions=8, growth=GrowthConfig(eps_schedule=p.eps_schedule or GrowthConfig().eps_schedule))
    a = no_gap_report(p.C, p.J, p.xbar, cfg)
    q = p.scaled(2.0)
    b = no_gap_report(q.C, q.J, q.xbar, cfg)
    assert b.verdict == a.verdict
    assert b.ssc.holds == a.ssc.holds and b.fonc.holds == a.fonc.holds
    assert b.growth.fitted_c == pytest.approx(2 * a.growth.fitted_c, rel=1e-9)
    # residuals at c = 0 double exactly
    ra = snc_scan(p.C, p.J, p.xbar, 0.0, [s.direction for s in a.snc], curvatures=[s.curvature for s in a.snc])
    dirs = [s.direction for s in a.snc]
    rb = snc_scan(q.C, q.J, q.xbar, 0.0, dirs, curvature_method="closed_form" if name != "power_epigraph" else "auto")
    for x, y in zip(ra, rb):
        assert y.residual == pytest.approx(2 * x.residual, rel=1e-6, abs=1e-9)


@pytest.mark.parametrize("name", QUICK + ["power_epigraph_flipped"])
def test_verdict_consistency_on_bundled_examples(name):
    p = problems.build_example(name)
    cfg = Numerics().soc(p)
    rep = no_gap_report(p.C, p.J, p.xbar, cfg)
    c = rep.growth.fitted_c
    if rep.ssc is not None and rep.ssc.holds:
        assert c > 0
    if c > 0:
        assert all(s.residual >= -1e-6 for s in snc_scan(p.C, p.J, p.xbar, c, [s.direction for s in rep.snc], curvatures=[s.curvature for s in rep.snc]))


@settings(max_examples=15)
@given(st.floats(0.55, 3.0))
def test_ball_verdict_tracks_multiplier(lam):
    p = problems.state_constrained_ball(lam)
    rep = no_gap_report(p.C, p.J, p.xbar, SocConfig(n_directions=4, growth=GrowthConfig(eps_schedule=(0.05, 0.01), samples_per_radius=16)))
    assert rep.ssc.holds
    assert rep.verdict == "no_gap_consistent"

"""Bundled example problems, inline problem definitions and the analysis runner."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field, replace
from typing import Callable

import numpy as np

from . import bangbang as bb
from . import expr
from .cones import critical_directions
from .curvature import BruteForceConfig
from .model import (
    AdmissibleSet,
    Array,
    Box,
    Grid,
    HalfLineNonPos,
    LevelSet,
    Objective,
    Polyhedron,
    PowerEpigraph,
    StructuralError,
    UnitBall,
)
from .soc import (
    GrowthConfig,
    GrowthReport,
    SocConfig,
    SOCReport,
    evaluate_curvature,
    fonc_check,
    growth_sample,
    no_gap_report,
    snc_scan,
    ssc_check,
    ndc_check,
)


@dataclass(frozen=True, eq=False)
class Problem:
    name: str
    C: AdmissibleSet
    J: Objective
    xbar: Array
    directions: tuple = ()
    eps_schedule: tuple[float, ...] | None = None
    field: bb.AdjointField | None = None
    g_samples: tuple = ()
    g_labels: tuple[str, ...] = ()
    s_max: float = 0.05
    levels: int = 6
    multiplier: Array | None = None
    params: dict = dc_field(default_factory=dict)

    @property
    def is_bangbang(self) -> bool:
        return self.field is not None

    def scaled(self, factor: float) -> "Problem":
        """Same problem with the objective multiplied by ``factor`` > 0."""
        if self.is_bangbang:
            return replace(self, J=self.J.scaled(factor), field=self.field.scaled(factor), s_max=factor * self.s_max)
        mult = None if self.multiplier is None else factor * self.multiplier
        return replace(self, J=self.J.scaled(factor), multiplier=mult)


# ---------------------------------------------------------------------------
# builders


def box_qp(n: int = 4, a=(2.0, 0.3, -3.0, 1.0)) -> Problem:
    """Projection of a point onto the box [-1, 1]^n, J = 1/2 |x - a|^2."""
    a = np.resize(np.asarray(a, dtype=float), int(n))
    C = Box(-np.ones(a.size), np.ones(a.size))
    J = Objective.quadratic(np.eye(a.size), -a, 0.5 * a @ a)
    return Problem("box_qp", C, J, np.clip(a, -1.0, 1.0), params={"n": int(n), "a": a.tolist()})


def _green_matrix(grid: Grid) -> Array:
    """Solution operator of -y'' = u with y = 0 on the boundary, cell-centered."""
    n, h = grid.cells, grid.spacing[0]
    A = (np.diag(np.full(n, 2.0)) - np.diag(np.ones(n - 1), 1) - np.diag(np.ones(n - 1), -1)) / h**2
    A[0, 0] = A[-1, -1] = 3.0 / h**2  # ghost value mirrors the cell next to the wall
    return np.linalg.inv(A)


def control_constrained(cells: int = 20, gamma: float = 0.1, amplitude: float = 0.2, bound: float = 1.0) -> Problem:
    """Tracking problem 1/2 |S u - y_d|^2 + gamma/2 |u|^2 with |u| <= bound.

    The minimizer is computed by projected gradient, which converges
    linearly because the objective is strongly convex.
    """
    grid = Grid(((0.0, 1.0),), int(cells))
    xi = grid.axes[0]
    S = _green_matrix(grid)
    yd = amplitude * np.sin(2 * np.pi * xi)
    vol = grid.cell_volume
    H = vol * (S.T @ S + gamma * np.eye(grid.size))
    g = -vol * (S.T @ yd)
    J = Objective.quadratic(H, g, 0.5 * vol * yd @ yd)
    C = Box(-bound * np.ones(grid.size), bound * np.ones(grid.size), grid=grid)
    step = vol / np.linalg.eigvalsh(H).max()
    u = np.zeros(grid.size)
    for _ in range(5000):
        nxt = C.project(u - (step / vol) * J.grad(u))
        if np.max(np.abs(nxt - u)) < 1e-15:
            u = nxt
            break
        u = nxt
    return Problem(
        "control_constrained",
        C,
        J,
        u,
        params={"cells": int(cells), "gamma": gamma, "amplitude": amplitude, "bound": bound},
    )


def state_constrained_ball(lam: float = 1.0) -> Problem:
    """Unit disc written as {|x|^2 - 1 <= 0}; J = -2 lam x1 - 1/2 |x - xbar|^2 at xbar = (1, 0).

    The multiplier of the constraint is lam, so the curvature along the
    tangent direction is 2 lam |h|^2 and SSC holds iff lam > 1/2.
    """
    C = LevelSet(
        lambda x: [x @ x - 1.0],
        lambda x: 2.0 * np.asarray(x)[None, :],
        lambda x: 2.0 * np.eye(2)[None],
        HalfLineNonPos(),
        2,
        zkcq=True,
        quadratic=True,
        convex=True,
    )
    xbar = np.array([1.0, 0.0])
    J = Objective.from_hessian(
        lambda x: float(-2 * lam * x[0] - 0.5 * np.sum((x - xbar) ** 2)),
        lambda x: np.array([-2 * lam, 0.0]) - (x - xbar),
        lambda x: -np.eye(2),
    )
    return Problem(
        "state_constrained_ball",
        C,
        J,
        xbar,
        eps_schedule=tuple(0.1 * 2.0 ** -np.arange(5)),
        multiplier=np.array([lam]),
        params={"lam": lam},
    )


def power_epigraph(alpha: float = 1.5, M: float = 10.0, beta: float = 1.0) -> Problem:
    """J = beta x2 - M x1^2 over {x2 >= |x1|^alpha}; xbar = 0 is a strict local minimizer."""
    C = PowerEpigraph(alpha, "above")
    J = Objective.quadratic(np.diag([-2 * M, 0.0]), [0.0, beta])
    eps = tuple(2e-3 * 2.0 ** -np.arange(6))
    return Problem("power_epigraph", C, J, np.zeros(2), eps_schedule=eps, params={"alpha": alpha, "M": M, "beta": beta})


def power_epigraph_flipped(alpha: float = 1.5, M: float = 10.0, beta: float = 1.0) -> Problem:
    """J = -beta x2 - M x1^2 over {x2 <= |x1|^alpha}; xbar = 0 is never a local minimizer."""
    C = PowerEpigraph(alpha, "below")
    J = Objective.quadratic(np.diag([-2 * M, 0.0]), [0.0, -beta])
    eps = tuple(2e-3 * 2.0 ** -np.arange(6))
    return Problem(
        "power_epigraph_flipped", C, J, np.zeros(2), eps_schedule=eps, params={"alpha": alpha, "M": M, "beta": beta}
    )


def _bump(center: Array, width: float) -> Callable[[Array], Array]:
    return lambda p: np.exp(-np.sum((np.atleast_2d(p) - center) ** 2, axis=1) / width**2)


def _bangbang(name, grid, phi_text, grad_texts, kappa, width, center, s_max, levels, densities) -> Problem:
    d = grid.dim
    f = bb.AdjointField.from_callables(grid, expr.field_function(phi_text, d), expr.field_gradient(grad_texts, d))
    kernel = None if kappa == 0 else bb.SeparableKernel.make(-float(kappa), _bump(np.asarray(center, float), width))
    J = bb.BangBangObjective.build(f, kernel)
    C = bb.BangBangBox(grid)
    dens = tuple(expr.field_function(t, d) for t in densities)
    params = {
        "cells": grid.cells,
        "kappa": kappa,
        "kernel_width": width,
        "s_max": s_max,
        "levels": levels,
        "densities": list(densities),
    }
    return Problem(name, C, J, f.xbar, field=f, g_samples=dens, g_labels=tuple(densities), s_max=s_max, levels=levels, params=params)


def bangbang_1d(cells: int = 2048, kappa: float = 0.0, kernel_width: float = 0.1, s_max: float = 0.05, levels: int = 6, densities=("2", "1", "-1", "0.5")) -> Problem:
    """phi = xi - 1/2 on (0, 1); kappa > 0 adds the kernel -kappa eta(s) eta(t) with a bump eta."""
    grid = Grid(((0.0, 1.0),), int(cells))
    return _bangbang("bangbang_1d", grid, "xi1 - 0.5", ["1"], kappa, kernel_width, [0.5], s_max, levels, densities)


def bangbang_2d_circle(cells: int = 256, kappa: float = 0.0, kernel_width: float = 0.2, s_max: float = 0.08, levels: int = 4, densities=("1", "1 + 0.5*xi1", "xi1*xi2 + 0.3")) -> Problem:
    """phi = |xi|^2 - 1/4 on (-1, 1)^2; Z is the circle of radius 1/2."""
    grid = Grid(((-1.0, 1.0), (-1.0, 1.0)), int(cells))
    return _bangbang(
        "bangbang_2d_circle", grid, "xi1^2 + xi2^2 - 0.25", ["2*xi1", "2*xi2"], kappa, kernel_width, [0.5, 0.0], s_max, levels, densities
    )


@dataclass(frozen=True)
class Example:
    name: str
    topic: str
    build: Callable[..., Problem]


EXAMPLES: dict[str, Example] = {
    e.name: e
    for e in (
        Example("box_qp", "polyhedric box, zero curvature", box_qp),
        Example("control_constrained", "discretized control-constrained tracking problem", control_constrained),
        Example("state_constrained_ball", "ball constraint, curvature by pullback", state_constrained_ball),
        Example("power_epigraph", "non-polyhedric set with curvature +infinity", power_epigraph),
        Example("power_epigraph_flipped", "flipped set with curvature -infinity", power_epigraph_flipped),
        Example("bangbang_1d", "bang-bang control, zero set a point", bangbang_1d),
        Example("bangbang_2d_circle", "bang-bang control, zero set a circle", bangbang_2d_circle),
    )
}


def build_example(name: str, params: dict | None = None) -> Problem:
    if name not in EXAMPLES:
        raise StructuralError(f"unknown example {name!r}; choose from {sorted(EXAMPLES)}")
    try:
        return EXAMPLES[name].build(**(params or {}))
    except TypeError as err:
        raise StructuralError(f"bad parameters for {name}: {err}") from None


# ---------------------------------------------------------------------------
# inline definitions


def _cone(spec: dict):
    kind = spec["type"]
    if kind == "halfline":
        return HalfLineNonPos(int(spec.get("dim", 1)))
    if kind == "box":
        return Box(spec["lower"], spec["upper"])
    if kind == "unit_ball":
        return UnitBall(int(spec["dim"]))
    if kind == "polyhedron":
        return Polyhedron(spec["A"], spec["b"])
    raise StructuralError(f"unknown cone type {kind!r}")


def build_inline(spec: dict) -> Problem:
    """Problem from an inline definition with expression strings for J (and G)."""
    n = int(spec["dim"])
    s = spec["set"]
    kind = s["type"]
    if kind == "box":
        C = Box(s["lower"], s["upper"])
    elif kind == "polyhedron":
        C = Polyhedron(s["A"], s["b"])
    elif kind == "unit_ball":
        C = UnitBall(n)
    elif kind == "power_epigraph":
        C = PowerEpigraph(s.get("alpha", 1.5), s.get("sign", "above"))
    elif kind == "level_set":
        K = _cone(s["cone"])
        C = LevelSet(
            expr.vector_function(s["G"], n),
            expr.vector_function(s["jac"], n),
            expr.vector_function(s["hess"], n),
            K,
            n,
            zkcq=bool(s.get("zkcq", False)),
            convex=bool(s.get("convex", False)),
        )
    else:
        raise StructuralError(f"unknown set type {kind!r}")
    if C.dim != n:
        raise StructuralError(f"set has dimension {C.dim}, problem declares {n}")
    o = spec["objective"]
    J = Objective.from_hessian(
        expr.point_function(o["value"], n), expr.vector_function(o["grad"], n), expr.vector_function(o["hess"], n)
    )
    mult = spec.get("multiplier")
    return Problem(
        spec.get("name", "inline"),
        C,
        J,
        np.asarray(spec["point"], dtype=float),
        multiplier=None if mult is None else np.asarray(mult, dtype=float),
    )


# ---------------------------------------------------------------------------
# running analyses


@dataclass(frozen=True)
class Numerics:
    seed: int = 0
    t0: float = 0.1
    k_max: int = 20
    restarts: int = 16
    workers: int | None = None
    n_directions: int = 16
    samples_per_radius: int = 64
    eps_schedule: tuple[float, ...] | None = None
    curvature_method: str = "auto"
    directions: tuple = ()

    def brute(self) -> BruteForceConfig:
        return BruteForceConfig(t0=self.t0, k_max=self.k_max, restarts=self.restarts, seed=self.seed, workers=self.workers)

    def growth(self, problem: Problem) -> GrowthConfig:
        eps = self.eps_schedule or problem.eps_schedule or GrowthConfig().eps_schedule
        return GrowthConfig(eps_schedule=tuple(float(e) for e in eps), samples_per_radius=self.samples_per_radius, seed=self.seed)

    def soc(self, problem: Problem) -> SocConfig:
        dirs = tuple(tuple(map(float, d)) for d in (self.directions or problem.directions))
        return SocConfig(
            directions=dirs,
            n_directions=self.n_directions,
            seed=self.seed,
            curvature_method=self.curvature_method,
            brute=self.brute(),
            growth=self.growth(problem),
        )


ANALYSES = ("full", "fonc", "curvature", "snc", "ssc", "growth", "bangbang")


def _empty(verdict: str, details: str, **parts) -> dict:
    out = {"fonc": None, "ndc": None, "curvature": [], "snc": [], "ssc": None, "growth": None}
    out.update(parts)
    out.update({"verdict": verdict, "details": details, "diagnostics": {}})
    return out


def bangbang_report(problem: Problem, num: Numerics) -> tuple[dict, SOCReport]:
    """Bang-bang no-gap report with level-set and coercivity diagnostics."""
    f = problem.field
    gcfg = replace(num.growth(problem), sampler="strip")
    rep = bb.bangbang_no_gap(f, problem.J, problem.g_samples, bb.BangBangConfig(problem.s_max, problem.levels, gcfg))
    sm = bb.extract_zero_set(f)
    out = rep.to_dict()
    diag = out["diagnostics"]
    diag["densities"] = list(problem.g_labels)
    diag["K_estimate"] = diag["level_set"]["K_estimate"]
    diag["surface_curvature"] = [c.value for c in rep.curvature]
    if sm.size:
        coer = []
        for g in problem.g_samples:
            smg = sm.with_density(g)
            coer.append(bb.surface_curvature(smg) - diag["K_estimate"] * smg.total_variation() ** 2)
        diag["coercivity_margin"] = coer
    return out, rep


def analyze(problem: Problem, analysis: str = "full", num: Numerics | None = None) -> tuple[dict, GrowthReport | None]:
    """Run one analysis; returns the report payload and the growth samples if any were drawn."""
    num = num or Numerics()
    if analysis not in ANALYSES:
        raise StructuralError(f"unknown analysis {analysis!r}")
    if problem.is_bangbang:
        if analysis not in ("full", "bangbang"):
            raise StructuralError("bang-bang examples support the 'full' and 'bangbang' analyses")
        out, rep = bangbang_report(problem, num)
        return out, rep.growth
    if analysis == "bangbang":
        raise StructuralError("the bangbang analysis needs a bang-bang example")
    C, J, x = problem.C, problem.J, problem.xbar
    if analysis == "full":
        rep = no_gap_report(C, J, x, num.soc(problem))
        return rep.to_dict(), rep.growth
    fonc = fonc_check(C, J, x)
    if analysis == "fonc":
        return _empty("no_gap_consistent" if fonc.holds else "inconsistent", "first-order check only", fonc=fonc.to_dict()), None
    if analysis == "growth":
        g = growth_sample(C, J, x, num.growth(problem))
        ok = g.sample_count > 0 and g.fitted_c > 0
        return _empty("no_gap_consistent" if ok else "inconsistent", "growth sampling only", fonc=fonc.to_dict(), growth=g.to_dict()), g
    if not fonc.holds:
        return _empty("inconsistent", "first-order condition fails", fonc=fonc.to_dict()), None
    phi = np.asarray(J.grad(x), dtype=float)
    cfg = num.soc(problem)
    dirs = critical_directions(C, x, phi, cfg.n_directions, cfg.seed, cfg.directions)
    curv = [evaluate_curvature(C, x, phi, h, cfg.curvature_method, cfg.brute) for h in dirs]
    base = {"fonc": fonc.to_dict(), "curvature": [c.to_dict() for c in curv]}
    if analysis == "curvature":
        unresolved = any(c.kind == "unresolved" for c in curv)
        return _empty("inconclusive" if unresolved else "no_gap_consistent", "curvature scan only", **base), None
    if analysis == "snc":
        res = snc_scan(C, J, x, 0.0, dirs, curvatures=curv)
        verdict = "inconsistent" if any(r.status == "violated" for r in res) else (
            "inconclusive" if any(r.status == "inconclusive" for r in res) else "no_gap_consistent"
        )
        return _empty(verdict, "necessary condition with c = 0", snc=[r.to_dict() for r in res], **base), None
    ndc = ndc_check(C, J, x, cfg.growth)
    ssc = ssc_check(C, J, x, dirs, ndc=ndc, curvatures=curv)
    verdict = {True: "no_gap_consistent", False: "inconsistent", None: "inconclusive"}[ssc.holds]
    return _empty(verdict, "sufficient condition only", ndc=ndc.to_dict(), ssc=ssc.to_dict(), **base), None


EXIT_CODES = {"no_gap_consistent": 0, "inconsistent": 2, "inconclusive": 3}

"""Directional curvature functional of an admissible set.

For a feasible x, a functional phi in -N_C(x) and a critical direction h,

    Q(h) = inf liminf <phi, r_k>

over all t_k -> 0 and corrections r_k with x + t_k h + t_k^2 r_k / 2 in C
and t_k r_k -> 0. Three evaluators are provided: a brute-force sequence
optimizer, closed forms through second-order tangent sets, and the
Lagrangian pullback formula for level sets.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

import numpy as np
from numpy.typing import ArrayLike
from scipy import optimize

from .cones import check_query, critical_cone_contains, normal_cone_contains, second_order_tangent_set
from .model import (
    AdmissibleSet,
    Array,
    BangBangBox,
    Box,
    DomainError,
    LevelSet,
    Polyhedron,
    UnitBall,
    UnsupportedError,
    as_vector,
    require_feasible,
)

Kind = Literal["finite", "plus_infinity", "minus_infinity", "unresolved"]


@dataclass(frozen=True)
class TrailEntry:
    t: float
    estimate: float | None
    residual: float
    radius: float


@dataclass(frozen=True)
class CurvatureValue:
    kind: Kind
    value: float
    method: str
    upper_bound: bool = False
    trail: tuple[TrailEntry, ...] = ()
    note: str = ""

    @classmethod
    def from_float(cls, v: float, method: str, **kw) -> "CurvatureValue":
        if v == np.inf:
            return cls("plus_infinity", np.inf, method, **kw)
        if v == -np.inf:
            return cls("minus_infinity", -np.inf, method, **kw)
        return cls("finite", float(v), method, **kw)

    @property
    def resolved(self) -> bool:
        return self.kind != "unresolved"

    def label(self) -> str:
        return {"plus_infinity": "+infinity", "minus_infinity": "-infinity", "unresolved": "unresolved"}.get(
            self.kind, repr(self.value)
        )

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "value": self.value if self.kind == "finite" else self.label(),
            "method": self.method,
            "upper_bound": self.upper_bound,
        }
        if self.note:
            out["note"] = self.note
        if self.trail:
            out["trail"] = [
                {"t": e.t, "estimate": e.estimate, "residual": e.residual, "radius": e.radius} for e in self.trail
            ]
        return out


@dataclass(frozen=True)
class BruteForceConfig:
    """Knobs of the sequence optimizer.

    The correction size is bounded by ``radius_bound * (t0 / t)**radius_growth``
    so that ``|r_k|`` may grow while ``t_k |r_k|`` still tends to zero.
    """

    t0: float = 0.1
    k_max: int = 20
    radius_bound: float | None = None
    radius_growth: float = 0.25
    restarts: int = 16
    convex_restarts: int = 2
    seed: int = 0
    workers: int | None = None
    rel_tol: float = 1e-3
    zero_tol: float = 1e-9
    infinity_threshold: float = 1e6
    slope_threshold: float = 0.1
    trend_length: int = 4
    max_contraction: float = 0.85
    feas_tol: float = 1e-7

    def schedule(self) -> Array:
        return self.t0 * 2.0 ** -np.arange(self.k_max + 1)


def _check_critical(C: AdmissibleSet, x: Array, phi: Array, h: Array) -> None:
    if not critical_cone_contains(C, x, phi, h):
        raise DomainError("direction is not in the critical cone")


class _Inner:
    """min <phi, r> subject to x + t h + t^2 r / 2 in C and |r| <= R."""

    def __init__(self, C: AdmissibleSet, x: Array, phi: Array, h: Array, t: float, R: float):
        self.C, self.x, self.phi, self.h, self.t, self.R = C, x, phi, h, t, R
        self.half = 0.5 * t * t

    def offset(self, r: Array) -> Array:
        return self.t * self.h + self.half * r

    def cons(self, r: Array) -> Array:
        c = -self.C.local_constraints(self.x, self.offset(r)) / self.half
        return np.append(c, 1.0 - (r @ r) / self.R**2)

    def cons_jac(self, r: Array) -> Array:
        Jc = -self.C.local_jacobian(self.x, self.offset(r))
        return np.vstack([Jc, -2.0 * r[None, :] / self.R**2])

    def violation(self, r: Array) -> float:
        c = self.C.local_constraints(self.x, self.offset(r)) / self.half
        viol = max(float(np.max(c, initial=0.0)), 0.0)
        ball = max(float(np.linalg.norm(r)) - self.R, 0.0)
        return max(viol, ball) / (1.0 + float(np.linalg.norm(r)))

    def solve(self, r0: Array, objective: bool = True) -> Array:
        phi = self.phi if objective else np.zeros_like(self.phi)
        res = optimize.minimize(
            lambda r: float(phi @ r),
            r0,
            jac=lambda r: phi,
            constraints=[{"type": "ineq", "fun": self.cons, "jac": self.cons_jac}],
            method="SLSQP",
            options={"ftol": 1e-13, "maxiter": 300},
        )
        return np.asarray(res.x, dtype=float)


def _random_starts(rng: np.random.Generator, n: int, R: float, count: int) -> list[Array]:
    out = []
    for _ in range(count):
        d = rng.standard_normal(n)
        d /= max(np.linalg.norm(d), 1e-300)
        out.append(d * R * rng.random() ** (1.0 / n))
    return out


def _solve_level(
    C: AdmissibleSet,
    x: Array,
    phi: Array,
    h: Array,
    t: float,
    R: float,
    starts: list[Array],
    feas_tol: float,
    workers: int,
) -> tuple[float | None, float, Array | None]:
    inner = _Inner(C, x, phi, h, t, R)

    def attempt(r0: Array) -> tuple[float, float, Array] | None:
        r = inner.solve(r0)
        v = inner.violation(r)
        if v <= feas_tol:
            return float(phi @ r), v, r
        r = inner.solve(inner.solve(r0, objective=False))
        v = inner.violation(r)
        return (float(phi @ r), v, r) if v <= feas_tol else None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(attempt, starts))
    else:
        results = [attempt(r0) for r0 in starts]
    feasible = [(val, i, v, r) for i, out in enumerate(results) if out is not None for val, v, r in [out]]
    if not feasible:
        return None, math.inf, None
    val, _, v, r = min(feasible, key=lambda item: (item[0], item[1]))
    return val, v, r


def _classify(trail: list[TrailEntry], scale: float, cfg: BruteForceConfig) -> tuple[Kind, float, str]:
    L = cfg.trend_length
    ests = [e.estimate for e in trail]
    if len(ests) >= L and all(e is None for e in ests[-L:]):
        return "plus_infinity", np.inf, "inner problem infeasible at the finest scales"
    suffix: list[TrailEntry] = []
    for e in reversed(trail):
        if e.estimate is None:
            break
        suffix.append(e)
    suffix.reverse()
    if ests and ests[-1] is None:
        prior = [e.estimate for e in trail if e.estimate is not None]
        if len(prior) >= L - 1 and np.all(np.diff(prior[-(L - 1):]) > 0):
            return "plus_infinity", np.inf, "minima increase until the inner problem becomes infeasible"
        return "unresolved", np.nan, "inner problem infeasible at the finest scale only"
    if len(suffix) < 2:
        return "unresolved", np.nan, "too few feasible levels"
    v = np.array([e.estimate for e in suffix])
    ts = np.array([e.t for e in suffix])
    zero = cfg.zero_tol * scale
    if abs(v[-1]) <= zero and abs(v[-2]) <= zero:
        return "finite", float(v[-1]), "converged to zero"
    if v.size >= L:
        tail, tt = v[-L:], ts[-L:]
        steps = np.diff(tail)
        if np.all(steps > 0) or np.all(steps < 0):
            same_sign = np.all(np.sign(tail) == np.sign(tail[-1])) and np.all(np.abs(tail) > zero)
            growing = same_sign and np.all(np.diff(np.abs(tail)) > 0)
            big = abs(tail[-1]) > cfg.infinity_threshold * scale
            slope = np.polyfit(np.log(tt), np.log(np.abs(tail)), 1)[0] if growing else 0.0
            if growing and (big or slope <= -cfg.slope_threshold):
                if tail[-1] > 0:
                    return "plus_infinity", np.inf, f"minima grow like t^{slope:.3g}"
                return "minus_infinity", -np.inf, f"minima fall like -t^{slope:.3g}"
    if abs(v[-1] - v[-2]) <= cfg.rel_tol * (abs(v[-1]) + 1e-6 * scale):
        return "finite", float(v[-1]), "last two levels agree"
    if v.size >= L + 1:
        d = np.diff(v[-(L + 1):])
        q = d[1:] / d[:-1]
        if np.all(q > 0) and np.all(q <= cfg.max_contraction):
            # geometric tail: sum the remaining steps
            qm = float(np.mean(q[-2:]))
            limit = float(v[-1] + d[-1] * qm / (1.0 - qm))
            if abs(limit - v[-1]) <= 10 * cfg.rel_tol * (abs(limit) + 1e-6 * scale):
                return "finite", limit, f"extrapolated from a geometric tail (ratio {qm:.3g})"
    return "unresolved", np.nan, "no convergence and no divergence pattern"


def curvature_brute_force(
    C: AdmissibleSet,
    x: ArrayLike,
    phi: ArrayLike,
    h: ArrayLike,
    cfg: BruteForceConfig | None = None,
) -> CurvatureValue:
    """Estimate Q(h) by minimizing <phi, r> at each t_k of a halving schedule.

    Finite results are upper bounds of the infimum (sampling cannot certify
    it). The trail records, per level, the best value found, its feasibility
    residual and the correction radius in force.
    """
    cfg = cfg or BruteForceConfig()
    x, phi = check_query(C, x, phi)
    h = as_vector(h, C.dim, "direction")
    _check_critical(C, x, phi, h)
    hn = float(np.linalg.norm(h))
    if hn == 0.0:
        return CurvatureValue("finite", 0.0, "brute_force", upper_bound=True, note="zero direction")
    R0 = cfg.radius_bound if cfg.radius_bound is not None else 100.0 * max(hn, hn * hn)
    restarts = cfg.restarts if not C.convex else min(cfg.restarts, cfg.convex_restarts)
    workers = max(1, cfg.workers or 1)
    trail: list[TrailEntry] = []
    prev: Array | None = None
    for k, t in enumerate(cfg.schedule()):
        R = R0 * (cfg.t0 / t) ** cfg.radius_growth
        rng = np.random.default_rng([cfg.seed, k])
        first = np.zeros(C.dim) if prev is None else prev * min(1.0, R / max(np.linalg.norm(prev), 1e-300))
        starts = [first] + _random_starts(rng, C.dim, R, max(restarts - 1, 0))
        val, resid, r = _solve_level(C, x, phi, h, float(t), R, starts, cfg.feas_tol, workers)
        if r is not None:
            prev = r
        trail.append(TrailEntry(float(t), val, float(resid), float(R)))
    scale = 1.0 + float(np.linalg.norm(phi)) * hn * hn
    kind, value, note = _classify(trail, scale, cfg)
    return CurvatureValue(kind, value, "brute_force", upper_bound=kind == "finite", trail=tuple(trail), note=note)


# ---------------------------------------------------------------------------
# closed forms


def curvature_closed_form(C: AdmissibleSet, x: ArrayLike, phi: ArrayLike, h: ArrayLike) -> CurvatureValue:
    """Exact Q(h): zero on polyhedric sets, an LP over T_C^2(x, h) otherwise."""
    if not isinstance(C, (Box, Polyhedron, UnitBall, LevelSet)):
        raise UnsupportedError(f"no closed form for {type(C).__name__}")
    x, phi = check_query(C, x, phi)
    h = as_vector(h, C.dim, "direction")
    _check_critical(C, x, phi, h)
    if isinstance(C, (Box, Polyhedron)):
        return CurvatureValue("finite", 0.0, "polyhedric_closed_form")
    if np.linalg.norm(h) == 0.0:
        return CurvatureValue("finite", 0.0, "sot_closed_form", note="zero direction")
    sots = second_order_tangent_set(C, x, h)
    return CurvatureValue.from_float(sots.inf_linear(phi), "sot_closed_form")


def supports_closed_form(C: AdmissibleSet) -> bool:
    return isinstance(C, (Box, Polyhedron, UnitBall)) or (isinstance(C, LevelSet) and C.zkcq)


def curvature_pullback(
    C: LevelSet,
    x: ArrayLike,
    phi: ArrayLike,
    lam: ArrayLike,
    h: ArrayLike,
    tol: float = 1e-8,
) -> CurvatureValue:
    """Q_C(h) = Q_K^{G(x), -lam}(G'(x) h) + <lam, G''(x)[h, h]>.

    Requires the multiplier identity phi + G'(x)^T lam = 0 and lam in
    N_K(G(x)).
    """
    if not isinstance(C, LevelSet):
        raise UnsupportedError("the pullback formula needs a level set")
    x = require_feasible(C, x)
    phi = as_vector(phi, C.dim, "functional")
    lam = as_vector(lam, C.K.dim, "multiplier")
    h = as_vector(h, C.dim, "direction")
    Jx = C.jac(x)
    if np.linalg.norm(phi + Jx.T @ lam) > tol * (1.0 + np.linalg.norm(phi)):
        raise DomainError("multiplier does not reproduce the functional")
    z = C.G(x)
    if not normal_cone_contains(C.K, z, lam):
        raise DomainError("multiplier is not in the normal cone of K")
    if abs(phi @ h) > 1e-8 * max(1.0, np.linalg.norm(phi) * np.linalg.norm(h)):
        raise DomainError("direction is not critical")
    Jh = Jx @ h
    # drop rounding noise so the relative critical test on K sees exact zeros
    Jh = np.where(np.abs(Jh) <= 1e-12 * np.linalg.norm(Jx, axis=1) * np.linalg.norm(h), 0.0, Jh)
    inner = curvature_closed_form(C.K, z, -lam, Jh)
    extra = float(lam @ np.einsum("kij,i,j->k", C.hess(x), h, h))
    return CurvatureValue.from_float(inner.value + extra, "pullback")


# ---------------------------------------------------------------------------
# Mosco regularity probe


@dataclass(frozen=True)
class MrcRow:
    direction: tuple[float, ...]
    strong: CurvatureValue
    relaxed: CurvatureValue
    agree: bool


@dataclass(frozen=True)
class MrcReport:
    rows: tuple[MrcRow, ...]

    @property
    def suspect(self) -> list[int]:
        return [i for i, row in enumerate(self.rows) if not row.agree]


def _agree(a: CurvatureValue, b: CurvatureValue, tol: float) -> bool:
    if a.kind != b.kind:
        return False
    if a.kind != "finite":
        return True
    return abs(a.value - b.value) <= tol * (1.0 + abs(a.value))


def mrc_probe(
    C: AdmissibleSet,
    x: ArrayLike,
    phi: ArrayLike,
    h_samples: Sequence,
    cfg: BruteForceConfig | None = None,
    tol: float = 2e-2,
    field=None,
    t: float = 1e-3,
) -> MrcReport:
    """Compare the shrinking-correction regime against a 10x relaxed radius.

    Disagreement marks a direction where the infimum seems to need
    corrections that do not converge strongly. This is a sampling probe,
    not a proof. On a bang-bang box the samples are surface measures and
    ``field`` must hold the adjoint; the relaxed regime is then realized by
    recovery strips.
    """
    cfg = cfg or BruteForceConfig()
    rows = []
    if isinstance(C, BangBangBox):
        from .bangbang import measure_direction_regimes

        for sm in h_samples:
            strong, relaxed = measure_direction_regimes(field, sm, t)
            rows.append(MrcRow(tuple(np.asarray(sm.density).tolist()), strong, relaxed, _agree(strong, relaxed, tol)))
        return MrcReport(tuple(rows))
    for h in h_samples:
        h = as_vector(h, C.dim, "direction")
        strong = curvature_brute_force(C, x, phi, h, cfg)
        R = cfg.radius_bound if cfg.radius_bound is not None else 100.0 * max(np.linalg.norm(h), h @ h)
        relaxed = curvature_brute_force(C, x, phi, h, replace(cfg, radius_bound=10.0 * R))
        rows.append(MrcRow(tuple(h.tolist()), strong, relaxed, _agree(strong, relaxed, tol)))
    return MrcReport(tuple(rows))

"""Radial, tangent, normal and critical cones, and second-order tangent sets.

All supported sets have polyhedral tangent cones at every point, described
through the generators of the normal cone: T = {h : <g, h> <= 0 for every
generator g}. In finite dimensions the weak-star and strong tangent cones
coincide, so only the strong one is implemented.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from numpy.typing import ArrayLike
from scipy import optimize, stats

from .model import (
    AdmissibleSet,
    Array,
    Box,
    DomainError,
    LevelSet,
    Polyhedron,
    PowerEpigraph,
    StructuralError,
    UnitBall,
    UnsupportedError,
    as_vector,
    require_feasible,
)

CONE_TOL = 1e-9


def _unit_rows(G: Array) -> Array:
    norms = np.linalg.norm(G, axis=1, keepdims=True)
    return G / np.where(norms > 0, norms, 1.0)


def conic_hull_residual(G: Array, v: Array) -> tuple[Array, float]:
    """Nearest point of cone(rows of G) to v, and the distance."""
    if G.shape[0] == 0:
        return np.zeros_like(v), float(np.linalg.norm(v))
    coef, resid = optimize.nnls(G.T, v)
    return G.T @ coef, float(resid)


def _box_active(C: Box, x: Array) -> tuple[Array, Array]:
    # componentwise shortcut; large grid boxes never build dense generators
    tol = C.default_tol
    up = np.isfinite(C.upper) & (x >= C.upper - tol)
    lo = np.isfinite(C.lower) & (x <= C.lower + tol)
    return up, lo


def _box_tangent_part(C: Box, x: Array, h: Array) -> Array:
    up, lo = _box_active(C, x)
    out = np.where(up, np.minimum(h, 0.0), h)
    out = np.where(lo, np.maximum(out, 0.0), out)
    return np.where(up & lo, 0.0, out)


def tangent_cone_contains(C: AdmissibleSet, x: ArrayLike, h: ArrayLike, tol: float = CONE_TOL) -> bool:
    """Membership of h in the tangent cone T_C(x)."""
    x = require_feasible(C, x)
    h = as_vector(h, C.dim, "direction")
    if isinstance(C, Box):
        return bool(np.all(np.abs(h - _box_tangent_part(C, x, h)) <= tol * max(1.0, np.linalg.norm(h))))
    G = _unit_rows(C.normal_generators(x))
    return bool(np.all(G @ h <= tol * max(1.0, np.linalg.norm(h))))


def normal_cone_contains(C: AdmissibleSet, x: ArrayLike, v: ArrayLike, tol: float = CONE_TOL) -> bool:
    """Membership of v in N_C(x): <v, h> <= 0 for every tangent h."""
    x = require_feasible(C, x)
    v = as_vector(v, C.dim, "functional")
    if isinstance(C, Box):
        # the normal cone is the polar of the tangent cone; its excess is the tangent part
        resid = float(np.linalg.norm(_box_tangent_part(C, x, v)))
        return resid <= tol * max(1.0, np.linalg.norm(v))
    _, resid = conic_hull_residual(_unit_rows(C.normal_generators(x)), v)
    return resid <= tol * max(1.0, np.linalg.norm(v))


def radial_cone_contains(C: AdmissibleSet, x: ArrayLike, h: ArrayLike, tol: float = CONE_TOL) -> bool:
    """Membership of h in the radial cone: x + t h feasible for all small t."""
    x = require_feasible(C, x)
    h = as_vector(h, C.dim, "direction")
    if isinstance(C, (Box, Polyhedron)):
        return tangent_cone_contains(C, x, h, tol)
    if isinstance(C, (UnitBall, PowerEpigraph)):
        G = _unit_rows(C.normal_generators(x))
        if G.shape[0] == 0 or np.linalg.norm(h) == 0.0:
            return True
        if isinstance(C, PowerEpigraph) and C.sign == "below":
            return tangent_cone_contains(C, x, h, tol)
        # strictly convex boundary: only strictly inward directions stay inside
        return bool(np.all(G @ h < 0.0))
    raise UnsupportedError(f"no radial test for {type(C).__name__}")


def check_query(C: AdmissibleSet, x: ArrayLike, phi: ArrayLike, tol: float = CONE_TOL) -> tuple[Array, Array]:
    """Validate a (set, point, functional) query: x feasible and phi in -N_C(x)."""
    x = require_feasible(C, x)
    phi = as_vector(phi, C.dim, "functional")
    if not normal_cone_contains(C, x, -phi, tol):
        raise DomainError("functional is not in the negative normal cone at the base point")
    return x, phi


def critical_cone_contains(
    C: AdmissibleSet, x: ArrayLike, phi: ArrayLike | None, h: ArrayLike, tol: float = 1e-8
) -> bool:
    """h in T_C(x) and <phi, h> = 0 up to tol * |phi| * |h|."""
    if phi is None:
        raise StructuralError("critical cone needs a functional")
    x, phi = check_query(C, x, phi)
    h = as_vector(h, C.dim, "direction")
    if not tangent_cone_contains(C, x, h):
        return False
    scale = float(np.max(np.abs(h))) if h.size else 0.0
    if scale == 0.0:
        return True
    h = h / scale  # keeps |h| from underflowing for tiny directions
    return abs(phi @ h) <= tol * np.linalg.norm(phi) * np.linalg.norm(h)


def project_onto_cone(G: Array, v: Array, lines: Array | None = None) -> Array:
    """Projection onto {h : G h <= 0, L h = 0} via the polar decomposition."""
    rows = [G]
    if lines is not None and lines.size:
        rows += [lines, -lines]
    polar = np.vstack(rows) if any(r.size for r in rows) else np.zeros((0, v.size))
    p, _ = conic_hull_residual(polar, v)
    return v - p


def tangent_projection(C: AdmissibleSet, x: ArrayLike, v: ArrayLike) -> Array:
    x = require_feasible(C, x)
    if isinstance(C, Box):
        return _box_tangent_part(C, x, as_vector(v, C.dim))
    return project_onto_cone(_unit_rows(C.normal_generators(x)), as_vector(v, C.dim))


def critical_directions(
    C: AdmissibleSet,
    x: ArrayLike,
    phi: ArrayLike,
    count: int = 16,
    seed: int = 0,
    extra: Sequence[ArrayLike] = (),
) -> list[Array]:
    """Deterministic sample of unit critical directions.

    Scrambled Sobol points are pushed to the sphere, projected onto the
    critical cone, renormalized and filtered with the membership test.
    User-supplied directions are appended when they are critical.
    """
    x, phi = check_query(C, x, phi)
    n = C.dim
    G = _unit_rows(C.normal_generators(x))
    line = phi[None, :] if np.linalg.norm(phi) > 0 else np.zeros((0, n))
    out: list[Array] = []
    if count > 0:
        m = int(np.ceil(np.log2(max(count, 2))))
        pts = stats.qmc.Sobol(d=n, scramble=True, seed=seed).random_base2(m)[:count]
        gauss = stats.norm.ppf(np.clip(pts, 1e-12, 1 - 1e-12))
        for v in gauss:
            p = project_onto_cone(G, v / np.linalg.norm(v), line)
            size = np.linalg.norm(p)
            if size < 1e-8:
                continue
            p = p / size
            # projection round-off leaves ~1e-16 entries that break exact orthogonality
            p = np.where(np.abs(p) <= 1e-12, 0.0, p)
            p = p / np.linalg.norm(p)
            if critical_cone_contains(C, x, phi, p) and not any(np.allclose(p, q, atol=1e-10) for q in out):
                out.append(p)
    for h in extra:
        h = as_vector(h, n, "direction")
        if np.linalg.norm(h) > 0 and critical_cone_contains(C, x, phi, h):
            out.append(h / C.norm(h))
    return out


# ---------------------------------------------------------------------------
# second-order tangent sets


@dataclass(frozen=True)
class SecondOrderTangentSet:
    """Descriptor {r : A r <= b} tagged with its variant.

    ``shifted`` sets are ``offset + {r : A r <= 0}``; ``halfline`` is the
    scalar set (-inf, 0].
    """

    kind: Literal["all", "halfline", "shifted", "empty"]
    dim: int
    A: Array
    b: Array

    @classmethod
    def all_space(cls, dim: int) -> "SecondOrderTangentSet":
        return cls("all", dim, np.zeros((0, dim)), np.zeros(0))

    @classmethod
    def empty(cls, dim: int) -> "SecondOrderTangentSet":
        return cls("empty", dim, np.zeros((0, dim)), np.zeros(0))

    @property
    def offset(self) -> Array | None:
        if self.kind != "shifted":
            return None if self.kind == "empty" else np.zeros(self.dim)
        sol, *_ = np.linalg.lstsq(self.A, self.b, rcond=None)
        return sol

    def contains(self, r: ArrayLike, tol: float = 1e-10) -> bool:
        if self.kind == "empty":
            return False
        r = as_vector(r, self.dim)
        return bool(np.all(self.A @ r <= self.b + tol * (1 + np.abs(self.b))))

    def inf_linear(self, phi: ArrayLike) -> float:
        """inf over the set of <phi, r>; +inf when empty, -inf when unbounded."""
        phi = as_vector(phi, self.dim)
        if self.kind == "empty":
            return np.inf
        if self.kind == "all" or self.A.shape[0] == 0:
            return 0.0 if np.all(phi == 0) else -np.inf
        res = optimize.linprog(phi, A_ub=self.A, b_ub=self.b, bounds=(None, None), method="highs")
        if res.status == 3:
            return -np.inf
        if res.status == 2:
            return np.inf
        if res.status != 0:
            raise DomainError(f"linear program failed: {res.message}")
        return float(res.fun)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "A": self.A.tolist(), "b": self.b.tolist()}


def _polyhedral_sots(G: Array, h: Array, tol: float) -> tuple[Array, Array]:
    keep = np.abs(G @ h) <= tol * max(1.0, np.linalg.norm(h))
    A = G[keep]
    return A, np.zeros(A.shape[0])


def second_order_tangent_set(
    K: AdmissibleSet, z: ArrayLike, h: ArrayLike, tol: float = CONE_TOL
) -> SecondOrderTangentSet:
    """Outer second-order tangent set T_K^2(z, h) in closed form.

    Polyhedral sets give T_{T_K(z)}(h); the unit ball gives a shifted half
    space at tangential boundary directions; level sets are pulled back
    through G'(x) and G''(x) under the asserted constraint qualification.
    """
    z = as_vector(z, K.dim, "base point")
    if not K.contains(z):
        raise DomainError("base point is not in the set")
    h = as_vector(h, K.dim, "direction")
    if not tangent_cone_contains(K, z, h, tol):
        raise DomainError("direction is not tangent")
    n = K.dim
    if isinstance(K, (Box, Polyhedron)):
        A, b = _polyhedral_sots(_unit_rows(K.normal_generators(z)), h, tol)
        if A.shape[0] == 0:
            return SecondOrderTangentSet.all_space(n)
        kind = "halfline" if n == 1 and np.all(A > 0) else "shifted"
        return SecondOrderTangentSet(kind, n, A, b)
    if isinstance(K, UnitBall):
        G = K.normal_generators(z)
        if G.shape[0] == 0 or (G[0] @ h) < -tol * max(1.0, np.linalg.norm(h)):
            return SecondOrderTangentSet.all_space(n)
        u = G[0]
        return SecondOrderTangentSet("shifted", n, u[None, :], np.array([-(h @ h)]))
    if isinstance(K, PowerEpigraph):
        return _power_epigraph_sots(K, z, h, tol)
    if isinstance(K, LevelSet):
        Jx = K.jac(z)
        inner = second_order_tangent_set(K.K, K.G(z), Jx @ h, tol)
        if inner.kind in ("all", "empty"):
            return SecondOrderTangentSet(inner.kind, n, np.zeros((0, n)), np.zeros(0))
        q = np.einsum("kij,i,j->k", K.hess(z), h, h)
        return SecondOrderTangentSet("shifted", n, inner.A @ Jx, inner.b - inner.A @ q)
    raise UnsupportedError(f"no second-order tangent set for {type(K).__name__}")


def _power_epigraph_sots(C: PowerEpigraph, x: Array, h: Array, tol: float) -> SecondOrderTangentSet:
    G = C.normal_generators(x)
    if G.shape[0] == 0:
        return SecondOrderTangentSet.all_space(2)
    g = G[0]
    if g @ h < -tol * max(1.0, np.linalg.norm(h)):
        return SecondOrderTangentSet.all_space(2)
    s = 1.0 if C.sign == "above" else -1.0
    if x[0] == 0.0:
        if h[0] == 0.0:
            return SecondOrderTangentSet("shifted", 2, g[None, :], np.zeros(1))
        # the boundary bends like t^alpha: no o(t^2) correction exists above,
        # and every correction is admissible below
        return SecondOrderTangentSet.empty(2) if s > 0 else SecondOrderTangentSet.all_space(2)
    a = C.alpha
    second = a * (a - 1.0) * abs(x[0]) ** (a - 2.0)
    return SecondOrderTangentSet("shifted", 2, g[None, :], np.array([-s * second * h[0] ** 2]))


# ---------------------------------------------------------------------------
# necessary condition for second-order regularity


@dataclass(frozen=True)
class SorCheck:
    status: Literal["ok", "violated"]
    t: tuple[float, ...]
    ratios: tuple[float, ...]


def default_t_schedule(t0: float = 0.1, k_max: int = 30) -> Array:
    return t0 * 2.0 ** -np.arange(k_max + 1)


def sor_necessary_check(
    C: AdmissibleSet,
    x: ArrayLike,
    h: ArrayLike,
    t_schedule: ArrayLike | None = None,
    growth_factor: float = 1e3,
    floor: float = 1e-9,
) -> SorCheck:
    """Test dist(x + t h, C) = O(t^2) along a decreasing schedule of t."""
    x = require_feasible(C, x)
    h = as_vector(h, C.dim, "direction")
    if not tangent_cone_contains(C, x, h):
        raise DomainError("direction is not tangent")
    ts = default_t_schedule() if t_schedule is None else np.asarray(t_schedule, dtype=float)
    ratios = np.array([C.distance_from(x, t * h) / t**2 for t in ts])
    base = max(ratios[0], floor * (1.0 + float(h @ h)))
    status = "violated" if np.max(ratios) > growth_factor * base else "ok"
    return SorCheck(status, tuple(ts.tolist()), tuple(ratios.tolist()))

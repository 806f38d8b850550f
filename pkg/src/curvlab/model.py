"""Shared data model: grids, norms, objectives and admissible-set descriptors.

Every set exposes the same small interface so that the cone, curvature and
optimality modules can stay variant-agnostic:

* ``contains(x, tol)`` -- membership up to a slack in each defining inequality.
* ``normal_generators(x)`` -- rows spanning the normal cone as a conic hull.
  The tangent cone is the polar of that hull.
* ``local_constraints(x, d)`` / ``local_jacobian(x, d)`` -- constraint values
  ``c(x + d) <= 0`` computed so that tiny offsets ``d`` do not drown in
  round-off against ``x``.
* ``project(y)`` and ``distance_from(x, d)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import optimize

Array = NDArray[np.float64]
NormTag = Literal["euclidean", "weighted_l1", "weighted_l2"]

ANALYTIC_TOL = 1e-10
GRID_TOL = 1e-8


class CurvlabError(Exception):
    """Base class for all library errors."""


class StructuralError(CurvlabError, ValueError):
    """Inputs have the wrong shape, length or kind."""


class DomainError(CurvlabError, ValueError):
    """Inputs lie outside the mathematical domain of an operation."""


class UnsupportedError(CurvlabError, NotImplementedError):
    """The requested operation has no implementation for this set variant."""


class RefusalError(CurvlabError):
    """A constraint qualification was required but not asserted."""


class AssumptionViolation(CurvlabError):
    """A standing regularity assumption fails on the data."""


class ResolutionError(CurvlabError):
    """The grid is too coarse for the requested quantity."""


def as_vector(v: ArrayLike, n: int | None = None, name: str = "vector") -> Array:
    arr = np.asarray(v, dtype=float).reshape(-1)
    if n is not None and arr.size != n:
        raise StructuralError(f"{name} has length {arr.size}, expected {n}")
    if not np.all(np.isfinite(arr)):
        raise StructuralError(f"{name} has non-finite entries")
    return arr


# ---------------------------------------------------------------------------
# grids and norms


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid on an interval or an axis-aligned rectangle.

    Nodes are cell centers, so they never touch the boundary of the open
    domain. Grid functions are stored flattened in C order.
    """

    bounds: tuple[tuple[float, float], ...]
    cells: int

    def __post_init__(self) -> None:
        bounds = tuple((float(a), float(b)) for a, b in self.bounds)
        object.__setattr__(self, "bounds", bounds)
        if len(bounds) not in (1, 2):
            raise StructuralError("grids must have dimension 1 or 2")
        if any(not (a < b) for a, b in bounds):
            raise StructuralError("each axis needs a < b")
        if int(self.cells) != self.cells or self.cells < 1:
            raise StructuralError("cells must be a positive integer")
        object.__setattr__(self, "cells", int(self.cells))

    @classmethod
    def from_nodes(cls, nodes: ArrayLike) -> "Grid":
        """Rebuild a 1D grid from cell-center nodes; rejects nonuniform spacing."""
        xs = np.asarray(nodes, dtype=float).reshape(-1)
        if xs.size < 2:
            raise StructuralError("need at least two nodes")
        steps = np.diff(xs)
        h = steps.mean()
        if h <= 0 or np.max(np.abs(steps - h)) > 1e-9 * abs(h):
            raise StructuralError("nonuniform grids are not supported")
        return cls(((xs[0] - h / 2, xs[-1] + h / 2),), xs.size)

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.cells,) * self.dim

    @property
    def size(self) -> int:
        return self.cells**self.dim

    @property
    def spacing(self) -> Array:
        return np.array([(b - a) / self.cells for a, b in self.bounds])

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def measure(self) -> float:
        return float(np.prod([b - a for a, b in self.bounds]))

    @property
    def axes(self) -> list[Array]:
        return [a + (np.arange(self.cells) + 0.5) * (b - a) / self.cells for a, b in self.bounds]

    @property
    def volumes(self) -> Array:
        return np.full(self.size, self.cell_volume)

    @property
    def nodes(self) -> Array:
        """Node coordinates, shape (size, dim), matching the flattened order."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=1)

    def to_dict(self) -> dict:
        return {"bounds": [list(b) for b in self.bounds], "cells": self.cells}


def norm(v: ArrayLike, norm_tag: NormTag = "euclidean", grid: Grid | None = None) -> float:
    """Euclidean norm, or the grid-weighted L1 / L2 norm of a grid function."""
    arr = np.asarray(v, dtype=float).reshape(-1)
    if norm_tag == "euclidean":
        return _scaled_2norm(arr)
    if norm_tag not in ("weighted_l1", "weighted_l2"):
        raise StructuralError(f"unknown norm tag {norm_tag!r}")
    if grid is None:
        raise StructuralError(f"{norm_tag} needs a grid")
    if arr.size != grid.size:
        raise StructuralError(f"grid function has {arr.size} entries, grid has {grid.size} cells")
    if norm_tag == "weighted_l1":
        return float(np.sum(np.abs(arr)) * grid.cell_volume)
    return _scaled_2norm(arr) * math.sqrt(grid.cell_volume)


def _scaled_2norm(arr: Array) -> float:
    # scale first so tiny or huge entries neither underflow nor overflow when squared
    m = float(np.max(np.abs(arr))) if arr.size else 0.0
    if m == 0.0 or not math.isfinite(m):
        return m
    return m * float(np.linalg.norm(arr / m))


# ---------------------------------------------------------------------------
# objectives


@dataclass(frozen=True)
class Objective:
    """Callable bundle: value, gradient and Hessian bilinear form.

    ``grad`` returns the coordinate gradient, so the pairing with a direction
    is the plain dot product. ``hess`` optionally returns a dense Hessian.
    """

    value: Callable[[Array], float]
    grad: Callable[[Array], Array]
    hess_form: Callable[[Array, Array, Array], float]
    smoothness: Literal["c2_taylor", "custom"] = "c2_taylor"
    hess: Callable[[Array], Array] | None = None

    @classmethod
    def from_hessian(
        cls,
        value: Callable[[Array], float],
        grad: Callable[[Array], Array],
        hess: Callable[[Array], Array],
        smoothness: Literal["c2_taylor", "custom"] = "c2_taylor",
    ) -> "Objective":
        def form(x: Array, a: Array, b: Array) -> float:
            return float(np.asarray(a) @ hess(x) @ np.asarray(b))

        return cls(value, grad, form, smoothness, hess)

    @classmethod
    def quadratic(cls, H: ArrayLike, g: ArrayLike, c: float = 0.0) -> "Objective":
        """J(x) = c + <g, x> + 1/2 x^T H x with a symmetric H."""
        H = np.asarray(H, dtype=float)
        g = np.asarray(g, dtype=float)
        if H.shape != (g.size, g.size):
            raise StructuralError("H must be square and match g")
        H = 0.5 * (H + H.T)
        return cls.from_hessian(
            lambda x: float(c + g @ x + 0.5 * x @ H @ x),
            lambda x: g + H @ x,
            lambda x: H,
        )

    def scaled(self, factor: float) -> "Objective":
        hess = None if self.hess is None else (lambda x: factor * self.hess(x))
        return Objective(
            lambda x: factor * self.value(x),
            lambda x: factor * np.asarray(self.grad(x)),
            lambda x, a, b: factor * self.hess_form(x, a, b),
            self.smoothness,
            hess,
        )

    def hessian_matrix(self, x: Array) -> Array:
        if self.hess is not None:
            return np.asarray(self.hess(x), dtype=float)
        n = x.size
        eye = np.eye(n)
        H = np.array([[self.hess_form(x, eye[i], eye[j]) for j in range(n)] for i in range(n)])
        return 0.5 * (H + H.T)


@dataclass(frozen=True)
class ObjectiveCheck:
    grad_error: float
    hess_error: float
    symmetry_error: float
    grad_ok: bool
    hess_ok: bool
    symmetric: bool

    @property
    def ok(self) -> bool:
        return self.grad_ok and self.hess_ok and self.symmetric


def check_objective(
    J: Objective,
    points: ArrayLike,
    seed: int = 0,
    directions: int = 3,
    grad_rtol: float = 1e-5,
    hess_rtol: float = 1e-4,
    sym_rtol: float = 1e-12,
) -> ObjectiveCheck:
    """Finite-difference consistency of grad and hess_form, plus symmetry.

    Derivatives are probed along random unit directions with central
    differences; errors are relative to ``1 + |reference|``.
    """
    rng = np.random.default_rng(seed)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    g_err = h_err = s_err = 0.0
    for x in pts:
        scale = 1.0 + np.linalg.norm(x)
        g = np.asarray(J.grad(x), dtype=float)
        for _ in range(directions):
            d = rng.standard_normal(x.size)
            d /= np.linalg.norm(d)
            a = rng.standard_normal(x.size)
            a /= np.linalg.norm(a)
            eps = 1e-5 * scale
            fd = (J.value(x + eps * d) - J.value(x - eps * d)) / (2 * eps)
            g_err = max(g_err, abs(fd - g @ d) / (1.0 + abs(g @ d)))
            eps = 1e-4 * scale
            fd_h = (np.asarray(J.grad(x + eps * d)) - np.asarray(J.grad(x - eps * d))) @ a / (2 * eps)
            hab = J.hess_form(x, a, d)
            h_err = max(h_err, abs(fd_h - hab) / (1.0 + abs(hab)))
            s_err = max(s_err, abs(hab - J.hess_form(x, d, a)) / (1.0 + abs(hab)))
    return ObjectiveCheck(g_err, h_err, s_err, g_err <= grad_rtol, h_err <= hess_rtol, s_err <= sym_rtol)


# ---------------------------------------------------------------------------
# admissible sets


class AdmissibleSet:
    """Common interface; see the module docstring."""

    dim: int
    convex: bool = True
    finite_dimensional: bool = True
    norm_tag: NormTag = "euclidean"
    grid: Grid | None = None

    @property
    def default_tol(self) -> float:
        return ANALYTIC_TOL

    def norm(self, v: ArrayLike) -> float:
        return norm(v, self.norm_tag, self.grid)

    def contains(self, x: ArrayLike, tol: float | None = None) -> bool:
        tol = self.default_tol if tol is None else tol
        x = as_vector(x, self.dim, "point")
        return bool(np.all(self.local_constraints(x, np.zeros_like(x)) <= tol))

    def local_constraints(self, x: Array, d: Array) -> Array:
        raise UnsupportedError(f"{type(self).__name__} has no constraint description")

    def local_jacobian(self, x: Array, d: Array) -> Array:
        raise UnsupportedError(f"{type(self).__name__} has no constraint Jacobian")

    def normal_generators(self, x: Array, tol: float | None = None) -> Array:
        raise UnsupportedError(f"{type(self).__name__} has no normal-cone description")

    def project(self, y: ArrayLike) -> Array:
        raise UnsupportedError(f"{type(self).__name__} has no projection")

    def distance_from(self, x: Array, d: Array) -> float:
        p = x + d
        return self.norm(p - self.project(p))

    def describe(self) -> dict:
        return {"type": type(self).__name__}


def _active_tol(tol: float | None, default: float) -> float:
    return default if tol is None else tol


class Box(AdmissibleSet):
    """Componentwise bounds lower <= x <= upper; infinite bounds allowed."""

    def __init__(self, lower: ArrayLike, upper: ArrayLike, grid: Grid | None = None, norm_tag: NormTag | None = None):
        lo = np.asarray(lower, dtype=float).reshape(-1)
        up = np.asarray(upper, dtype=float).reshape(-1)
        if lo.shape != up.shape:
            raise StructuralError("lower and upper must have the same length")
        if np.any(np.isnan(lo)) or np.any(np.isnan(up)) or np.any(lo > up):
            raise StructuralError("need lower <= upper componentwise")
        self.lower, self.upper = lo, up
        self.dim = lo.size
        self.grid = grid
        if grid is not None and grid.size != self.dim:
            raise StructuralError("grid size does not match the number of bounds")
        self.norm_tag = norm_tag or ("weighted_l2" if grid is not None else "euclidean")
        self.finite_dimensional = grid is None
        self._lo_idx = np.flatnonzero(np.isfinite(lo))
        self._up_idx = np.flatnonzero(np.isfinite(up))

    @property
    def default_tol(self) -> float:
        return GRID_TOL if self.grid is not None else ANALYTIC_TOL

    def local_constraints(self, x: Array, d: Array) -> Array:
        up = d[self._up_idx] - (self.upper[self._up_idx] - x[self._up_idx])
        lo = (self.lower[self._lo_idx] - x[self._lo_idx]) - d[self._lo_idx]
        return np.concatenate([up, lo])

    def local_jacobian(self, x: Array, d: Array) -> Array:
        eye = np.eye(self.dim)
        return np.vstack([eye[self._up_idx], -eye[self._lo_idx]])

    def normal_generators(self, x: Array, tol: float | None = None) -> Array:
        tol = _active_tol(tol, self.default_tol)
        x = as_vector(x, self.dim, "point")
        up = np.flatnonzero(np.isfinite(self.upper) & (x >= self.upper - tol))
        lo = np.flatnonzero(np.isfinite(self.lower) & (x <= self.lower + tol))
        rows = np.zeros((up.size + lo.size, self.dim))
        rows[np.arange(up.size), up] = 1.0
        rows[up.size + np.arange(lo.size), lo] = -1.0
        return rows

    def project(self, y: ArrayLike) -> Array:
        return np.clip(np.asarray(y, dtype=float), self.lower, self.upper)

    def distance_from(self, x: Array, d: Array) -> float:
        excess = np.maximum(d - (self.upper - x), 0.0) + np.maximum((self.lower - x) - d, 0.0)
        return self.norm(np.nan_to_num(excess))

    def describe(self) -> dict:
        return {"type": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}


class HalfLineNonPos(Box):
    """K = (-inf, 0]^m; the scalar case is the usual nonpositive half-line."""

    def __init__(self, m: int = 1):
        super().__init__(np.full(m, -np.inf), np.zeros(m))

    def describe(self) -> dict:
        return {"type": "halfline", "m": self.dim}


class BangBangBox(Box):
    """Grid functions with values in [-1, 1], measured in the weighted L1 norm."""

    def __init__(self, grid: Grid):
        super().__init__(-np.ones(grid.size), np.ones(grid.size), grid=grid, norm_tag="weighted_l1")

    def describe(self) -> dict:
        return {"type": "bangbang_box", "grid": self.grid.to_dict()}


class Polyhedron(AdmissibleSet):
    """{x : A x <= b}."""

    def __init__(self, A: ArrayLike, b: ArrayLike):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).reshape(-1)
        if A.shape[0] != b.size:
            raise StructuralError("A and b disagree on the number of rows")
        self.A, self.b = A, b
        self.dim = A.shape[1]

    def local_constraints(self, x: Array, d: Array) -> Array:
        return self.A @ d - (self.b - self.A @ x)

    def local_jacobian(self, x: Array, d: Array) -> Array:
        return self.A

    def normal_generators(self, x: Array, tol: float | None = None) -> Array:
        tol = _active_tol(tol, self.default_tol)
        x = as_vector(x, self.dim, "point")
        slack = self.b - self.A @ x
        scale = 1.0 + np.abs(self.b)
        return self.A[slack <= tol * scale].reshape(-1, self.dim)

    def project(self, y: ArrayLike) -> Array:
        y = np.asarray(y, dtype=float)
        if np.all(self.A @ y <= self.b):
            return y.copy()
        res = optimize.minimize(
            lambda z: 0.5 * np.sum((z - y) ** 2),
            y,
            jac=lambda z: z - y,
            constraints=[{"type": "ineq", "fun": lambda z: self.b - self.A @ z, "jac": lambda z: -self.A}],
            method="SLSQP",
            options={"ftol": 1e-15, "maxiter": 500},
        )
        return res.x

    def describe(self) -> dict:
        return {"type": "polyhedron", "A": self.A.tolist(), "b": self.b.tolist()}


class UnitBall(AdmissibleSet):
    """Closed Euclidean unit ball."""

    def __init__(self, dim: int):
        self.dim = int(dim)

    def local_constraints(self, x: Array, d: Array) -> Array:
        return np.array([(x @ x - 1.0) + 2.0 * (x @ d) + d @ d])

    def local_jacobian(self, x: Array, d: Array) -> Array:
        return 2.0 * (x + d)[None, :]

    def normal_generators(self, x: Array, tol: float | None = None) -> Array:
        tol = _active_tol(tol, self.default_tol)
        x = as_vector(x, self.dim, "point")
        r = np.linalg.norm(x)
        if r >= 1.0 - tol:
            return (x / r)[None, :]
        return np.zeros((0, self.dim))

    def project(self, y: ArrayLike) -> Array:
        y = np.asarray(y, dtype=float)
        return y / max(1.0, float(np.linalg.norm(y)))

    def distance_from(self, x: Array, d: Array) -> float:
        p = x + d
        gap = (x @ x - 1.0) + 2.0 * (x @ d) + d @ d
        return max(0.0, float(gap / (np.linalg.norm(p) + 1.0)))

    def describe(self) -> dict:
        return {"type": "unit_ball", "dim": self.dim}


class PowerEpigraph(AdmissibleSet):
    """{x2 >= |x1|^alpha} (above) or {x2 <= |x1|^alpha} (below) in the plane."""

    def __init__(self, alpha: float = 1.5, sign: Literal["above", "below"] = "above"):
        if not (1.0 < alpha < 2.0):
            raise StructuralError("alpha must lie strictly between 1 and 2")
        if sign not in ("above", "below"):
            raise StructuralError("sign must be 'above' or 'below'")
        self.alpha = float(alpha)
        self.sign = sign
        self.dim = 2
        self.convex = sign == "above"
        self._s = 1.0 if sign == "above" else -1.0

    def power(self, s: ArrayLike) -> Array:
        return np.abs(s) ** self.alpha

    def slope(self, s: float) -> float:
        return float(self.alpha * np.sign(s) * abs(s) ** (self.alpha - 1.0))

    def _power_increment(self, x1: float, d1: float) -> float:
        if x1 == 0.0:
            return abs(d1) ** self.alpha
        if abs(d1) < 0.5 * abs(x1):
            return abs(x1) ** self.alpha * np.expm1(self.alpha * np.log1p(d1 / x1))
        return abs(x1 + d1) ** self.alpha - abs(x1) ** self.alpha

    def local_constraints(self, x: Array, d: Array) -> Array:
        gap = x[1] - abs(x[0]) ** self.alpha
        return np.array([self._s * (self._power_increment(x[0], d[0]) - d[1] - gap)])

    def local_jacobian(self, x: Array, d: Array) -> Array:
        return self._s * np.array([[self.slope(x[0] + d[0]), -1.0]])

    def normal_generators(self, x: Array, tol: float | None = None) -> Array:
        tol = _active_tol(tol, self.default_tol)
        x = as_vector(x, 2, "point")
        if abs(x[1] - abs(x[0]) ** self.alpha) <= tol:
            return self._s * np.array([[self.slope(x[0]), -1.0]])
        return np.zeros((0, 2))

    def project(self, y: ArrayLike) -> Array:
        y = np.asarray(y, dtype=float)
        if self._s * (y[1] - abs(y[0]) ** self.alpha) >= 0:
            return y.copy()
        r = abs(y[1] - abs(y[0]) ** self.alpha)
        f = lambda s: (s - y[0]) ** 2 + (abs(s) ** self.alpha - y[1]) ** 2
        grid = np.linspace(y[0] - r, y[0] + r, 401)
        vals = (grid - y[0]) ** 2 + (np.abs(grid) ** self.alpha - y[1]) ** 2
        k = int(np.argmin(vals))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
        res = optimize.minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-14 * max(r, 1e-300)})
        s = res.x if res.fun <= vals[k] else grid[k]
        return np.array([s, abs(s) ** self.alpha])

    def describe(self) -> dict:
        return {"type": "power_epigraph", "alpha": self.alpha, "sign": self.sign}


class LevelSet(AdmissibleSet):
    """{x : G(x) in K} for a smooth G: R^n -> R^m and a closed convex K.

    ``quadratic=True`` declares G to be a quadratic map, which lets the
    constraint increments be evaluated exactly through the second-order
    Taylor formula. ``zkcq=True`` is the caller's assertion of the
    constraint qualification needed for cone formulas, and ``convex=True``
    declares the set convex.
    """

    def __init__(
        self,
        G: Callable[[Array], ArrayLike],
        jac: Callable[[Array], ArrayLike],
        hess: Callable[[Array], ArrayLike],
        K: AdmissibleSet,
        dim: int,
        zkcq: bool = False,
        quadratic: bool = False,
        convex: bool = False,
    ):
        if not isinstance(K, CONE_TYPES):
            raise StructuralError("K must be HalfLineNonPos, Box, UnitBall or Polyhedron")
        self._G, self._jac, self._hess = G, jac, hess
        self.K = K
        self.dim = int(dim)
        self.zkcq = zkcq
        self.quadratic = quadratic
        self.convex = convex

    def G(self, x: Array) -> Array:
        return np.asarray(self._G(x), dtype=float).reshape(-1)

    def jac(self, x: Array) -> Array:
        return np.asarray(self._jac(x), dtype=float).reshape(self.K.dim, self.dim)

    def hess(self, x: Array) -> Array:
        return np.asarray(self._hess(x), dtype=float).reshape(self.K.dim, self.dim, self.dim)

    def increment(self, x: Array, d: Array) -> Array:
        if self.quadratic:
            return self.jac(x) @ d + 0.5 * np.einsum("kij,i,j->k", self.hess(x), d, d)
        return self.G(x + d) - self.G(x)

    def local_constraints(self, x: Array, d: Array) -> Array:
        return self.K.local_constraints(self.G(x), self.increment(x, d))

    def local_jacobian(self, x: Array, d: Array) -> Array:
        z, dz = self.G(x), self.increment(x, d)
        return self.K.local_jacobian(z, dz) @ self.jac(x + d)

    def normal_generators(self, x: Array, tol: float | None = None) -> Array:
        if not self.zkcq:
            raise RefusalError("level-set cones need an asserted constraint qualification (zkcq=True)")
        x = as_vector(x, self.dim, "point")
        return self.K.normal_generators(self.G(x), tol) @ self.jac(x)

    def zkcq_holds(self, x: ArrayLike, tol: float = 1e-9) -> bool:
        """LP test that G'(x) X - T_K(G(x)) covers every coordinate direction."""
        x = as_vector(x, self.dim, "point")
        Jx = self.jac(x)
        gens = self.K.normal_generators(self.G(x))
        m, n = Jx.shape
        for w in np.vstack([np.eye(m), -np.eye(m)]):
            # variables (v, k): Jx v - k = w, gens k <= 0
            A_eq = np.hstack([Jx, -np.eye(m)])
            A_ub = np.hstack([np.zeros((gens.shape[0], n)), gens]) if gens.size else None
            b_ub = np.zeros(gens.shape[0]) if gens.size else None
            res = optimize.linprog(
                np.zeros(n + m), A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=w, bounds=(None, None), method="highs"
            )
            if res.status != 0:
                return False
        return True

    def project(self, y: ArrayLike) -> Array:
        y = np.asarray(y, dtype=float)
        if self.contains(y):
            return y.copy()
        zeros = np.zeros(self.K.dim)
        res = optimize.minimize(
            lambda z: 0.5 * np.sum((z - y) ** 2),
            y,
            jac=lambda z: z - y,
            constraints=[
                {
                    "type": "ineq",
                    "fun": lambda z: -self.K.local_constraints(zeros, self.G(z)),
                    "jac": lambda z: -self.K.local_jacobian(zeros, self.G(z)) @ self.jac(z),
                }
            ],
            method="SLSQP",
            options={"ftol": 1e-15, "maxiter": 500},
        )
        return res.x

    def describe(self) -> dict:
        return {"type": "level_set", "K": self.K.describe(), "dim": self.dim}


CONE_TYPES = (Box, Polyhedron, UnitBall)


def membership(C: AdmissibleSet, x: ArrayLike, tol: float | None = None) -> bool:
    """True iff x satisfies every defining inequality of C up to ``tol``."""
    return C.contains(x, tol)


def require_feasible(C: AdmissibleSet, x: ArrayLike, tol: float | None = None) -> Array:
    x = as_vector(x, C.dim, "base point")
    if not C.contains(x, tol):
        raise DomainError("base point is not feasible")
    return x

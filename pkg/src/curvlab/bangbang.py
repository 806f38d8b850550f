"""Bang-bang problems over the box {-1 <= x <= 1} in L1.

The point of interest is xbar = -sign(phi) for an adjoint phi with a
nonvanishing gradient on its zero set Z. This module extracts Z, estimates
the level-set constant, evaluates the surface formula for the curvature,
builds recovery strips and checks the L1 Taylor expansion.

Fields live on cell centers. Whenever an integral of a function of phi is
needed, phi is replaced in each cell by its linearization at the center,
which makes band measures and strip integrals exact for linear phi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike
from scipy import interpolate, optimize, spatial

from . import _cellquad as cq
from .curvature import CurvatureValue
from .model import (
    Array,
    AssumptionViolation,
    BangBangBox,
    Grid,
    Objective,
    ResolutionError,
    StructuralError,
    UnsupportedError,
)

GRAD_FLOOR = 1e-6


def _grid_gradient(grid: Grid, values: Array) -> Array:
    V = values.reshape(grid.shape)
    if grid.dim == 1:
        return np.gradient(V, grid.spacing[0], edge_order=2).reshape(-1, 1)
    parts = np.gradient(V, *grid.spacing, edge_order=2)
    return np.stack([p.reshape(-1) for p in parts], axis=1)


# ---------------------------------------------------------------------------
# adjoint fields


@dataclass(frozen=True, eq=False)
class AdjointField:
    """Adjoint values and gradients at cell centers, plus optional callbacks.

    Callbacks take an array of points of shape (N, d); ``phi_fn`` returns
    shape (N,) and ``grad_fn`` shape (N, d).
    """

    grid: Grid
    values: Array
    grads: Array
    phi_fn: Callable[[Array], Array] | None = None
    grad_fn: Callable[[Array], Array] | None = None

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        grads = np.asarray(self.grads, dtype=float).reshape(self.grid.size, self.grid.dim)
        if vals.size != self.grid.size:
            raise StructuralError("adjoint values do not match the grid")
        if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(grads))):
            raise StructuralError("adjoint values must be finite")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "grads", grads)

    @classmethod
    def from_callables(cls, grid: Grid, phi: Callable, grad: Callable | None = None) -> "AdjointField":
        nodes = grid.nodes
        vals = np.asarray(phi(nodes), dtype=float).reshape(-1)
        grads = _grid_gradient(grid, vals) if grad is None else np.asarray(grad(nodes), dtype=float)
        return cls(grid, vals, grads, phi, grad)

    @classmethod
    def from_values(cls, grid: Grid, values: ArrayLike) -> "AdjointField":
        vals = np.asarray(values, dtype=float).reshape(-1)
        return cls(grid, vals, _grid_gradient(grid, vals))

    def scaled(self, factor: float) -> "AdjointField":
        phi = None if self.phi_fn is None else (lambda p, f=self.phi_fn: factor * np.asarray(f(p)))
        grad = None if self.grad_fn is None else (lambda p, f=self.grad_fn: factor * np.asarray(f(p)))
        return AdjointField(self.grid, factor * self.values, factor * self.grads, phi, grad)

    @property
    def xbar(self) -> Array:
        """The bang-bang point -sign(phi) at cell centers."""
        return -np.sign(self.values)

    def xbar_subcell(self) -> Array:
        """Cell averages of -sign(phi); differs from ``xbar`` only on cells cut by Z."""
        a, A, B = self.cell_linear()
        return -cq.mean_sign(a, A, B)

    def cell_linear(self) -> tuple[Array, Array, Array]:
        """Center value and the two uniform widths of the per-cell linearization."""
        h = self.grid.spacing
        A = np.abs(self.grads[:, 0]) * h[0]
        B = np.abs(self.grads[:, 1]) * h[1] if self.grid.dim == 2 else np.zeros_like(A)
        return self.values, A, B

    def _interp(self, data: Array):
        return interpolate.RegularGridInterpolator(
            tuple(self.grid.axes), data.reshape(self.grid.shape + data.shape[1:]), bounds_error=False, fill_value=None
        )

    def value_at(self, pts: ArrayLike) -> Array:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.phi_fn is not None:
            return np.asarray(self.phi_fn(pts), dtype=float).reshape(-1)
        return self._interp(self.values)(pts)

    def grad_at(self, pts: ArrayLike) -> Array:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if pts.shape[0] == 0:
            return np.zeros((0, self.grid.dim))
        if self.grad_fn is not None:
            return np.asarray(self.grad_fn(pts), dtype=float).reshape(-1, self.grid.dim)
        return self._interp(self.grads)(pts).reshape(-1, self.grid.dim)


# ---------------------------------------------------------------------------
# zero set


@dataclass(frozen=True, eq=False)
class SurfaceMeasure:
    """Discrete surface measure on Z: atoms in 1D, segment midpoints in 2D."""

    dim: int
    nodes: Array
    weights: Array
    grad_norm: Array
    normals: Array
    segments: Array | None = None
    density: Array | None = None

    @property
    def size(self) -> int:
        return int(self.weights.size)

    @property
    def length(self) -> float:
        return float(self.weights.sum())

    def with_density(self, g) -> "SurfaceMeasure":
        """Attach g given as a scalar, an array over nodes or a callable on nodes."""
        if callable(g):
            vals = np.asarray(g(self.nodes), dtype=float).reshape(-1) if self.size else np.zeros(0)
        else:
            vals = np.broadcast_to(np.asarray(g, dtype=float), (self.size,)).copy()
        if vals.size != self.size or not np.all(np.isfinite(vals)):
            raise StructuralError("density must be finite with one value per node")
        return replace(self, density=vals)

    def _g(self) -> Array:
        if self.density is None:
            raise StructuralError("surface density is not set")
        return self.density

    def total_variation(self) -> float:
        return float(np.sum(self.weights * np.abs(self._g())))

    def pair(self, v) -> float:
        """<g H|_Z, v> for a callable v on points or an array over nodes."""
        vals = np.asarray(v(self.nodes), dtype=float).reshape(-1) if callable(v) else np.asarray(v, dtype=float)
        return float(np.sum(self.weights * self._g() * vals))

    def to_dict(self) -> dict:
        out = {
            "dim": self.dim,
            "count": self.size,
            "length": self.length,
            "nodes": self.nodes.tolist(),
            "weights": self.weights.tolist(),
            "grad_norm": self.grad_norm.tolist(),
        }
        if self.density is not None:
            out["density"] = self.density.tolist()
        return out


def _roots_1d(f: AdjointField) -> Array:
    xs = f.grid.axes[0]
    v = f.values
    neg = v < 0
    idx = np.flatnonzero(neg[:-1] != neg[1:])
    roots = []
    for i in idx:
        a, b = xs[i], xs[i + 1]
        if f.phi_fn is not None:
            fn = lambda s: float(np.asarray(f.phi_fn(np.array([[s]]))).reshape(-1)[0])
            roots.append(optimize.brentq(fn, a, b, xtol=1e-12, rtol=4 * np.finfo(float).eps))
        else:
            roots.append(a + (b - a) * v[i] / (v[i] - v[i + 1]))
    return np.array(roots, dtype=float).reshape(-1, 1)


def _marching_squares(f: AdjointField) -> tuple[Array, Array]:
    """Segments of the zero contour of the bilinear-free piecewise linear interpolant.

    Returns the segments (m, 2, 2) and the index of the square they came from.
    """
    xs, ys = f.grid.axes
    V = f.values.reshape(f.grid.shape)
    c = [V[:-1, :-1], V[1:, :-1], V[1:, 1:], V[:-1, 1:]]
    X0, Y0 = np.meshgrid(xs[:-1], ys[:-1], indexing="ij")
    X1, Y1 = np.meshgrid(xs[1:], ys[1:], indexing="ij")
    corner = [(X0, Y0), (X1, Y0), (X1, Y1), (X0, Y1)]
    edges = [(0, 1), (1, 2), (3, 2), (0, 3)]
    neg = [ci < 0 for ci in c]
    cross = np.stack([neg[i] != neg[j] for i, j in edges], axis=-1)
    pts = []
    with np.errstate(divide="ignore", invalid="ignore"):
        for i, j in edges:
            t = np.where(neg[i] != neg[j], c[i] / (c[i] - c[j]), 0.0)
            px = corner[i][0] + t * (corner[j][0] - corner[i][0])
            py = corner[i][1] + t * (corner[j][1] - corner[i][1])
            pts.append(np.stack([px, py], axis=-1))
    P = np.stack(pts, axis=2)  # (nx, ny, 4 edges, 2)
    count = cross.sum(axis=-1)
    segs, keys = [], []
    two = np.argwhere(count == 2)
    if two.size:
        cr = cross[two[:, 0], two[:, 1]]
        first = np.argmax(cr, axis=1)
        second = 3 - np.argmax(cr[:, ::-1], axis=1)
        pp = P[two[:, 0], two[:, 1]]
        k = np.arange(len(two))
        segs.append(np.stack([pp[k, first], pp[k, second]], axis=1))
        keys.append(two[:, 0] * V.shape[1] + two[:, 1])
    for i, j in np.argwhere(count == 4):
        center = 0.25 * sum(ci[i, j] for ci in c)
        pp = P[i, j]
        # saddle: the center sign decides which diagonal pair is connected
        pairs = ((0, 1), (2, 3)) if (center < 0) == neg[0][i, j] else ((3, 0), (1, 2))
        for a, b in pairs:
            segs.append(np.stack([pp[a], pp[b]])[None])
            keys.append(np.array([i * V.shape[1] + j]))
    if not segs:
        return np.zeros((0, 2, 2)), np.zeros(0, dtype=int)
    S = np.concatenate(segs)
    K = np.concatenate(keys)
    order = np.argsort(K, kind="stable")
    return S[order], K[order]


def extract_zero_set(f: AdjointField, grad_floor: float = GRAD_FLOOR, project: bool = True) -> SurfaceMeasure:
    """Zero set of phi as a discrete surface measure (density left unset).

    1D: roots in sign-change cells, refined to 1e-12 when a callback exists,
    unit weights. 2D: marching squares on the cell-center lattice with
    segment-length weights at segment midpoints; midpoints are pulled onto
    Z by a few Newton steps when callbacks exist.
    """
    d = f.grid.dim
    segments = None
    if d == 1:
        nodes = _roots_1d(f)
        weights = np.ones(nodes.shape[0])
    else:
        segments, _ = _marching_squares(f)
        lengths = np.linalg.norm(segments[:, 1] - segments[:, 0], axis=1)
        keep = lengths > 0
        segments = segments[keep]
        weights = lengths[keep]
        nodes = segments.mean(axis=1)
        if project and f.phi_fn is not None and f.grad_fn is not None and nodes.size:
            h = float(f.grid.spacing.max())
            z = nodes.copy()
            for _ in range(3):
                g = f.grad_at(z)
                step = (f.value_at(z) / np.maximum(np.sum(g * g, axis=1), 1e-300))[:, None] * g
                z = z - step
            moved = np.linalg.norm(z - nodes, axis=1) < h
            nodes = np.where(moved[:, None], z, nodes)
    grads = f.grad_at(nodes) if nodes.size else np.zeros((0, d))
    gnorm = np.linalg.norm(grads, axis=1)
    if gnorm.size and gnorm.min() < grad_floor:
        raise AssumptionViolation(
            f"gradient of the adjoint is {gnorm.min():.3g} on its zero set, below the floor {grad_floor:g}"
        )
    normals = grads / np.where(gnorm > 0, gnorm, 1.0)[:, None]
    return SurfaceMeasure(d, nodes, weights, gnorm, normals, segments)


# ---------------------------------------------------------------------------
# level-set constant and curvature formula


@dataclass(frozen=True)
class LevelSetConstant:
    s_schedule: tuple[float, ...]
    measures: tuple[float, ...]
    ratios: tuple[float, ...]
    K_estimate: float
    monotone_flag: bool

    def to_dict(self) -> dict:
        return {
            "s_schedule": list(self.s_schedule),
            "measures": list(self.measures),
            "ratios": list(self.ratios),
            "K_estimate": self.K_estimate,
            "monotone_flag": self.monotone_flag,
        }


def band_measure(f: AdjointField, s: float) -> tuple[float, int]:
    """Measure of {|phi| <= s} and the number of cells it touches."""
    a, A, B = f.cell_linear()
    frac = cq.band_fraction(a, A, B, -s, s)
    return float(frac.sum() * f.grid.cell_volume), int(np.count_nonzero(frac > 0))


def level_set_constant(f: AdjointField, s_max: float = 0.05, levels: int = 6, stable_rtol: float = 1e-2) -> LevelSetConstant:
    """Estimate K = 1/4 liminf s / |{|phi| <= s}| on s_j = s_max 2^-j, j = 0..levels.

    The liminf is approximated by the minimum of the last ceil(levels/2)
    ratios; ``monotone_flag`` tells whether those ratios agree within
    ``stable_rtol``.
    """
    if s_max <= 0 or levels < 1:
        raise StructuralError("need s_max > 0 and levels >= 1")
    s = s_max * 2.0 ** -np.arange(levels + 1)
    measures, ratios = [], []
    for j, sj in enumerate(s):
        m, touched = band_measure(f, float(sj))
        if j == levels and 0 < touched < 4:
            raise ResolutionError(f"band |phi| <= {sj:.3g} touches only {touched} cells; refine the grid or raise s_max")
        measures.append(m)
        ratios.append(sj / (4.0 * m) if m > 0 else math.inf)
    tail = ratios[-math.ceil(levels / 2):]
    K = float(min(tail))
    finite_tail = [r for r in tail if math.isfinite(r)]
    if not finite_tail:
        stable = True  # empty bands: phi is bounded away from zero and K is infinite
    else:
        stable = (max(finite_tail) - min(finite_tail)) <= stable_rtol * max(abs(min(finite_tail)), 1e-300)
    return LevelSetConstant(tuple(float(x) for x in s), tuple(measures), tuple(ratios), K, stable)


def resolved_levels(f: AdjointField, s_max: float, levels: int, min_cells: int = 4) -> int:
    """Largest j <= levels whose band |phi| <= s_max 2^-j is empty or touches at least ``min_cells`` cells."""
    for j in range(levels, 0, -1):
        touched = band_measure(f, s_max * 2.0**-j)[1]
        if touched == 0 or touched >= min_cells:
            return j
    raise ResolutionError(f"even the band |phi| <= {s_max / 2:.3g} is unresolved on this grid")


def surface_curvature(sm: SurfaceMeasure) -> float:
    """Curvature of the box along g H|_Z: half the integral of g^2 |grad phi| over Z."""
    g = sm._g()
    return float(0.5 * np.sum(sm.weights * g * g * sm.grad_norm))


# ---------------------------------------------------------------------------
# recovery strips


@dataclass(frozen=True, eq=False)
class StripFunction:
    """Grid function h_t = (2 sign g / t) on the strip, averaged per cell."""

    grid: Grid
    t: float
    values: Array
    centroids: Array
    phi_pairing: float
    xbar: Array

    def l1(self) -> float:
        return float(np.sum(np.abs(self.values)) * self.grid.cell_volume)

    def pair(self, v) -> float:
        """<h_t, v>; callables are evaluated at the strip centroid of each cell."""
        if callable(v):
            active = np.flatnonzero(self.values)
            vals = np.zeros(self.grid.size)
            if active.size:
                vals[active] = np.asarray(v(self.centroids[active]), dtype=float).reshape(-1)
        else:
            vals = np.asarray(v, dtype=float).reshape(-1)
        return float(np.sum(self.values * vals) * self.grid.cell_volume)

    def feasible(self, tol: float = 1e-9) -> bool:
        return bool(np.all(np.abs(self.xbar + self.t * self.values) <= 1.0 + tol))


def _strip_guard(f: AdjointField, sm: SurfaceMeasure, t: float) -> None:
    g = sm._g()
    width = t * float(np.max(np.abs(g))) / 2.0 if g.size else 0.0
    lo = np.array([b[0] for b in f.grid.bounds])
    hi = np.array([b[1] for b in f.grid.bounds])
    room = float(np.min(np.minimum(sm.nodes - lo, hi - sm.nodes)))
    if width >= room:
        raise ResolutionError(f"t = {t:g} too large: strip of width {width:.3g} leaves the domain")
    if sm.dim == 1 and sm.size > 1:
        gap = float(np.min(np.diff(np.sort(sm.nodes[:, 0]))))
        if width >= gap / 2:
            raise ResolutionError(f"t = {t:g} too large: neighbouring strips overlap")


def recovery_strip_sequence(f: AdjointField, sm: SurfaceMeasure, t: float) -> StripFunction:
    """Recovery strip for the measure g H|_Z at step t.

    The strip sits on the side of Z where phi has the sign of g and has
    normal width t |g| / 2. Each cell takes the density of its nearest
    surface node; the cell fraction inside the band 0 <= sign(g) phi <=
    t |g| |grad phi| / 2 is computed from the linearized phi, so xbar + t h_t
    stays feasible against the sub-cell xbar.
    """
    if t <= 0:
        raise StructuralError("t must be positive")
    g_nodes = sm._g()
    n = f.grid.size
    xbar = f.xbar_subcell()
    if sm.size == 0 or not np.any(g_nodes):
        return StripFunction(f.grid, t, np.zeros(n), f.grid.nodes, 0.0, xbar)
    _strip_guard(f, sm, t)
    cells = f.grid.nodes
    _, near = spatial.cKDTree(sm.nodes).query(cells)
    g = g_nodes[near]
    thresh = t * np.abs(g) * sm.grad_norm[near] / 2.0
    sgn = np.sign(g)
    lo = np.where(sgn > 0, 0.0, -thresh)
    hi = np.where(sgn > 0, thresh, 0.0)
    a, A, B = f.cell_linear()
    frac = np.where(sgn != 0, cq.band_fraction(a, A, B, lo, hi), 0.0)
    moment = np.where(sgn != 0, cq.band_moment(a, A, B, lo, hi), 0.0)
    values = (2.0 * sgn / t) * frac
    # centroid of the strip part of each cell, offset along the gradient
    gsq = np.sum(f.grads**2, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.where((frac > 0) & (gsq > 0), (moment - a * frac) / (frac * gsq), 0.0)
    centroids = cells + shift[:, None] * f.grads
    phi_pair = float(np.sum((2.0 * sgn / t) * moment) * f.grid.cell_volume)
    strip = StripFunction(f.grid, t, values, centroids, phi_pair, xbar)
    if not strip.feasible():
        raise ResolutionError(f"strip at t = {t:g} is not feasible on this grid")
    return strip


@dataclass(frozen=True)
class RecoveryReport:
    t_schedule: tuple[float, ...]
    pairings: tuple[tuple[float, ...], ...]
    l1_norms: tuple[float, ...]
    curvatures: tuple[float, ...]
    pairing_targets: tuple[float, ...]
    l1_target: float
    curvature_target: float
    rates: dict

    @staticmethod
    def _rel(value: float, target: float) -> float:
        return abs(value - target) / abs(target) if target != 0 else abs(value)

    def errors(self, i: int) -> dict:
        return {
            "pairing": max((self._rel(v, w) for v, w in zip(self.pairings[i], self.pairing_targets)), default=0.0),
            "l1": self._rel(self.l1_norms[i], self.l1_target),
            "curvature": self._rel(self.curvatures[i], self.curvature_target),
        }

    def to_dict(self) -> dict:
        return {
            "t_schedule": list(self.t_schedule),
            "pairings": [list(p) for p in self.pairings],
            "l1_norms": list(self.l1_norms),
            "curvatures": list(self.curvatures),
            "targets": {
                "pairing": list(self.pairing_targets),
                "l1": self.l1_target,
                "curvature": self.curvature_target,
            },
            "errors": [self.errors(i) for i in range(len(self.t_schedule))],
            "rates": self.rates,
        }


def _rate(ts: Sequence[float], errs: Sequence[float]) -> float:
    pts = [(math.log(t), math.log(e)) for t, e in zip(ts, errs) if e > 1e-14]
    if len(pts) < 2:
        return math.nan
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


def verify_recovery_limits(
    f: AdjointField, sm: SurfaceMeasure, t_schedule: Sequence[float], test_functions: Sequence[Callable]
) -> RecoveryReport:
    """Tabulate the three strip limits against their targets.

    For each t: <h_t, v> against <g H|_Z, v>, the L1 norm of h_t against the
    total variation of g, and <phi, 2 h_t / t> against the surface formula.
    Rates are log-log slopes of the errors in t.
    """
    ts = tuple(float(t) for t in t_schedule)
    pair_t = tuple(sm.pair(v) for v in test_functions)
    l1_t = sm.total_variation()
    curv_t = surface_curvature(sm)
    pairings, l1s, curvs = [], [], []
    for t in ts:
        strip = recovery_strip_sequence(f, sm, t)
        pairings.append(tuple(strip.pair(v) for v in test_functions))
        l1s.append(strip.l1())
        curvs.append(2.0 * strip.phi_pairing / t)
    rep = RecoveryReport(ts, tuple(pairings), tuple(l1s), tuple(curvs), pair_t, l1_t, curv_t, {})
    errs = [rep.errors(i) for i in range(len(ts))]
    rates = {k: _rate(ts, [e[k] for e in errs]) for k in ("pairing", "l1", "curvature")}
    return replace(rep, rates=rates)


def measure_direction_regimes(f: AdjointField, sm: SurfaceMeasure, t: float = 1e-3) -> tuple[CurvatureValue, CurvatureValue]:
    """Curvature along g H|_Z with shrinking versus relaxed corrections.

    A surface measure is no L1 function, so corrections r with t r -> 0 in
    norm cannot reach it and the shrinking regime gives +infinity whenever
    g is nonzero. The relaxed regime is the recovery-strip value at step t.
    """
    g = sm._g()
    if sm.size == 0 or not np.any(g):
        zero = CurvatureValue("finite", 0.0, "surface_formula")
        return zero, zero
    strong = CurvatureValue("plus_infinity", math.inf, "shrinking_corrections", note="measure direction outside L1")
    strip = recovery_strip_sequence(f, sm, t)
    relaxed = CurvatureValue("finite", 2.0 * strip.phi_pairing / t, "recovery_strip", note=f"t={t:g}")
    return strong, relaxed


# ---------------------------------------------------------------------------
# L1 expansion and the fundamental estimate


@dataclass(frozen=True)
class TaylorReport:
    t_schedule: tuple[float, ...]
    residuals: tuple[float, ...]
    base: float
    linear: float
    surface: float

    @property
    def max_abs_residual(self) -> float:
        return float(max(abs(r) for r in self.residuals))

    def to_dict(self) -> dict:
        return {
            "t_schedule": list(self.t_schedule),
            "residuals": list(self.residuals),
            "base": self.base,
            "linear": self.linear,
            "surface": self.surface,
        }


def _grid_values(f: AdjointField, v) -> tuple[Array, Array]:
    if callable(v):
        vals = np.asarray(v(f.grid.nodes), dtype=float).reshape(-1)
    else:
        vals = np.asarray(v, dtype=float).reshape(-1)
        if vals.size == 1:
            vals = np.full(f.grid.size, float(vals[0]))
    if vals.size != f.grid.size:
        raise StructuralError("grid function does not match the grid")
    return vals, _grid_gradient(f.grid, vals)


def _xbar_pairing(f: AdjointField, v: Array, dv: Array) -> float:
    """Integral of -sign(phi) v with both factors linear in each cell."""
    a, A, B = f.cell_linear()
    ms = cq.mean_sign(a, A, B)
    if f.grid.dim == 1:
        p = f.grads[:, 0]
        q = dv[:, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            # E[sign(Y) u] with u = (Y - a) / p
            su = np.where(p != 0, (cq.mean_abs(a, A) - a * ms) / p, 0.0)
        cell = v * ms + q * su
    else:
        cell = v * ms
    return float(-np.sum(cell) * f.grid.cell_volume)


def l1_taylor_check(f: AdjointField, v, t_schedule: Sequence[float], sm: SurfaceMeasure | None = None) -> TaylorReport:
    """Residuals of the second-order expansion of t -> |-phi + t v|_L1.

    residual(t) = (|-phi + t v|_1 - |phi|_1 - t <xbar, v> - t^2 S) / t^2 with
    S the integral of v^2 / |grad phi| over Z. Cell integrals are exact for
    phi and v linear per cell.
    """
    sm = sm if sm is not None else extract_zero_set(f)
    vals, dv = _grid_values(f, v)
    h = f.grid.spacing
    vol = f.grid.cell_volume
    a, A, B = f.cell_linear()
    base = float(np.sum(cq.mean_abs(a, A, B)) * vol)
    lin = _xbar_pairing(f, vals, dv)
    if sm.size:
        vz = np.asarray(v(sm.nodes), dtype=float).reshape(-1) if callable(v) else f._interp(vals)(sm.nodes)
        surf = float(np.sum(sm.weights * vz**2 / sm.grad_norm))
    else:
        surf = 0.0
    res = []
    for t in t_schedule:
        slope = -f.grads + t * dv
        At = np.abs(slope[:, 0]) * h[0]
        Bt = np.abs(slope[:, 1]) * h[1] if f.grid.dim == 2 else np.zeros_like(At)
        total = float(np.sum(cq.mean_abs(-a + t * vals, At, Bt)) * vol)
        res.append((total - base - t * lin - t * t * surf) / (t * t))
    return TaylorReport(tuple(float(t) for t in t_schedule), tuple(res), base, lin, surf)


@dataclass(frozen=True)
class FundamentalReport:
    ok: bool
    min_value: float
    witness: tuple[int, float] | None = None

    def to_dict(self) -> dict:
        return {"ok": self.ok, "min_value": self.min_value, "witness": self.witness}


def fundamental_estimate_check(
    f: AdjointField,
    sm: SurfaceMeasure,
    v_samples: Sequence,
    alpha_samples: Sequence[float],
    Q: float,
    tol: float = 1e-8,
) -> FundamentalReport:
    """Check a^2 Q / 2 - a <h, v> + int_Z v^2 / |grad phi| >= 0 for h = g H|_Z.

    Besides the given a, the minimizing a = <h, v> / Q is always tried.
    """
    worst, witness = math.inf, None
    for i, v in enumerate(v_samples):
        vz = np.asarray(v(sm.nodes), dtype=float).reshape(-1) if callable(v) else np.asarray(v, dtype=float)
        hv = sm.pair(vz)
        S = float(np.sum(sm.weights * vz**2 / sm.grad_norm))
        alphas = list(alpha_samples) + ([hv / Q] if Q > 0 else [])
        for al in alphas:
            val = 0.5 * al * al * Q - al * hv + S
            if val < worst:
                worst = val
                if val < -tol and witness is None:
                    witness = (i, float(al))
    return FundamentalReport(worst >= -tol, float(worst), witness)


# ---------------------------------------------------------------------------
# objectives with a kernel second derivative


@dataclass(frozen=True)
class Kernel:
    """Continuous kernel k(s, t) for the second derivative on measures."""

    fn: Callable[[Array, Array], Array]

    def matrix(self, s: Array, t: Array) -> Array:
        return np.asarray(self.fn(s, t), dtype=float)

    def scaled(self, factor: float) -> "Kernel":
        return Kernel(lambda s, t, k=self.fn: factor * np.asarray(k(s, t)))


@dataclass(frozen=True)
class SeparableKernel(Kernel):
    """k(s, t) = coeff * eta(s) * eta(t)."""

    coeff: float = 0.0
    eta: Callable[[Array], Array] | None = None

    @classmethod
    def make(cls, coeff: float, eta: Callable[[Array], Array]) -> "SeparableKernel":
        def fn(s, t):
            return coeff * np.outer(np.asarray(eta(s)).reshape(-1), np.asarray(eta(t)).reshape(-1))

        return cls(fn, float(coeff), eta)

    def scaled(self, factor: float) -> "SeparableKernel":
        return SeparableKernel.make(factor * self.coeff, self.eta)


_DENSE_LIMIT = 4096


@dataclass(frozen=True, eq=False)
class BangBangObjective(Objective):
    """J(x) = <phi, x> + 1/2 k[x - xbar, x - xbar] on the grid.

    The pairing uses cell volumes, so the coordinate gradient at xbar is
    phi times the cell volume. ``hess_surface`` evaluates the kernel form
    on a surface measure.
    """

    field: AdjointField | None = None
    kernel: Kernel | None = None

    @classmethod
    def build(cls, f: AdjointField, kernel: Kernel | None = None) -> "BangBangObjective":
        vol = f.grid.cell_volume
        nodes = f.grid.nodes
        xbar = f.xbar
        lin = f.values * vol
        if kernel is None:
            def form(x, a, b):
                return 0.0

            def value(x):
                return float(lin @ x)

            def grad(x):
                return lin.copy()

        elif isinstance(kernel, SeparableKernel):
            w = np.asarray(kernel.eta(nodes), dtype=float).reshape(-1) * vol
            c = kernel.coeff

            def form(x, a, b):
                return float(c * (w @ a) * (w @ b))

            def value(x):
                d = x - xbar
                return float(lin @ x + 0.5 * c * (w @ d) ** 2)

            def grad(x):
                return lin + c * (w @ (x - xbar)) * w

        else:
            if f.grid.size > _DENSE_LIMIT:
                raise UnsupportedError("general kernels need a dense matrix; use a separable kernel on large grids")
            M = kernel.matrix(nodes, nodes) * vol * vol
            M = 0.5 * (M + M.T)

            def form(x, a, b):
                return float(a @ M @ b)

            def value(x):
                d = x - xbar
                return float(lin @ x + 0.5 * d @ M @ d)

            def grad(x):
                return lin + M @ (x - xbar)

        return cls(value, grad, form, "custom", None, f, kernel)

    def hess_surface(self, sm: SurfaceMeasure, other: SurfaceMeasure | None = None) -> float:
        other = other or sm
        if self.kernel is None or sm.size == 0 or other.size == 0:
            return 0.0
        mu = sm.weights * sm._g()
        nu = other.weights * other._g()
        return float(mu @ self.kernel.matrix(sm.nodes, other.nodes) @ nu)

    def scaled(self, factor: float) -> "BangBangObjective":
        kern = None if self.kernel is None else self.kernel.scaled(factor)
        return BangBangObjective.build(self.field.scaled(factor), kern)


# ---------------------------------------------------------------------------
# strip sampler for growth


def _flip(x: Array, target: Array, order: Array, mass: Array, rho: float, amp: float) -> Array:
    """Move x toward target along ``order`` until the L1 change reaches rho."""
    u = x.copy()
    m = amp * mass[order]
    cum = np.cumsum(m)
    k = int(np.searchsorted(cum, rho, side="right"))
    idx = order[:k]
    u[idx] += amp * (target[idx] - x[idx])
    if k < order.size:
        rest = rho - (cum[k - 1] if k else 0.0)
        j = order[k]
        if mass[j] > 0:
            u[j] += amp * min(rest / (amp * mass[j]), 1.0) * (target[j] - x[j])
    return u


def strip_points(C: BangBangBox, x: Array, grad: Array, eps: float, count: int, rng: np.random.Generator) -> list:
    """Feasible points near a bang-bang x built by flipping level bands of phi.

    Bands are filled in order of a key so that the L1 distance is a chosen
    fraction of eps: centered bands {|phi| <= s}, one-sided bands on either
    side of Z, asymmetric bands and, in 2D, bands localized around a point
    of Z. Some samples flip only part of the way.
    """
    grid = C.grid
    vol = grid.cell_volume
    phi = np.asarray(grad, dtype=float) / vol
    target = np.where(phi > 0, 1.0, np.where(phi < 0, -1.0, x))
    mass = np.abs(target - x) * vol
    keys = {
        "centered": np.abs(phi),
        "one_sided_pos": np.where(phi > 0, phi, np.inf),
        "one_sided_neg": np.where(phi < 0, -phi, np.inf),
    }
    orders = {}
    for tag, key in keys.items():
        o = np.argsort(key, kind="stable")
        orders[tag] = o[np.isfinite(key[o])]
    tags = ["centered", "one_sided_pos", "one_sided_neg", "asymmetric"]
    if grid.dim == 2:
        tags.append("localized")
        nodes = grid.nodes
    out = []
    for i in range(count):
        tag = tags[i % len(tags)]
        rho = eps * rng.uniform(0.3, 1.0)
        amp = 1.0 if (i // len(tags)) % 2 == 0 else rng.uniform(0.3, 1.0)
        if tag == "asymmetric":
            beta = math.exp(rng.uniform(-math.log(4.0), math.log(4.0)))
            order = np.argsort(np.where(phi > 0, phi, -beta * phi), kind="stable")
        elif tag == "localized":
            anchor = nodes[orders["centered"][rng.integers(0, min(64, orders["centered"].size))]]
            spread = float(rng.uniform(0.5, 4.0))
            order = np.argsort(np.abs(phi) + spread * np.sum((nodes - anchor) ** 2, axis=1), kind="stable")
        else:
            order = orders[tag]
        if order.size == 0:
            continue
        out.append((_flip(x, target, order, mass, rho, amp), tag))
    return out


# ---------------------------------------------------------------------------
# no-gap check


@dataclass(frozen=True)
class BangBangConfig:
    s_max: float = 0.05
    levels: int = 6
    growth: "GrowthConfig | None" = None
    ssc_tol: float = 1e-10
    snc_tol: float = 1e-6


def bangbang_no_gap(
    f: AdjointField,
    J: BangBangObjective,
    g_samples: Sequence,
    cfg: BangBangConfig | None = None,
) -> SOCReport:
    """Explicit second-order check at xbar = -sign(phi) over surface densities.

    For each density g the value 1/2 int g^2 |grad phi| + J''(xbar)(g H|_Z)^2
    is tested for positivity and compared with sampled L1 growth. When the
    level-set constant is not positive only the necessary condition is
    meaningful and the SSC result is marked advisory.
    """
    cfg = cfg or BangBangConfig()
    if not hasattr(J, "hess_surface"):
        raise UnsupportedError("the objective needs a kernel second derivative to act on surface measures")
    C = BangBangBox(f.grid)
    x = f.xbar
    gcfg = cfg.growth or GrowthConfig(sampler="strip")
    fonc = fonc_check(C, J, x)
    sm = extract_zero_set(f)
    levels = resolved_levels(f, cfg.s_max, cfg.levels)
    lsc = level_set_constant(f, cfg.s_max, levels)
    diag = {
        "level_set": lsc.to_dict(),
        "levels_used": levels,
        "zero_set_length": sm.length,
        "zero_set_nodes": sm.size,
    }
    if not fonc.holds:
        growth = growth_sample(C, J, x, gcfg)
        verdict, details = render_verdict(fonc, None, (), None, growth, cfg.snc_tol)
        return SOCReport(fonc, None, (), (), None, growth, verdict, details, diag)
    first = growth_sample(C, J, x, gcfg, first_order=True)
    if first.sample_count and first.fitted_c > 0 and lsc.K_estimate > 0:
        ndc = NdcResult("c", "first-order growth along level bands", fitted_c=first.fitted_c)
    else:
        ndc = NdcResult(None, "level-set constant or first-order growth not positive")
    growth = growth_sample(C, J, x, gcfg)
    c = growth.fitted_c if growth.sample_count and growth.fitted_c > 0 else 0.0
    curv, snc, values = [], [], []
    witness = None
    for g in g_samples:
        smg = sm.with_density(g)
        q = surface_curvature(smg)
        hess = J.hess_surface(smg)
        size = smg.total_variation()
        cv = CurvatureValue.from_float(q, "surface_formula")
        curv.append(cv)
        r = q + hess - c * size**2
        snc.append(SncResidual(smg.density.copy(), cv, hess, r, "ok" if r >= -cfg.snc_tol else "violated"))
        if size > 0:
            values.append((q + hess) / size**2)
            if not values[-1] > cfg.ssc_tol and witness is None:
                witness = smg.density / size
    necessary_only = lsc.K_estimate <= 0
    note = "level-set constant not positive: necessary condition only" if necessary_only else ""
    if not values and not note:
        note = "no nonzero density on Z; holds vacuously"
    ssc = SscResult(witness is None, witness, tuple(values), necessary_only or not ndc.verified, note)
    verdict, details = render_verdict(fonc, ndc, snc, ssc, growth, cfg.snc_tol)
    diag.update({"snc_constant": c, "densities": len(snc)})
    return SOCReport(fonc, ndc, tuple(curv), tuple(snc), ssc, growth, verdict, details, diag)


from .soc import (  # noqa: E402  (soc imports this module lazily)
    GrowthConfig,
    NdcResult,
    SncResidual,
    SOCReport,
    SscResult,
    fonc_check,
    growth_sample,
    render_verdict,
)

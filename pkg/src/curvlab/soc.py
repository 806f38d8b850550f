"""First- and second-order optimality checks and the no-gap verdict.

The second-order checks quantify over all critical directions; here they
run over a deterministic scan of directions, and quadratic growth is
checked by sampling feasible points. Verdicts are therefore statements
at sample resolution, never proofs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

import numpy as np
from numpy.typing import ArrayLike

from .cones import (
    _unit_rows,
    check_query,
    critical_directions,
    normal_cone_contains,
    project_onto_cone,
    tangent_projection,
)
from .curvature import (
    BruteForceConfig,
    CurvatureValue,
    curvature_brute_force,
    curvature_closed_form,
    supports_closed_form,
)
from .model import (
    AdmissibleSet,
    Array,
    BangBangBox,
    CurvlabError,
    Objective,
    PowerEpigraph,
    as_vector,
)

Verdict = Literal["no_gap_consistent", "inconsistent", "inconclusive"]
CurvatureMethod = Literal["auto", "closed_form", "brute_force"]


# ---------------------------------------------------------------------------
# result records


@dataclass(frozen=True)
class FoncResult:
    holds: bool
    witness: Array | None = None
    slope: float = 0.0

    def to_dict(self) -> dict:
        out = {"holds": self.holds}
        if self.witness is not None:
            out["witness"] = self.witness.tolist()
            out["slope"] = self.slope
        return out


@dataclass(frozen=True)
class NdcResult:
    established_via: str | None
    detail: str
    min_eigenvalue: float | None = None
    fitted_c: float | None = None

    @property
    def verified(self) -> bool:
        return self.established_via is not None

    def to_dict(self) -> dict:
        out = {"established_via": self.established_via or "unverified", "detail": self.detail}
        if self.min_eigenvalue is not None:
            out["min_eigenvalue"] = self.min_eigenvalue
        if self.fitted_c is not None:
            out["fitted_c"] = self.fitted_c
        return out


@dataclass(frozen=True)
class SncResidual:
    direction: Array
    curvature: CurvatureValue
    hessian: float
    residual: float
    status: Literal["ok", "violated", "inconclusive"]

    def to_dict(self) -> dict:
        r = self.residual
        return {
            "direction": self.direction.tolist(),
            "curvature": self.curvature.label(),
            "hessian": self.hessian,
            "residual": r if math.isfinite(r) else ("+infinity" if r > 0 else ("-infinity" if r < 0 else "nan")),
            "status": self.status,
        }


@dataclass(frozen=True)
class SscResult:
    holds: bool | None
    witness: Array | None = None
    values: tuple[float, ...] = ()
    advisory: bool = False
    note: str = ""

    def to_dict(self) -> dict:
        out: dict = {"holds": self.holds, "advisory": self.advisory}
        if self.witness is not None:
            out["witness"] = self.witness.tolist()
        out["values"] = [_json_float(v) for v in self.values]
        if self.note:
            out["note"] = self.note
        return out


@dataclass(frozen=True)
class GrowthSample:
    radius: float
    distance: float
    ratio: float
    tag: str


@dataclass(frozen=True)
class GrowthReport:
    radii: tuple[float, ...]
    samples: tuple[GrowthSample, ...]
    fitted_c: float
    raw_min: float
    epsilon_used: float
    sample_count: int
    seed: int
    notes: tuple[str, ...] = ()

    @property
    def ratios(self) -> Array:
        return np.array([s.ratio for s in self.samples])

    def scaled(self, factor: float) -> "GrowthReport":
        samples = tuple(replace(s, ratio=factor * s.ratio) for s in self.samples)
        return replace(self, samples=samples, fitted_c=factor * self.fitted_c, raw_min=factor * self.raw_min)

    def to_dict(self) -> dict:
        return {
            "radii": list(self.radii),
            "fitted_c": _json_float(self.fitted_c),
            "raw_min": _json_float(self.raw_min),
            "epsilon_used": self.epsilon_used,
            "sample_count": self.sample_count,
            "seed": self.seed,
            "notes": list(self.notes),
        }

    def csv_rows(self) -> list[tuple[float, float, float, str]]:
        return [(s.radius, s.distance, s.ratio, s.tag) for s in self.samples]


@dataclass(frozen=True)
class SOCReport:
    fonc: FoncResult | None
    ndc: NdcResult | None
    curvature: tuple[CurvatureValue, ...]
    snc: tuple[SncResidual, ...]
    ssc: SscResult | None
    growth: GrowthReport | None
    verdict: Verdict
    details: str
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "fonc": None if self.fonc is None else self.fonc.to_dict(),
            "ndc": None if self.ndc is None else self.ndc.to_dict(),
            "curvature": [c.to_dict() for c in self.curvature],
            "snc": [s.to_dict() for s in self.snc],
            "ssc": None if self.ssc is None else self.ssc.to_dict(),
            "growth": None if self.growth is None else self.growth.to_dict(),
            "verdict": self.verdict,
            "details": self.details,
            "diagnostics": self.diagnostics,
        }


def _json_float(v: float) -> float | str:
    if math.isfinite(v):
        return float(v)
    if math.isnan(v):
        return "nan"
    return "+infinity" if v > 0 else "-infinity"


# ---------------------------------------------------------------------------
# first order and non-degeneracy


def fonc_check(C: AdmissibleSet, J: Objective, xbar: ArrayLike) -> FoncResult:
    """J'(xbar) in -N_C(xbar); on failure, a tangent descent direction."""
    x = as_vector(xbar, C.dim, "point")
    if not C.contains(x):
        raise CurvlabError("point is not feasible")
    g = as_vector(J.grad(x), C.dim, "gradient")
    if normal_cone_contains(C, x, -g):
        return FoncResult(True)
    w = tangent_projection(C, x, -g)
    w = w / max(C.norm(w), 1e-300)
    return FoncResult(False, w, float(g @ w))


def _min_eigenvalue(H: Array, seed: int = 0, iters: int = 500) -> float:
    """Smallest eigenvalue of a symmetric matrix by power iteration on a shift."""
    n = H.shape[0]
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    top = 0.0
    for _ in range(iters):
        w = H @ v
        top = float(np.linalg.norm(w))
        if top == 0.0:
            return 0.0
        v = w / top
    shift = abs(top) * 1.01 + 1e-12
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    mu = 0.0
    for _ in range(iters):
        w = shift * v - H @ v
        mu = float(v @ w)
        v = w / np.linalg.norm(w)
    return shift - float(v @ (shift * v - H @ v))


def _metric_weights(C: AdmissibleSet) -> Array:
    if C.grid is None:
        return np.ones(C.dim)
    return C.grid.volumes


def ndc_check(
    C: AdmissibleSet,
    J: Objective,
    xbar: ArrayLike,
    growth: "GrowthConfig | None" = None,
) -> NdcResult:
    """Sufficient criteria for the non-degeneracy condition.

    Finite dimension settles it outright. On grids, ellipticity of J'' in
    the norm of X is tried first, then first-order growth of the linear
    term. The Legendre-form criterion is never claimed: on a grid it holds
    for every form, so a check would be vacuous.
    """
    x = as_vector(xbar, C.dim, "point")
    if C.finite_dimensional:
        return NdcResult("d", "finite-dimensional space")
    lam = None
    if C.norm_tag != "weighted_l1":
        # in L1 the second derivative is never elliptic on a fine grid, skip (a)
        W = _metric_weights(C)
        H = J.hessian_matrix(x)
        lam = _min_eigenvalue(H / np.sqrt(np.outer(W, W)))
        if C.convex and lam > 1e-10:
            return NdcResult("a", "second derivative is elliptic", min_eigenvalue=lam)
    cfg = growth or GrowthConfig()
    rep = growth_sample(C, J, x, cfg, first_order=True)
    if rep.sample_count and rep.fitted_c > 0:
        return NdcResult("c", "first-order growth of the linear term", min_eigenvalue=lam, fitted_c=rep.fitted_c)
    return NdcResult(None, "no sufficient criterion could be established", min_eigenvalue=lam)


# ---------------------------------------------------------------------------
# second order


def evaluate_curvature(
    C: AdmissibleSet,
    x: Array,
    phi: Array,
    h: Array,
    method: CurvatureMethod = "auto",
    brute: BruteForceConfig | None = None,
) -> CurvatureValue:
    if method == "closed_form" or (method == "auto" and supports_closed_form(C)):
        return curvature_closed_form(C, x, phi, h)
    return curvature_brute_force(C, x, phi, h, brute)


def _residual_status(r: float, tol: float) -> str:
    if math.isnan(r):
        return "inconclusive"
    return "ok" if r >= -tol else "violated"


def snc_scan(
    C: AdmissibleSet,
    J: Objective,
    xbar: ArrayLike,
    c: float,
    directions: Sequence[ArrayLike],
    curvature_method: CurvatureMethod = "auto",
    brute: BruteForceConfig | None = None,
    curvatures: Sequence[CurvatureValue] | None = None,
    tol: float = 1e-6,
) -> list[SncResidual]:
    """Residuals Q(h) + J''(xbar)[h, h] - c |h|^2 over the given directions."""
    x = as_vector(xbar, C.dim, "point")
    phi = as_vector(J.grad(x), C.dim, "gradient")
    out = []
    for i, h in enumerate(directions):
        h = as_vector(h, C.dim, "direction")
        if np.linalg.norm(h) == 0.0:
            q = CurvatureValue("finite", 0.0, "zero_direction")
        elif curvatures is not None:
            q = curvatures[i]
        else:
            q = evaluate_curvature(C, x, phi, h, curvature_method, brute)
        hess = float(J.hess_form(x, h, h))
        if q.kind == "plus_infinity":
            r = math.inf
        elif q.kind == "minus_infinity":
            r = -math.inf
        elif q.kind == "unresolved":
            r = math.nan
        else:
            r = q.value + hess - c * C.norm(h) ** 2
        out.append(SncResidual(h, q, hess, r, _residual_status(r, tol)))
    return out


def ssc_check(
    C: AdmissibleSet,
    J: Objective,
    xbar: ArrayLike,
    directions: Sequence[ArrayLike],
    curvature_method: CurvatureMethod = "auto",
    brute: BruteForceConfig | None = None,
    ndc: NdcResult | None = None,
    curvatures: Sequence[CurvatureValue] | None = None,
    tol: float = 1e-10,
) -> SscResult:
    """Strict positivity of Q(h) + J''(xbar)[h, h] on unit critical directions."""
    x = as_vector(xbar, C.dim, "point")
    phi = as_vector(J.grad(x), C.dim, "gradient")
    advisory = ndc is None or not ndc.verified
    values = []
    for i, h in enumerate(directions):
        h = as_vector(h, C.dim, "direction")
        size = C.norm(h)
        if size == 0.0:
            continue
        q = curvatures[i] if curvatures is not None else evaluate_curvature(C, x, phi, h, curvature_method, brute)
        q_unit = q.value / size**2 if q.kind == "finite" else q.value
        if q.kind == "unresolved":
            return SscResult(None, h / size, tuple(values), advisory, "curvature unresolved")
        val = q_unit + float(J.hess_form(x, h, h)) / size**2
        values.append(val)
        if not val > tol:
            return SscResult(False, h / size, tuple(values), advisory)
    note = "no critical direction sampled; holds vacuously" if not values else ""
    return SscResult(True, None, tuple(values), advisory, note)


# ---------------------------------------------------------------------------
# growth sampling


@dataclass(frozen=True)
class GrowthConfig:
    eps_schedule: tuple[float, ...] = tuple(0.1 * 2.0 ** -np.arange(6))
    samples_per_radius: int = 64
    sampler: str | None = None
    seed: int = 0
    eps_max: float | None = None
    trim: float = 0.01


def _trimmed_min(ratios: Array, trim: float) -> float:
    if ratios.size == 0:
        return math.nan
    s = np.sort(ratios)
    drop = int(math.floor(trim * s.size))
    return float(s[min(drop, s.size - 1)])


def _projection_points(C: AdmissibleSet, x: Array, eps: float, count: int, rng, rays: Sequence[Array]) -> list:
    pts = []
    for _ in range(count):
        u = rng.standard_normal(C.dim)
        u /= max(C.norm(u), 1e-300)
        pts.append((C.project(x + eps * rng.random() ** (1.0 / max(C.dim, 1)) * u), "projection"))
    G = C.normal_generators(x)
    for _ in range(max(count // 4, 1)):
        u = project_onto_cone(_unit_rows(G), rng.standard_normal(C.dim))
        size = C.norm(u)
        if size > 0:
            pts.append((C.project(x + eps * u / size), "tangent"))
    for h in rays:
        pts.append((C.project(x + eps * h / C.norm(h)), "critical_ray"))
    return pts


def _graph_points(C: PowerEpigraph, x: Array, eps: float, count: int, rng) -> list:
    s_sign = 1.0 if C.sign == "above" else -1.0
    pts = []
    for i in range(count):
        s = x[0] + eps * rng.uniform(-1.0, 1.0)
        base = abs(s) ** C.alpha
        lift = 0.0 if i % 2 == 0 else s_sign * eps * rng.random()
        pts.append((np.array([s, base + lift]), "graph"))
    return pts


def growth_sample(
    C: AdmissibleSet,
    J: Objective,
    xbar: ArrayLike,
    cfg: GrowthConfig | None = None,
    directions: Sequence[Array] = (),
    first_order: bool = False,
) -> GrowthReport:
    """Sample ratios 2 (J(x) - J(xbar)) / |x - xbar|^2 at feasible x near xbar.

    ``first_order=True`` samples 2 <J'(xbar), x - xbar> / |x - xbar|^2
    instead, which is the quantity behind the first-order growth criterion.
    """
    cfg = cfg or GrowthConfig()
    x = as_vector(xbar, C.dim, "point")
    sampler = cfg.sampler or ("strip" if isinstance(C, BangBangBox) else "graph" if isinstance(C, PowerEpigraph) else "projection")
    eps_max = cfg.eps_max if cfg.eps_max is not None else max(cfg.eps_schedule)
    J0 = J.value(x)
    g = np.asarray(J.grad(x), dtype=float)
    if sampler == "strip":
        from .bangbang import strip_points

        def generate(eps, rng):
            return strip_points(C, x, g, eps, cfg.samples_per_radius, rng)

    elif sampler == "graph":

        def generate(eps, rng):
            return _graph_points(C, x, eps, cfg.samples_per_radius, rng) + _projection_points(
                C, x, eps, cfg.samples_per_radius // 2, rng, directions
            )

    else:

        def generate(eps, rng):
            return _projection_points(C, x, eps, cfg.samples_per_radius, rng, directions)

    samples, notes = [], []
    for j, eps in enumerate(cfg.eps_schedule):
        rng = np.random.default_rng([cfg.seed, j])
        count = 0
        for pt, tag in generate(float(eps), rng):
            d = pt - x
            dist = C.norm(d)
            if dist == 0.0 or dist > eps_max * (1 + 1e-12) or not C.contains(pt):
                continue
            gain = float(g @ d) if first_order else J.value(pt) - J0
            samples.append(GrowthSample(float(eps), dist, 2.0 * gain / dist**2, tag))
            count += 1
        if count == 0:
            notes.append(f"radius {eps:g} skipped: no feasible sample away from the point")
    ratios = np.array([s.ratio for s in samples])
    return GrowthReport(
        radii=tuple(float(e) for e in cfg.eps_schedule),
        samples=tuple(samples),
        fitted_c=_trimmed_min(ratios, cfg.trim),
        raw_min=float(ratios.min()) if ratios.size else math.nan,
        epsilon_used=float(eps_max),
        sample_count=len(samples),
        seed=cfg.seed,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# orchestration


@dataclass(frozen=True)
class SocConfig:
    directions: tuple[tuple[float, ...], ...] = ()
    n_directions: int = 16
    seed: int = 0
    curvature_method: CurvatureMethod = "auto"
    brute: BruteForceConfig = field(default_factory=BruteForceConfig)
    growth: GrowthConfig = field(default_factory=GrowthConfig)
    snc_tol: float = 1e-6


def render_verdict(
    fonc: FoncResult,
    ndc: NdcResult | None,
    snc: Sequence[SncResidual],
    ssc: SscResult | None,
    growth: GrowthReport | None,
    tol: float = 1e-6,
) -> tuple[Verdict, str]:
    """Combine the pieces into a verdict.

    ``no_gap_consistent`` needs FONC, SSC, positive sampled growth and
    nonnegative SNC residuals at the fitted constant. Failures that agree
    with each other (x̄ is not a strict local minimizer) and genuine
    contradictions both count as ``inconsistent``; the details say which.
    """
    if not fonc.holds:
        return "inconsistent", "first-order condition fails"
    if any(s.residual == -math.inf for s in snc):
        return "inconsistent", "second-order necessary condition violated: curvature is -infinity"
    if growth is None or growth.sample_count == 0:
        return "inconclusive", "no growth samples"
    if ssc is None or ssc.holds is None or any(s.status == "inconclusive" for s in snc):
        return "inconclusive", "some curvature value is unresolved"
    c = growth.fitted_c
    snc_ok = all(s.residual >= -tol for s in snc)
    if ssc.holds:
        if ssc.advisory:
            return "inconclusive", "SSC holds but the non-degeneracy condition is unverified"
        if c > 0 and snc_ok:
            return "no_gap_consistent", "SSC holds and sampled quadratic growth is positive"
        if c <= 0:
            return "inconsistent", "no-gap contradiction: SSC holds but sampled growth is not positive"
        return "inconsistent", "no-gap contradiction: SNC residual negative at the fitted growth constant"
    if c <= 0:
        return "inconsistent", "SSC fails and sampled growth is not positive"
    return "inconsistent", "SSC fails although sampled growth is positive"


def no_gap_report(C: AdmissibleSet, J: Objective, xbar: ArrayLike, cfg: SocConfig | None = None) -> SOCReport:
    """Run FONC, NDC, curvature scan, SNC, SSC and growth; render a verdict."""
    cfg = cfg or SocConfig()
    try:
        x = as_vector(xbar, C.dim, "point")
        if not C.contains(x):
            raise CurvlabError("structural error: point is not feasible")
    except CurvlabError as err:
        return SOCReport(None, None, (), (), None, None, "inconclusive", str(err), {"error": str(err)})
    fonc = fonc_check(C, J, x)
    phi = as_vector(J.grad(x), C.dim, "gradient")
    if not fonc.holds:
        growth = growth_sample(C, J, x, cfg.growth)
        verdict, details = render_verdict(fonc, None, (), None, growth, cfg.snc_tol)
        return SOCReport(fonc, None, (), (), None, growth, verdict, details, {"directions": 0})
    ndc = ndc_check(C, J, x, cfg.growth)
    dirs = critical_directions(C, x, phi, cfg.n_directions, cfg.seed, cfg.directions)
    curv = tuple(evaluate_curvature(C, x, phi, h, cfg.curvature_method, cfg.brute) for h in dirs)
    growth = growth_sample(C, J, x, cfg.growth, directions=dirs)
    c = growth.fitted_c if growth.sample_count and growth.fitted_c > 0 else 0.0
    snc = tuple(snc_scan(C, J, x, c, dirs, curvatures=curv, tol=cfg.snc_tol))
    ssc = ssc_check(C, J, x, dirs, ndc=ndc, curvatures=curv)
    verdict, details = render_verdict(fonc, ndc, snc, ssc, growth, cfg.snc_tol)
    diag = {"directions": len(dirs), "snc_constant": c, "curvature_method": cfg.curvature_method}
    return SOCReport(fonc, ndc, curv, snc, ssc, growth, verdict, details, diag)

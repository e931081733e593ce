"""Representations of definable subsets of R^n.

Three variants share one interface:

* implicit  -- common zero set of polynomials, intersected with a region
               {g <= 0} for optional inequality polynomials;
* parametric -- image of a piecewise-polynomial map R^d -> R^n;
* graph     -- graph of a piecewise-polynomial/rational map R^d -> R^(n-d),
               points laid out as (base, value).

Membership, exact derivative evaluation, regular-point detection, tangent
spaces and damped Gauss-Newton projection all operate on batches where it
matters for sampling throughput.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .config import AnalysisConfig
from .errors import (GuardBoundary, InequalityViolated, NoConvergence, NotOnSet,
                     SingularPoint, UnsupportedQuery)
from .polynomials import Piece, Polynomial, PiecewiseExpr, PiecewiseMap, RationalExpr
from .subspaces import Subspace, orthonormalize

IMPLICIT = "implicit"
PARAMETRIC = "parametric"
GRAPH = "graph"


@dataclass(frozen=True)
class PointOnSet:
    """An on-set point with its membership residual and regularity flag.

    ``param`` records the parameter-domain preimage for parametric and
    graph sets (for graphs it equals the base coordinates); implicit sets
    leave it None.
    """

    coords: np.ndarray
    residual: float
    regular: bool = False
    param: np.ndarray | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float))
        if self.param is not None:
            object.__setattr__(self, "param", np.asarray(self.param, dtype=float))


class DefinableSet:
    """A named definable subset of R^n with declared intrinsic dimension."""

    def __init__(self, name: str, ambient_dim: int, declared_dim: int, variant: str,
                 equations=(), inequalities=(), mapping: PiecewiseMap | None = None):
        self.name = str(name)
        self.ambient_dim = int(ambient_dim)
        self.declared_dim = int(declared_dim)
        self.variant = variant
        self.equations = list(equations)
        self.inequalities = list(inequalities)
        self.mapping = mapping
        if variant == IMPLICIT:
            if self.equations and self.declared_dim >= self.ambient_dim:
                raise ValueError("implicit set with equations must have declared_dim < ambient_dim")
            for p in self.equations + self.inequalities:
                if p.num_vars != self.ambient_dim:
                    raise ValueError("equation variable count does not match ambient dimension")
        elif variant == PARAMETRIC:
            if mapping is None or mapping.codomain_dim != self.ambient_dim:
                raise ValueError("parametric set needs a map into R^ambient_dim")
            if mapping.domain_dim != self.declared_dim:
                raise ValueError("parametric domain dimension must equal declared_dim")
        elif variant == GRAPH:
            if mapping is None or mapping.domain_dim != self.declared_dim:
                raise ValueError("graph set needs a map on R^declared_dim")
            if mapping.domain_dim + mapping.codomain_dim != self.ambient_dim:
                raise ValueError("graph dimensions must satisfy d + (n-d) = n")
        else:
            raise ValueError(f"unknown variant {variant!r}")

    # -- constructors ----------------------------------------------------

    @classmethod
    def implicit(cls, name, ambient_dim, declared_dim, equations, inequalities=()):
        return cls(name, ambient_dim, declared_dim, IMPLICIT,
                   equations=equations, inequalities=inequalities)

    @classmethod
    def region(cls, name, ambient_dim, inequalities):
        """Full-dimensional region {g <= 0 for every inequality g}."""
        return cls(name, ambient_dim, ambient_dim, IMPLICIT, inequalities=inequalities)

    @classmethod
    def parametric(cls, name, ambient_dim, mapping: PiecewiseMap):
        return cls(name, ambient_dim, mapping.domain_dim, PARAMETRIC, mapping=mapping)

    @classmethod
    def graph(cls, name, mapping: PiecewiseMap):
        n = mapping.domain_dim + mapping.codomain_dim
        return cls(name, n, mapping.domain_dim, GRAPH, mapping=mapping)

    # -- basic structure -------------------------------------------------

    @property
    def is_full_dimensional(self) -> bool:
        return self.variant == IMPLICIT and not self.equations

    def split_graph_coords(self, x: np.ndarray):
        d = self.declared_dim
        return x[..., :d], x[..., d:]

    def graph_points(self, base: np.ndarray) -> np.ndarray:
        """Lift base points to graph points (base, f(base))."""
        base = np.atleast_2d(np.asarray(base, dtype=float))
        return np.concatenate([base, self.mapping.values(base)], axis=1)

    def parametric_points(self, params: np.ndarray) -> np.ndarray:
        return self.mapping.values(np.atleast_2d(np.asarray(params, dtype=float)))

    def __repr__(self) -> str:
        return (f"DefinableSet({self.name!r}, n={self.ambient_dim}, "
                f"d={self.declared_dim}, {self.variant})")


# -- membership ----------------------------------------------------------

def _implicit_residuals(sset: DefinableSet, pts: np.ndarray) -> np.ndarray:
    res = np.zeros(pts.shape[0])
    for eq in sset.equations:
        res = np.maximum(res, np.abs(eq.values(pts)))
    for g in sset.inequalities:
        res = np.maximum(res, np.maximum(g.values(pts), 0.0))
    return res


def membership_residuals(sset: DefinableSet, pts: np.ndarray) -> np.ndarray:
    """Batch membership residuals for implicit and graph sets."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if pts.shape[1] != sset.ambient_dim:
        raise ValueError("point dimension does not match the set")
    if sset.variant == IMPLICIT:
        return _implicit_residuals(sset, pts)
    if sset.variant == GRAPH:
        base, val = sset.split_graph_coords(pts)
        return np.linalg.norm(val - sset.mapping.values(base), axis=1)
    raise UnsupportedQuery("parametric membership needs a projection budget (pass cfg)")


def eval_membership(sset: DefinableSet, x, tol: float,
                    cfg: AnalysisConfig | None = None) -> tuple[bool, float]:
    """Membership of a single point within tolerance, plus the residual."""
    x = np.asarray(x, dtype=float)
    if sset.variant == PARAMETRIC:
        if cfg is None:
            raise UnsupportedQuery("parametric membership needs a projection budget (pass cfg)")
        _, dist = parameter_project(sset, x, cfg)
        return bool(dist <= tol), float(dist)
    res = float(membership_residuals(sset, x[None, :])[0])
    return res <= tol, res


# -- derivatives ---------------------------------------------------------

def jacobian(sset: DefinableSet, x, guard_tol: float = 1e-9) -> np.ndarray:
    """Exact Jacobian of the defining data.

    Implicit sets differentiate their equations at the ambient point x.
    Parametric and graph sets differentiate the defining map, so x is a
    parameter-domain (resp. base-domain) point. Raises GuardBoundary when
    x sits within guard_tol of a piecewise guard or a rational
    singularity, where one-sided derivatives must not be trusted.
    """
    x = np.asarray(x, dtype=float)
    if sset.variant == IMPLICIT:
        rows = [eq.gradients(x[None, :])[0] for eq in sset.equations]
        return np.array(rows).reshape(len(rows), sset.ambient_dim)
    jac, boundary = sset.mapping.jacobians(x[None, :], guard_tol)
    if boundary[0]:
        raise GuardBoundary(f"{x} lies on a piecewise guard boundary")
    return jac[0]


# -- regularity and tangent spaces ---------------------------------------

def _implicit_singvals(sset: DefinableSet, x: np.ndarray) -> np.ndarray:
    jac = jacobian(sset, x)
    if jac.shape[0] == 0:
        return np.zeros(0)
    return np.linalg.svd(jac, compute_uv=False)


def is_regular_point(sset: DefinableSet, x, tol: float = 1e-8,
                     cfg: AnalysisConfig | None = None) -> bool:
    """Sufficient numerical test for x being a smooth-stratum point.

    Accepts a PointOnSet (preferred for parametric sets, whose parameter
    it reuses) or a bare coordinate vector.
    """
    param = x.param if isinstance(x, PointOnSet) else None
    coords = x.coords if isinstance(x, PointOnSet) else np.asarray(x, dtype=float)
    member, _ = eval_membership(sset, coords, max(tol, 1e-8), cfg)
    if not member:
        raise NotOnSet(f"{coords} is not on {sset.name}")
    if sset.variant == IMPLICIT:
        for g in sset.inequalities:
            if abs(g(coords)) <= tol:
                return False
        if not sset.equations:
            return True  # interior point of a full-dimensional region
        sv = _implicit_singvals(sset, coords)
        codim = sset.ambient_dim - sset.declared_dim
        if len(sv) < codim:
            return False
        return bool(sv[codim - 1] > tol)
    base = _parameter_of(sset, coords, param, cfg)
    try:
        jac = jacobian(sset, base, guard_tol=tol * (1.0 + float(np.linalg.norm(base))))
    except GuardBoundary:
        return False
    sv = np.linalg.svd(jac, compute_uv=False)
    return bool(len(sv) >= sset.declared_dim and sv[sset.declared_dim - 1] > tol)


def _parameter_of(sset: DefinableSet, coords: np.ndarray, param, cfg) -> np.ndarray:
    if sset.variant == GRAPH:
        return coords[: sset.declared_dim]
    if param is not None:
        return np.asarray(param, dtype=float)
    if cfg is None:
        raise UnsupportedQuery(
            "parametric point needs its parameter (pass a PointOnSet or a cfg)")
    t, _ = parameter_project(sset, coords, cfg)
    return t


def tangent_space_at(sset: DefinableSet, x, cfg: AnalysisConfig | None = None,
                     tol: float = 1e-8) -> Subspace:
    """Tangent space at a regular point, as an orthonormal Subspace."""
    if not is_regular_point(sset, x, tol, cfg):
        raise SingularPoint("tangent space requested at a non-regular point")
    param = x.param if isinstance(x, PointOnSet) else None
    coords = x.coords if isinstance(x, PointOnSet) else np.asarray(x, dtype=float)
    if sset.variant == IMPLICIT:
        if not sset.equations:
            return Subspace.full(sset.ambient_dim)
        jac = jacobian(sset, coords)
        _, _, vt = np.linalg.svd(jac)
        return Subspace(sset.ambient_dim, vt[-sset.declared_dim:])
    base = _parameter_of(sset, coords, param, cfg)
    jac = jacobian(sset, base)
    if sset.variant == GRAPH:
        d = sset.declared_dim
        cols = np.concatenate([np.eye(d), jac.T], axis=1)  # rows (e_i, df/dx_i)
        return orthonormalize(cols)
    return orthonormalize(jac.T)


def regular_mask(sset: DefinableSet, coords: np.ndarray, params=None,
                 tol: float = 1e-8) -> np.ndarray:
    """Vectorized regular-point test over points assumed on the set."""
    pts = np.atleast_2d(np.asarray(coords, dtype=float))
    B = pts.shape[0]
    if B == 0:
        return np.zeros(0, dtype=bool)
    if sset.variant == IMPLICIT:
        ok = np.ones(B, dtype=bool)
        for g in sset.inequalities:
            vals = g.values(pts)
            if sset.equations:
                ok &= np.abs(vals) > tol
            else:
                ok &= vals < -tol  # region interior
        if not sset.equations:
            return ok
        jac = np.stack([eq.gradients(pts) for eq in sset.equations], axis=1)
        sv = np.linalg.svd(jac, compute_uv=False)
        codim = sset.ambient_dim - sset.declared_dim
        if sv.shape[1] < codim:
            return np.zeros(B, dtype=bool)
        return ok & (sv[:, codim - 1] > tol)
    if sset.variant == GRAPH:
        base = pts[:, : sset.declared_dim]
    else:
        if params is None:
            raise UnsupportedQuery("parametric batch regularity needs parameters")
        base = np.atleast_2d(np.asarray(params, dtype=float))
    guard_tols = tol * (1.0 + np.linalg.norm(base, axis=1))
    jac, _ = sset.mapping.jacobians(base, guard_tol=0.0)
    boundary = sset.mapping.boundary_masks(base, guard_tols)
    sv = np.linalg.svd(jac, compute_uv=False)
    d = sset.declared_dim
    return (~boundary) & (sv[:, d - 1] > tol)


def tangent_spaces_batch(sset: DefinableSet, points: list[PointOnSet],
                         tol: float = 1e-8) -> list[Subspace | None]:
    """Tangent spaces where available; None marks non-regular points."""
    out: list[Subspace | None] = []
    for pt in points:
        try:
            out.append(tangent_space_at(sset, pt, tol=tol))
        except (SingularPoint, NotOnSet, UnsupportedQuery):
            out.append(None)
    return out


# -- Gauss-Newton projection ----------------------------------------------

def _gn_step(J: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Minimum-norm Gauss-Newton step J^T (J J^T + ridge)^-1 F, batched.

    The ridge only matters where J J^T is numerically singular (seeds at
    singular points), where any bounded step is acceptable: those points
    stall and get discarded by the residual check anyway.
    """
    m = J.shape[1]
    G = J @ np.transpose(J, (0, 2, 1))
    diag = np.arange(m)
    trace = np.maximum(G[:, diag, diag].sum(axis=1), 1e-300)
    G[:, diag, diag] += 1e-14 * trace[:, None]
    lam = np.linalg.solve(G, F[:, :, None])
    return (np.transpose(J, (0, 2, 1)) @ lam)[:, :, 0]


def gauss_newton_batch(sset: DefinableSet, seeds: np.ndarray, cfg: AnalysisConfig,
                       center: np.ndarray | None = None,
                       window: tuple[float, float] | None = None):
    """Damped Gauss-Newton onto the implicit equation system, batched.

    Iterates past the membership tolerance until the residual stalls, so
    that degenerate equations (gradients vanishing like a power of the
    residual) still land geometrically close to the set. Returns the
    moved points, their equation residuals, and an inequality mask.

    When a (center, (lo, hi)) norm window is given, points that wander
    well outside it stop iterating early; rejection sampling discards
    them anyway, so this only saves the descent into regions the caller
    will not keep.
    """
    X = np.atleast_2d(np.asarray(seeds, dtype=float)).copy()
    eqs = sset.equations
    if eqs:
        def resid(P):
            F = np.stack([eq.values(P) for eq in eqs], axis=1)
            return F, np.max(np.abs(F), axis=1)

        def in_window(P):
            if window is None:
                return np.ones(P.shape[0], dtype=bool)
            norms = np.linalg.norm(P - center, axis=1)
            return (norms >= 0.2 * window[0]) & (norms <= 5.0 * window[1])

        F, res = resid(X)
        active = (res > 0.0) & in_window(X)
        for _ in range(cfg.max_newton_iters):
            if not np.any(active):
                break
            idx = np.flatnonzero(active)
            sub = X[idx]
            J = np.stack([eq.gradients(sub) for eq in eqs], axis=1)
            step = _gn_step(J, F[idx])
            cand = sub - step
            _, rc = resid(cand)
            for _ in range(25):
                worse = rc > res[idx]
                if not np.any(worse):
                    break
                step[worse] *= 0.5
                cand[worse] = sub[worse] - step[worse]
                _, rc_w = resid(cand[worse])
                rc[worse] = rc_w
            improved = rc < res[idx] * (1.0 - 1e-12)
            moved = idx[improved]
            X[moved] = cand[improved]
            Fm, rm = resid(X[moved])
            F[moved] = Fm
            res[moved] = rm
            active[idx[~improved]] = False  # stalled
            active &= res > 0.0
            if np.any(active):
                live = np.flatnonzero(active)
                active[live] &= in_window(X[live])
        _, res = resid(X)
    else:
        res = np.zeros(X.shape[0])
    ineq_ok = np.ones(X.shape[0], dtype=bool)
    for g in sset.inequalities:
        ineq_ok &= g.values(X) <= cfg.membership_tol
    return X, res, ineq_ok


def project_to_set(sset: DefinableSet, x0, cfg: AnalysisConfig) -> PointOnSet:
    """Project a seed onto an implicit set, or fail loudly."""
    if sset.variant != IMPLICIT:
        raise UnsupportedQuery("projection targets implicit sets; "
                               "parametric/graph sets sample their parameter domain")
    x0 = np.asarray(x0, dtype=float)
    X, res, ineq_ok = gauss_newton_batch(sset, x0[None, :], cfg)
    if res[0] > cfg.membership_tol:
        raise NoConvergence(f"residual {res[0]:.3e} above {cfg.membership_tol:.1e}")
    if not ineq_ok[0]:
        raise InequalityViolated("projection converged outside the inequality region")
    return PointOnSet(X[0], float(res[0]))


def parameter_project(sset: DefinableSet, x, cfg: AnalysisConfig):
    """Closest-parameter search for a parametric set: returns (t, distance).

    Gauss-Newton on t -> |F(t) - x| from a deterministic seed grid; the
    best converged candidate wins. Not guaranteed globally nearest, only
    on-set within the reported distance.
    """
    if sset.variant != PARAMETRIC:
        raise UnsupportedQuery("parameter_project applies to parametric sets")
    x = np.asarray(x, dtype=float)
    d = sset.declared_dim
    deg = sset.mapping.max_degree()
    r = max(float(np.linalg.norm(x)) ** (1.0 / deg), 1e-3)
    axes = [np.array([-r, 0.0, r])] * d
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    T = grid.copy()
    for _ in range(cfg.max_newton_iters):
        vals = sset.mapping.values(T)
        R = vals - x[None, :]
        dist = np.linalg.norm(R, axis=1)
        J, _ = sset.mapping.jacobians(T, guard_tol=0.0)
        step = (np.linalg.pinv(J) @ R[:, :, None])[:, :, 0]
        cand = T - step
        cand_dist = np.linalg.norm(sset.mapping.values(cand) - x[None, :], axis=1)
        for _ in range(20):
            worse = cand_dist > dist
            if not np.any(worse):
                break
            step[worse] *= 0.5
            cand[worse] = T[worse] - step[worse]
            cand_dist[worse] = np.linalg.norm(
                sset.mapping.values(cand[worse]) - x[None, :], axis=1)
        better = cand_dist < dist
        if not np.any(better):
            break
        T[better] = cand[better]
    dist = np.linalg.norm(sset.mapping.values(T) - x[None, :], axis=1)
    best = int(np.argmin(dist))
    return T[best], float(dist[best])


# -- region boundary and piecewise-crease structure ------------------------

def on_region_boundary(sset: DefinableSet, p, tol: float = 1e-8) -> bool:
    """True when some inequality is active at p (|g(p)| <= tol)."""
    p = np.asarray(p, dtype=float)
    return any(abs(g(p)) <= tol for g in sset.inequalities)


def crease_witness(sset: DefinableSet, p, cfg: AnalysisConfig) -> dict | None:
    """Exact one-sided-derivative mismatch probe across piecewise guards.

    For graph sets whose defining map has a guard surface through the
    base point of p, samples on-guard parameter points at a ladder of
    radii and evaluates both adjacent pieces' exact gradients there. A
    persistent nonzero mismatch witnesses non-smoothness of the set at
    points arbitrarily close to p; a mismatch that is identically zero on
    the guard (matching one-sided derivatives) produces no witness.
    """
    if sset.variant != GRAPH:
        return None
    base = np.asarray(p, dtype=float)[: sset.declared_dim]
    radii = [cfg.scale_t0 * cfg.scale_ratio ** k for k in range(cfg.num_scales)]
    floor = 1e-9
    rng = np.random.default_rng(abs(hash((sset.name, "crease"))) % (2 ** 32))
    for ci, comp in enumerate(sset.mapping.components):
        for gi, guard in enumerate(comp.guard_polys()):
            if abs(guard(base)) > 1e-8 * (1.0 + np.linalg.norm(base)):
                continue  # guard surface does not pass through p
            per_radius = []
            for r in radii:
                hits = []
                for _ in range(8):
                    seed = base + r * _unit(rng, sset.declared_dim)
                    t = _newton_onto_guard(guard, seed)
                    if t is None or np.linalg.norm(t - base) > 2 * r:
                        continue
                    sides = comp.one_sided_gradients(t, guard)
                    if sides is None:
                        continue
                    hits.append(float(np.linalg.norm(sides[0] - sides[1])))
                per_radius.append(max(hits) if hits else 0.0)
            fine = [m for m in per_radius[-3:] if m > floor]
            if len(fine) >= 2:
                return {
                    "component": ci,
                    "guard": gi,
                    "radii": radii,
                    "mismatch": per_radius,
                }
    return None


def _unit(rng, d: int) -> np.ndarray:
    v = rng.standard_normal(d)
    n = np.linalg.norm(v)
    return v / n if n > 0 else np.eye(d)[0]


def _newton_onto_guard(guard: Polynomial, seed: np.ndarray, iters: int = 30):
    x = seed.astype(float).copy()
    for _ in range(iters):
        val = guard(x)
        if abs(val) <= 1e-13 * (1.0 + np.linalg.norm(x)):
            return x
        grad = guard.gradients(x[None, :])[0]
        gg = float(grad @ grad)
        if gg < 1e-30:
            return None
        x = x - val * grad / gg
    return x if abs(guard(x)) <= 1e-10 else None


# -- JSON set-definition format -------------------------------------------

def _expr_to_json(expr) -> dict:
    if isinstance(expr, RationalExpr):
        return {"type": "rational", "num": expr.num.to_json(),
                "den": expr.den.to_json(), "limit": expr.limit_value}
    return {"type": "poly", "terms": expr.to_json()}


def _expr_from_json(num_vars: int, data: dict):
    if data["type"] == "rational":
        return RationalExpr(Polynomial.from_json(num_vars, data["num"]),
                            Polynomial.from_json(num_vars, data["den"]),
                            data.get("limit", 0.0))
    return Polynomial.from_json(num_vars, data["terms"])


def set_to_json(sset: DefinableSet) -> dict:
    out = {
        "name": sset.name,
        "ambient_dim": sset.ambient_dim,
        "declared_dim": sset.declared_dim,
        "variant": sset.variant,
        "equations": [eq.to_json() for eq in sset.equations],
        "inequalities": [g.to_json() for g in sset.inequalities],
        "pieces": [],
    }
    if sset.mapping is not None:
        for comp in sset.mapping.components:
            out["pieces"].append([
                {"guards": [{"poly": g.to_json(), "sign": s} for g, s in piece.guards],
                 "expr": _expr_to_json(piece.expr)}
                for piece in comp.pieces
            ])
    return out


def set_from_json(data: dict) -> DefinableSet:
    n = int(data["ambient_dim"])
    d = int(data["declared_dim"])
    variant = data["variant"]
    if variant == IMPLICIT:
        eqs = [Polynomial.from_json(n, e) for e in data.get("equations", [])]
        ineqs = [Polynomial.from_json(n, g) for g in data.get("inequalities", [])]
        return DefinableSet(data["name"], n, d, IMPLICIT, equations=eqs, inequalities=ineqs)
    dom = d
    comps = []
    for comp in data["pieces"]:
        pieces = []
        for piece in comp:
            guards = [(Polynomial.from_json(dom, g["poly"]), g["sign"])
                      for g in piece.get("guards", [])]
            pieces.append(Piece(guards, _expr_from_json(dom, piece["expr"])))
        comps.append(PiecewiseExpr(dom, pieces))
    mapping = PiecewiseMap(comps)
    if variant == PARAMETRIC:
        return DefinableSet.parametric(data["name"], n, mapping)
    if variant == GRAPH:
        return DefinableSet.graph(data["name"], mapping)
    raise ValueError(f"unknown variant {variant!r}")


def load_set(path: str) -> DefinableSet:
    with open(path, "r", encoding="utf-8") as fh:
        return set_from_json(json.load(fh))

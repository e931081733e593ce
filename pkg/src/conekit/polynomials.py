"""Sparse multivariate polynomials, rational expressions with removable
singularities, and piecewise-defined maps with polynomial sign guards.

Everything evaluates in batch: ``values(X)`` takes an (B, n) array of
points and returns (B,) values. Derivatives are exact (computed from the
exponent structure), never finite differences.
"""

from __future__ import annotations

import numpy as np

from .errors import GuardBoundary


class Polynomial:
    """A sparse polynomial sum(coeff * x^exps) in ``num_vars`` variables."""

    __slots__ = ("num_vars", "coeffs", "exps", "_partials")

    def __init__(self, num_vars: int, terms):
        """terms: iterable of (coefficient, exponent tuple)."""
        merged: dict[tuple[int, ...], float] = {}
        for coeff, exps in terms:
            key = tuple(int(e) for e in exps)
            if len(key) != num_vars:
                raise ValueError(f"exponent tuple {key} does not match {num_vars} variables")
            if any(e < 0 for e in key):
                raise ValueError("exponents must be nonnegative")
            merged[key] = merged.get(key, 0.0) + float(coeff)
        merged = {k: c for k, c in merged.items() if c != 0.0}
        self.num_vars = int(num_vars)
        if merged:
            keys = sorted(merged)
            self.exps = np.array(keys, dtype=np.int64)
            self.coeffs = np.array([merged[k] for k in keys], dtype=float)
        else:
            self.exps = np.zeros((0, num_vars), dtype=np.int64)
            self.coeffs = np.zeros(0, dtype=float)
        self._partials = None

    @classmethod
    def from_dict(cls, num_vars: int, table: dict) -> "Polynomial":
        return cls(num_vars, [(c, e) for e, c in table.items()])

    @classmethod
    def variable(cls, num_vars: int, index: int) -> "Polynomial":
        exps = [0] * num_vars
        exps[index] = 1
        return cls(num_vars, [(1.0, tuple(exps))])

    @classmethod
    def constant(cls, num_vars: int, value: float) -> "Polynomial":
        return cls(num_vars, [(value, (0,) * num_vars)])

    @property
    def is_zero(self) -> bool:
        return self.coeffs.size == 0

    @property
    def total_degree(self) -> int:
        if self.is_zero:
            return 0
        return int(self.exps.sum(axis=1).max())

    def scaled(self, factor: float) -> "Polynomial":
        return Polynomial(self.num_vars, zip(self.coeffs * factor, map(tuple, self.exps)))

    def values(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.num_vars:
            raise ValueError(f"points in R^{pts.shape[1]}, polynomial in R^{self.num_vars}")
        if self.is_zero:
            return np.zeros(pts.shape[0])
        monomials = np.prod(pts[:, None, :] ** self.exps[None, :, :], axis=2)
        return monomials @ self.coeffs

    def __call__(self, point) -> float:
        return float(self.values(np.asarray(point, dtype=float)[None, :])[0])

    def partial(self, index: int) -> "Polynomial":
        terms = []
        for coeff, exps in zip(self.coeffs, self.exps):
            e = int(exps[index])
            if e > 0:
                new = exps.copy()
                new[index] = e - 1
                terms.append((coeff * e, tuple(new)))
        return Polynomial(self.num_vars, terms)

    def gradient_polys(self) -> list["Polynomial"]:
        if self._partials is None:
            self._partials = [self.partial(i) for i in range(self.num_vars)]
        return self._partials

    def gradients(self, points: np.ndarray) -> np.ndarray:
        """Gradient rows for a batch of points, shape (B, num_vars)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.stack([p.values(pts) for p in self.gradient_polys()], axis=1)

    def to_json(self) -> list:
        return [{"coeff": float(c), "exps": [int(e) for e in exps]}
                for c, exps in zip(self.coeffs, self.exps)]

    @classmethod
    def from_json(cls, num_vars: int, data: list) -> "Polynomial":
        return cls(num_vars, [(t["coeff"], tuple(t["exps"])) for t in data])

    def __repr__(self) -> str:
        if self.is_zero:
            return "Polynomial(0)"
        bits = []
        for c, exps in zip(self.coeffs, self.exps):
            mono = "*".join(f"x{i}^{e}" for i, e in enumerate(exps) if e) or "1"
            bits.append(f"{c:g}*{mono}")
        return "Polynomial(" + " + ".join(bits) + ")"


class RationalExpr:
    """num/den with a declared limit value on the denominator zero set.

    The limit value is only used where the denominator vanishes exactly;
    derivative evaluation refuses (GuardBoundary) there because the
    quotient rule degenerates.
    """

    __slots__ = ("num", "den", "limit_value")

    def __init__(self, num: Polynomial, den: Polynomial, limit_value: float = 0.0):
        if num.num_vars != den.num_vars:
            raise ValueError("numerator and denominator variable counts differ")
        self.num = num
        self.den = den
        self.limit_value = float(limit_value)

    @property
    def num_vars(self) -> int:
        return self.num.num_vars

    def scaled(self, factor: float) -> "RationalExpr":
        return RationalExpr(self.num.scaled(factor), self.den, self.limit_value * factor)

    def values(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        den = self.den.values(pts)
        out = np.full(pts.shape[0], self.limit_value)
        ok = den != 0.0
        if np.any(ok):
            out[ok] = self.num.values(pts[ok]) / den[ok]
        return out

    def __call__(self, point) -> float:
        return float(self.values(np.asarray(point, dtype=float)[None, :])[0])

    def gradients(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        den = self.den.values(pts)
        if np.any(den == 0.0):
            raise GuardBoundary("gradient requested on the denominator zero set")
        num = self.num.values(pts)
        gnum = self.num.gradients(pts)
        gden = self.den.gradients(pts)
        return (gnum * den[:, None] - gden * num[:, None]) / (den ** 2)[:, None]

    def singular_mask(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self.den.values(pts) == 0.0


class Piece:
    """One branch of a piecewise definition: sign guards plus an expression.

    A guard (g, +1) requires g(x) >= 0; (g, -1) requires g(x) <= 0. Both
    closures overlap on {g = 0} so that piece lists cover their domain;
    the first matching piece wins.
    """

    __slots__ = ("guards", "expr")

    def __init__(self, guards, expr):
        self.guards = [(g, int(s)) for g, s in guards]
        for g, s in self.guards:
            if s not in (1, -1):
                raise ValueError("guard sign must be +1 or -1")
        self.expr = expr

    def matches(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ok = np.ones(pts.shape[0], dtype=bool)
        for g, s in self.guards:
            ok &= (s * g.values(pts)) >= 0.0
        return ok

    def boundary_mask(self, points: np.ndarray, tol: float) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        near = np.zeros(pts.shape[0], dtype=bool)
        for g, _ in self.guards:
            near |= np.abs(g.values(pts)) <= tol
        if isinstance(self.expr, RationalExpr):
            near |= self.expr.singular_mask(pts)
        return near


class PiecewiseExpr:
    """A scalar function of d variables defined by guarded pieces."""

    __slots__ = ("num_vars", "pieces")

    def __init__(self, num_vars: int, pieces):
        self.num_vars = int(num_vars)
        self.pieces = list(pieces)
        if not self.pieces:
            raise ValueError("a piecewise expression needs at least one piece")

    @classmethod
    def simple(cls, expr) -> "PiecewiseExpr":
        return cls(expr.num_vars, [Piece([], expr)])

    def scaled(self, factor: float) -> "PiecewiseExpr":
        return PiecewiseExpr(self.num_vars,
                             [Piece(p.guards, p.expr.scaled(factor)) for p in self.pieces])

    def piece_index(self, points: np.ndarray) -> np.ndarray:
        """First matching piece per point; -1 where nothing matches."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        idx = np.full(pts.shape[0], -1, dtype=np.int64)
        for j, piece in enumerate(self.pieces):
            free = idx < 0
            if not np.any(free):
                break
            hit = piece.matches(pts[free])
            sel = np.flatnonzero(free)[hit]
            idx[sel] = j
        return idx

    def values(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        idx = self.piece_index(pts)
        if np.any(idx < 0):
            raise ValueError("point outside every piece domain")
        out = np.empty(pts.shape[0])
        for j, piece in enumerate(self.pieces):
            mask = idx == j
            if np.any(mask):
                out[mask] = piece.expr.values(pts[mask])
        return out

    def __call__(self, point) -> float:
        return float(self.values(np.asarray(point, dtype=float)[None, :])[0])

    def gradients(self, points: np.ndarray, guard_tol: float = 0.0):
        """Per-point gradients plus a mask of points on guard boundaries.

        Gradients at masked points come from the selected piece and must
        be treated as one-sided.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        idx = self.piece_index(pts)
        if np.any(idx < 0):
            raise ValueError("point outside every piece domain")
        grads = np.empty((pts.shape[0], self.num_vars))
        boundary = np.zeros(pts.shape[0], dtype=bool)
        for j, piece in enumerate(self.pieces):
            mask = idx == j
            if not np.any(mask):
                continue
            sub = pts[mask]
            boundary[mask] = piece.boundary_mask(sub, guard_tol)
            if isinstance(piece.expr, RationalExpr):
                safe = ~piece.expr.singular_mask(sub)
                block = np.zeros((sub.shape[0], self.num_vars))
                if np.any(safe):
                    block[safe] = piece.expr.gradients(sub[safe])
                grads[mask] = block
            else:
                grads[mask] = piece.expr.gradients(sub)
        return grads, boundary

    def guard_polys(self) -> list[Polynomial]:
        seen: list[Polynomial] = []
        for piece in self.pieces:
            for g, _ in piece.guards:
                if not any(g2 is g for g2 in seen):
                    seen.append(g)
        return seen

    def one_sided_gradients(self, point: np.ndarray, guard: Polynomial, step: float = 1e-9):
        """Exact piece gradients on both sides of a guard at an on-guard point.

        The offset is only used to select the two adjacent pieces; the
        gradients themselves are evaluated exactly at ``point``.
        """
        x = np.asarray(point, dtype=float)
        normal = guard.gradients(x[None, :])[0]
        nn = np.linalg.norm(normal)
        if nn == 0.0:
            return None
        eps = step * (1.0 + np.linalg.norm(x))
        plus = x + eps * normal / nn
        minus = x - eps * normal / nn
        i_plus = int(self.piece_index(plus[None, :])[0])
        i_minus = int(self.piece_index(minus[None, :])[0])
        if i_plus < 0 or i_minus < 0 or i_plus == i_minus:
            return None
        out = []
        for j in (i_plus, i_minus):
            expr = self.pieces[j].expr
            if isinstance(expr, RationalExpr) and expr.singular_mask(x[None, :])[0]:
                return None
            out.append(expr.gradients(x[None, :])[0])
        return out[0], out[1]


class PiecewiseMap:
    """A map R^d -> R^m whose components are piecewise expressions."""

    __slots__ = ("domain_dim", "components")

    def __init__(self, components):
        self.components = list(components)
        if not self.components:
            raise ValueError("map needs at least one component")
        dims = {c.num_vars for c in self.components}
        if len(dims) != 1:
            raise ValueError("components disagree on the domain dimension")
        self.domain_dim = dims.pop()

    @property
    def codomain_dim(self) -> int:
        return len(self.components)

    def values(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.stack([c.values(pts) for c in self.components], axis=1)

    def __call__(self, point) -> np.ndarray:
        return self.values(np.asarray(point, dtype=float)[None, :])[0]

    def jacobians(self, points: np.ndarray, guard_tol: float = 0.0):
        """Batch Jacobians, shape (B, m, d), plus a guard-boundary mask."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        rows = []
        boundary = np.zeros(pts.shape[0], dtype=bool)
        for c in self.components:
            g, b = c.gradients(pts, guard_tol)
            rows.append(g)
            boundary |= b
        return np.stack(rows, axis=1), boundary

    def boundary_masks(self, points: np.ndarray, tols) -> np.ndarray:
        """Guard-boundary mask with a scalar or per-point tolerance."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        tols = np.broadcast_to(np.asarray(tols, dtype=float), (pts.shape[0],))
        out = np.zeros(pts.shape[0], dtype=bool)
        for comp in self.components:
            idx = comp.piece_index(pts)
            for j, piece in enumerate(comp.pieces):
                mask = idx == j
                if np.any(mask):
                    out[mask] |= piece.boundary_mask(pts[mask], tols[mask])
        return out

    def max_degree(self) -> int:
        deg = 1
        for c in self.components:
            for piece in c.pieces:
                expr = piece.expr
                if isinstance(expr, RationalExpr):
                    deg = max(deg, expr.num.total_degree)
                else:
                    deg = max(deg, expr.total_degree)
        return deg

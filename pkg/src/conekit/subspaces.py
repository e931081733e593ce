"""Linear-subspace geometry: orthonormal bases, principal angles, the
Grassmannian metric, projections, and best-fit subspaces for direction
clouds.

Subspaces are stored as row-orthonormal bases, ``basis[i]`` being the
i-th basis vector in R^n. The metric between equal-dimensional subspaces
is the sine of the largest principal angle, which is the operator norm
of the difference of the orthogonal projectors and satisfies, for every
unit w in T, ``|w - proj_S(w)| <= delta(S, T)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AmbientMismatch, Degenerate, DimensionMismatch, ZeroDimensional

ORTHO_TOL = 1e-10


@dataclass(frozen=True)
class Subspace:
    """A d-dimensional linear subspace of R^n via a row-orthonormal basis."""

    ambient_dim: int
    basis: np.ndarray  # shape (d, ambient_dim), orthonormal rows

    def __post_init__(self) -> None:
        basis = np.atleast_2d(np.asarray(self.basis, dtype=float))
        if basis.size == 0:
            basis = basis.reshape(0, self.ambient_dim)
        object.__setattr__(self, "basis", basis)
        if basis.shape[1] != self.ambient_dim:
            raise AmbientMismatch(
                f"basis vectors have length {basis.shape[1]}, ambient dim is {self.ambient_dim}")
        d = basis.shape[0]
        if d > self.ambient_dim:
            raise DimensionMismatch(f"{d} basis vectors in R^{self.ambient_dim}")
        if d:
            gram = basis @ basis.T
            if not np.allclose(gram, np.eye(d), atol=1e-9):
                raise ValueError("basis rows are not orthonormal within tolerance")

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def project(self, v: np.ndarray) -> np.ndarray:
        return project_onto(self, v)

    def contains(self, v: np.ndarray, tol: float = 1e-8) -> bool:
        v = np.asarray(v, dtype=float)
        return bool(np.linalg.norm(v - self.project(v)) <= tol * max(1.0, np.linalg.norm(v)))

    @staticmethod
    def full(n: int) -> "Subspace":
        return Subspace(n, np.eye(n))

    @staticmethod
    def spanning(vectors, n: int | None = None, tol: float = ORTHO_TOL) -> "Subspace":
        vecs = np.atleast_2d(np.asarray(vectors, dtype=float))
        if n is not None and vecs.shape[1] != n:
            raise AmbientMismatch(f"expected vectors in R^{n}, got R^{vecs.shape[1]}")
        return orthonormalize(vecs, tol)


@dataclass(frozen=True)
class DirectionSample:
    """A unit direction observed at a given scale with a cluster weight."""

    direction: np.ndarray
    scale: float
    weight: float = 1.0

    def __post_init__(self) -> None:
        d = np.asarray(self.direction, dtype=float)
        object.__setattr__(self, "direction", d)
        if abs(np.linalg.norm(d) - 1.0) > 1e-8:
            raise ValueError("direction is not a unit vector")
        if self.scale <= 0 or self.weight <= 0:
            raise ValueError("scale and weight must be positive")


def orthonormalize(vectors, tol: float = ORTHO_TOL) -> Subspace:
    """Gram-Schmidt with one re-orthogonalization pass.

    Vectors whose residual after deflation falls below ``tol`` (relative
    to the largest input norm) are dropped; the result spans the same
    space and is deterministic in the input order.
    """
    vecs = np.atleast_2d(np.asarray(vectors, dtype=float))
    if vecs.size == 0:
        raise ValueError("orthonormalize needs at least one vector")
    lengths = {v.shape[0] for v in vecs}
    if len(lengths) != 1:
        raise AmbientMismatch("input vectors have unequal lengths")
    n = vecs.shape[1]
    scale = max(float(np.max(np.linalg.norm(vecs, axis=1))), 1.0)
    rows: list[np.ndarray] = []
    for v in vecs:
        w = v.astype(float)
        for _ in range(2):  # second pass restores orthogonality lost to cancellation
            for q in rows:
                w = w - np.dot(q, w) * q
        norm = np.linalg.norm(w)
        if norm > tol * scale:
            rows.append(w / norm)
    basis = np.array(rows).reshape(len(rows), n)
    return Subspace(n, basis)


def principal_angles(S: Subspace, T: Subspace) -> np.ndarray:
    """Principal angles between S and T, nondecreasing, in [0, pi/2].

    Computed from the singular values of the cross-Gram matrix of the two
    orthonormal bases, clamped into [0, 1] before arccos.
    """
    if S.ambient_dim != T.ambient_dim:
        raise AmbientMismatch("subspaces live in different ambient spaces")
    if S.dim == 0 or T.dim == 0:
        raise ZeroDimensional("principal angles need dimension >= 1 on both sides")
    gram = S.basis @ T.basis.T
    sigma = np.linalg.svd(gram, compute_uv=False)
    sigma = np.clip(sigma, 0.0, 1.0)
    return np.sort(np.arccos(sigma))


def grassmann_distance(S: Subspace, T: Subspace) -> float:
    """sin of the largest principal angle; a metric on equal-dim subspaces."""
    if S.dim != T.dim:
        raise DimensionMismatch(f"dim {S.dim} vs {T.dim}")
    angles = principal_angles(S, T)
    return float(np.sin(angles[-1]))


def project_onto(S: Subspace, v: np.ndarray) -> np.ndarray:
    """Orthogonal projection of v onto S (idempotent, norm-nonincreasing)."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != S.ambient_dim:
        raise AmbientMismatch(f"vector in R^{v.shape[-1]}, subspace in R^{S.ambient_dim}")
    if S.dim == 0:
        return np.zeros_like(v)
    coeffs = v @ S.basis.T
    return coeffs @ S.basis


def angle_to_subspace(S: Subspace, v: np.ndarray) -> float:
    """Angle in [0, pi/2] between a unit vector and the subspace."""
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return 0.0
    if S.dim == 0:
        return float(np.pi / 2)
    inplane = np.linalg.norm(project_onto(S, v)) / nv
    return float(np.arccos(np.clip(inplane, 0.0, 1.0)))


def _sign_normalize(vec: np.ndarray) -> np.ndarray:
    # reproducibility convention: first coordinate above noise is positive
    for x in vec:
        if abs(x) > 1e-12:
            return vec if x > 0 else -vec
    return vec


def moment_matrix(directions: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return np.einsum("i,ij,ik->jk", weights, directions, directions)


def fit_subspace(dirs, d: int, weights=None) -> tuple[Subspace, float]:
    """Best-fit d-dimensional subspace for a cloud of unit directions.

    Returns the span of the top-d eigenvectors of the weighted second
    moment matrix plus the residual, i.e. the weighted mean of
    sin^2(angle) between each direction and the fitted subspace. Sign of
    each eigenvector follows the first-nonzero-coordinate-positive
    convention so repeated runs agree.
    """
    if not isinstance(dirs, np.ndarray) and len(dirs) and isinstance(dirs[0], DirectionSample):
        mat = np.array([s.direction for s in dirs], dtype=float)
        wts = np.array([s.weight for s in dirs], dtype=float)
    else:
        mat = np.atleast_2d(np.asarray(dirs, dtype=float))
        wts = np.ones(mat.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    if mat.shape[0] < d:
        raise ValueError(f"need at least {d} samples, got {mat.shape[0]}")
    n = mat.shape[1]
    if d > n:
        raise DimensionMismatch(f"cannot fit a {d}-subspace in R^{n}")
    moment = moment_matrix(mat, wts)
    evals, evecs = np.linalg.eigh(moment)  # ascending
    order = np.argsort(evals)[::-1]
    evals = evals[order]
    evecs = evecs[:, order]
    total = float(np.sum(evals))
    if total <= 0.0:
        raise ValueError("moment matrix vanished; no directions to fit")
    basis = np.array([_sign_normalize(evecs[:, j]) for j in range(d)])
    residual = float(np.sum(evals[d:]) / total)
    fitted = Subspace(n, basis)
    rank = int(np.sum(evals > 1e-12 * total))
    if rank < d:
        # eigh still supplies an orthonormal completion, so the padded
        # subspace rides along on the error for callers that want it
        err = Degenerate(f"moment matrix has rank {rank} < requested dimension {d}")
        err.subspace = fitted
        err.residual = residual
        raise err
    return fitted, residual


def fit_residual_profile(dirs, weights=None, max_dim: int | None = None) -> np.ndarray:
    """Residuals of the best fit for every dimension 1..max_dim at once."""
    mat = np.atleast_2d(np.asarray(dirs, dtype=float))
    wts = np.ones(mat.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    n = mat.shape[1]
    top = n if max_dim is None else min(max_dim, n)
    evals = np.linalg.eigvalsh(moment_matrix(mat, wts))[::-1]
    total = float(np.sum(evals))
    if total <= 0.0:
        raise ValueError("moment matrix vanished; no directions to fit")
    tail = np.concatenate([np.cumsum(evals[::-1])[::-1][1:], [0.0]])
    return tail[:top] / total

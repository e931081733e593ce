"""Deterministic, seeded sampling of on-set points.

The numerical surrogate for "a sequence tending to p" is a dyadic scale
ladder with an annulus point cloud per rung. All randomness flows from
counter-based Philox streams keyed by (seed, set name, base point, scale,
purpose), so results do not depend on call order or threading.

Proposals mix two regimes per batch: isotropic offsets at the working
scale, and per-coordinate log-uniform magnitudes. The latter is what
finds the thin curvature bands (x ~ y^k and friends) that carry their
own limiting directions on semialgebraic sets; isotropic sampling alone
provably misses them at fine scales.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .config import AnalysisConfig
from .errors import EmptySample
from .sets import (GRAPH, IMPLICIT, PARAMETRIC, DefinableSet, PointOnSet,
                   gauss_newton_batch, parameter_project, regular_mask)

LOG_FLOOR = 1e-8          # relative floor of log-uniform magnitude draws
MIN_PAIR_SEP = 1e-3       # times scale; below this a pair counts as one point
OVERSAMPLE_BUDGET = 100   # proposal budget per requested sample


def stream(cfg: AnalysisConfig, *parts) -> np.random.Generator:
    """Philox stream keyed by the config seed and a structural tuple."""
    h = hashlib.blake2b(digest_size=16)
    h.update(repr((int(cfg.seed),) + tuple(parts)).encode())
    key = int.from_bytes(h.digest(), "little")
    return np.random.Generator(np.random.Philox(key=key))


def _point_key(p: np.ndarray) -> tuple:
    return tuple(float(v) for v in np.asarray(p, dtype=float))


@dataclass(frozen=True)
class ScaleSample:
    """On-set points whose distance to the base point lies in one rung."""

    scale: float
    points: list  # list[PointOnSet]

    def coords(self) -> np.ndarray:
        if not self.points:
            return np.zeros((0, 0))
        return np.stack([pt.coords for pt in self.points])


def scale_ladder(cfg: AnalysisConfig) -> list[float]:
    """Strictly decreasing rungs t0 * ratio^k, k = 0..num_scales-1."""
    return [cfg.scale_t0 * cfg.scale_ratio ** k for k in range(cfg.num_scales)]


def far_field_ladder(cfg: AnalysisConfig) -> list[float]:
    """Strictly increasing radii t0 * ratio^-k, k = 1..num_scales."""
    return [cfg.scale_t0 * cfg.scale_ratio ** (-k) for k in range(1, cfg.num_scales + 1)]


def _mixed_offsets(rng: np.random.Generator, count: int, dim: int, scale: float,
                   lo_frac: float) -> np.ndarray:
    """Half isotropic offsets at the working scale, half anisotropic ones.

    Anisotropic draws pin one pivot coordinate near the scale and draw
    the rest log-uniformly over eight decades below it, so proposals stay
    at annulus magnitude while still probing thin coordinate bands.
    """
    n_iso = count // 2
    n_log = count - n_iso
    dirs = rng.standard_normal((n_iso, dim))
    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    radii = scale * (lo_frac + (1.0 - lo_frac) * rng.random((n_iso, 1)))
    iso = dirs / norms * radii
    exponents = rng.uniform(np.log(LOG_FLOOR * scale), np.log(scale), (n_log, dim))
    signs = rng.integers(0, 2, (n_log, dim)) * 2 - 1
    logs = signs * np.exp(exponents)
    if dim > 1:
        pivots = rng.integers(0, dim, n_log)
        pivot_mag = scale * (max(lo_frac, 0.25) +
                             (1.0 - max(lo_frac, 0.25)) * rng.random(n_log))
        logs[np.arange(n_log), pivots] = np.sign(
            logs[np.arange(n_log), pivots]) * pivot_mag
    return np.concatenate([iso, logs], axis=0)


def _norm_window(mode: str, scale: float, ratio: float) -> tuple[float, float]:
    if mode == "annulus":
        return ratio * scale, scale
    if mode == "ball":
        return 1e-9 * scale, scale
    if mode == "far":
        return scale, scale / ratio
    raise ValueError(mode)


def _collect(sset: DefinableSet, p: np.ndarray, scale: float, cfg: AnalysisConfig,
             rng: np.random.Generator, target: int, mode: str) -> list[PointOnSet]:
    """Draw proposals in batches until ``target`` accepted points or budget out."""
    lo, hi = _norm_window(mode, scale, cfg.scale_ratio)
    n = sset.ambient_dim
    accepted: list[PointOnSet] = []
    budget = OVERSAMPLE_BUDGET * target
    spent = 0
    t_param = None
    if sset.variant == PARAMETRIC:
        if np.linalg.norm(p) == 0.0:
            t_param = np.zeros(sset.declared_dim)
        else:
            t_param, _ = parameter_project(sset, p, cfg)
    while len(accepted) < target and spent < budget:
        batch = min(max(4 * (target - len(accepted)), 256), budget - spent)
        spent += batch
        if sset.variant == IMPLICIT:
            if mode == "far":
                seeds = _mixed_offsets(rng, batch, n, hi, lo / hi)
                center = np.zeros(n)
            else:
                seeds = p + _mixed_offsets(rng, batch, n, hi, max(lo / hi, 1e-6))
                center = p
            X, res, ineq_ok = gauss_newton_batch(sset, seeds, cfg,
                                                 center=center, window=(lo, hi))
            ok = (res <= cfg.membership_tol) & ineq_ok
            params = None
        elif sset.variant == GRAPH:
            d = sset.declared_dim
            base_p = p[:d] if mode != "far" else np.zeros(d)
            base = base_p + _mixed_offsets(rng, batch, d, hi, max(lo / hi, 1e-6))
            X = sset.graph_points(base)
            res = np.zeros(batch)
            ok = np.ones(batch, dtype=bool)
            params = base
        else:  # parametric
            d = sset.declared_dim
            r_t = hi ** (1.0 / sset.mapping.max_degree())
            center = t_param if mode != "far" else np.zeros(d)
            params = center + _mixed_offsets(rng, batch, d, r_t, 1e-6)
            X = sset.parametric_points(params)
            res = np.zeros(batch)
            ok = np.ones(batch, dtype=bool)
        offs = X - (p if mode != "far" else 0.0)
        norms = np.linalg.norm(offs, axis=1)
        ok &= (norms >= lo) & (norms <= hi)
        idx = np.flatnonzero(ok)
        reg = np.zeros(batch, dtype=bool)
        if idx.size:
            reg_idx = regular_mask(sset, X[idx],
                                   params[idx] if params is not None else None)
            reg[idx] = reg_idx
        for i in idx:
            accepted.append(PointOnSet(X[i], float(res[i]), bool(reg[i]),
                                       params[i] if params is not None else None))
            if len(accepted) >= target:
                break
    return accepted


_CACHE: dict = {}
_CACHE_CAP = 512


def _cached(key, build):
    if key in _CACHE:
        return _CACHE[key]
    value = build()
    if len(_CACHE) >= _CACHE_CAP:
        _CACHE.clear()
    _CACHE[key] = value
    return value


def sample_annulus(sset: DefinableSet, p, scale: float, cfg: AnalysisConfig,
                   purpose: str = "annulus", target: int | None = None,
                   mode: str = "annulus") -> ScaleSample:
    """Up to samples_per_scale on-set points with |x - p| in [ratio*s, s].

    Results are memoized on (set identity, point, scale, purpose, config),
    which is sound because sampling is a pure function of that key.
    """
    p = np.asarray(p, dtype=float)
    target = cfg.samples_per_scale if target is None else target
    key = (id(sset), _point_key(p), float(scale), purpose, target, mode,
           tuple(sorted(cfg.to_dict().items())))

    def build():
        rng = stream(cfg, sset.name, _point_key(p), float(scale), purpose, mode)
        return _collect(sset, p, scale, cfg, rng, target, mode)

    pts = _cached(key, build)
    if len(pts) < 10:
        raise EmptySample(
            f"{sset.name}: {len(pts)} point(s) at scale {scale:g} after oversampling")
    return ScaleSample(scale, pts)


def sample_far_field(sset: DefinableSet, radius: float, cfg: AnalysisConfig,
                     purpose: str = "far", target: int | None = None) -> ScaleSample:
    """On-set points with norm in [radius, radius/ratio]."""
    target = cfg.samples_per_scale if target is None else target
    key = (id(sset), "inf", float(radius), purpose, target,
           tuple(sorted(cfg.to_dict().items())))

    def build():
        rng = stream(cfg, sset.name, "inf", float(radius), purpose)
        return _collect(sset, np.zeros(sset.ambient_dim), radius, cfg, rng,
                        target, "far")

    pts = _cached(key, build)
    if len(pts) < 10:
        raise EmptySample(f"{sset.name}: far field empty at radius {radius:g}")
    return ScaleSample(radius, pts)


def _reproject_kicked(sset: DefinableSet, anchors: list[PointOnSet],
                      kicks: np.ndarray, cfg: AnalysisConfig) -> list[PointOnSet | None]:
    """Second endpoints for local pairs: anchor + kick pulled back on-set."""
    out: list[PointOnSet | None] = [None] * len(anchors)
    if not anchors:
        return out
    if sset.variant == IMPLICIT:
        seeds = np.stack([a.coords for a in anchors]) + kicks
        X, res, ineq_ok = gauss_newton_batch(sset, seeds, cfg)
        ok = (res <= cfg.membership_tol) & ineq_ok
        for i in np.flatnonzero(ok):
            out[i] = PointOnSet(X[i], float(res[i]))
    else:
        base = np.stack([a.param for a in anchors]) + kicks
        X = sset.graph_points(base) if sset.variant == GRAPH \
            else sset.parametric_points(base)
        for i in range(len(anchors)):
            out[i] = PointOnSet(X[i], 0.0, param=base[i])
    return out


def sample_pairs(sset: DefinableSet, p, scale: float,
                 cfg: AnalysisConfig) -> list[tuple[PointOnSet, PointOnSet]]:
    """Point pairs within distance ``scale`` of p, separation >= 1e-3*scale.

    Half the budget pairs two independent clouds (annulus x ball), which
    covers wide secants; the other half re-projects a log-uniform kick of
    an annulus point, which is the only affordable way to realize the
    tangent-like secants whose separation shrinks faster than the scale.
    """
    p = np.asarray(p, dtype=float)
    half = cfg.pairs_per_scale // 2
    n_kick = cfg.pairs_per_scale - half
    try:
        cloud_a = sample_annulus(sset, p, scale, cfg, purpose="pairs-a",
                                 target=max(half, n_kick))
        cloud_b = sample_annulus(sset, p, scale, cfg, purpose="pairs-b",
                                 target=half, mode="ball")
    except EmptySample:
        raise
    rng = stream(cfg, sset.name, _point_key(p), float(scale), "pairs-kick")
    pairs: list[tuple[PointOnSet, PointOnSet]] = []
    sep_floor = MIN_PAIR_SEP * scale
    for a, b in zip(cloud_a.points[:half], cloud_b.points):
        if np.linalg.norm(a.coords - b.coords) >= sep_floor:
            pairs.append((a, b))
    pairs.extend(_kick_pairs(sset, cloud_a.points, n_kick, scale, rng, cfg,
                             sep_floor, center=p, max_norm=scale))
    if len(pairs) < 5:
        raise EmptySample(f"{sset.name}: only {len(pairs)} usable pairs at scale {scale:g}")
    return pairs


def _kick_pairs(sset, anchor_pool, n_kick, scale, rng, cfg, sep_floor,
                center, max_norm):
    anchors = [anchor_pool[i % len(anchor_pool)] for i in range(n_kick)]
    if sset.variant == IMPLICIT:
        kick_dim = sset.ambient_dim
        kick_hi = 0.5 * scale
        kick_lo = 2.0 * sep_floor
    else:
        kick_dim = sset.declared_dim
        if sset.variant == PARAMETRIC:
            kick_hi = 0.5 * scale ** (1.0 / sset.mapping.max_degree())
        else:
            kick_hi = 0.5 * scale
        kick_lo = LOG_FLOOR * kick_hi
    sizes = np.exp(rng.uniform(np.log(kick_lo), np.log(kick_hi), n_kick))
    dirs = rng.standard_normal((n_kick, kick_dim))
    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    kicks = dirs / norms * sizes[:, None]
    mates = _reproject_kicked(sset, anchors, kicks, cfg)
    out = []
    for a, b in zip(anchors, mates):
        if b is None:
            continue
        sep = np.linalg.norm(a.coords - b.coords)
        if sep < sep_floor:
            continue
        bnorm = np.linalg.norm(b.coords - center)
        if max_norm is not None and bnorm > max_norm:
            continue
        out.append((a, b))
    return out


def sample_far_pairs(sset: DefinableSet, radius: float,
                     cfg: AnalysisConfig) -> list[tuple[PointOnSet, PointOnSet]]:
    """Pairs with both endpoints of norm >= radius (far-field secants)."""
    half = cfg.pairs_per_scale // 2
    n_kick = cfg.pairs_per_scale - half
    cloud_a = sample_far_field(sset, radius, cfg, purpose="far-pairs-a",
                               target=max(half, n_kick))
    cloud_b = sample_far_field(sset, radius, cfg, purpose="far-pairs-b", target=half)
    rng = stream(cfg, sset.name, "inf", float(radius), "far-pairs-kick")
    sep_floor = MIN_PAIR_SEP * radius
    pairs: list[tuple[PointOnSet, PointOnSet]] = []
    for a, b in zip(cloud_a.points[:half], cloud_b.points):
        if np.linalg.norm(a.coords - b.coords) >= sep_floor:
            pairs.append((a, b))
    pairs.extend(_kick_pairs(sset, cloud_a.points, n_kick, radius, rng, cfg,
                             sep_floor, center=np.zeros(sset.ambient_dim),
                             max_norm=None))
    if len(pairs) < 5:
        raise EmptySample(f"{sset.name}: only {len(pairs)} far pairs at radius {radius:g}")
    return pairs

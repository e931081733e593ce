"""Analysis configuration: every tunable numeric lives here.

All estimators take an :class:`AnalysisConfig`; nothing else reads global
state, so two runs with equal configs (seed included) are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, asdict


@dataclass(frozen=True)
class AnalysisConfig:
    """Scale ladder, tolerances, sample budgets and the master seed.

    scale_t0 / scale_ratio / num_scales define the dyadic ladder
    ``t0 * ratio**k``; persistence_scales is both the minimum number of
    rungs a direction cluster must appear on and the width of the
    finest-scale window used for linearity verdicts.
    """

    seed: int = 0
    scale_t0: float = 0.5
    scale_ratio: float = 0.5
    num_scales: int = 10
    samples_per_scale: int = 400
    pairs_per_scale: int = 400
    membership_tol: float = 1e-10
    angular_tol: float = 0.05
    linearity_residual_tol: float = 0.02
    persistence_scales: int = 3
    knn_k: int = 12
    max_newton_iters: int = 100

    def __post_init__(self) -> None:
        if not (0.0 < self.scale_ratio < 1.0):
            raise ValueError(f"scale_ratio must lie in (0,1), got {self.scale_ratio}")
        if not (0.0 < self.angular_tol < math.pi / 4):
            raise ValueError(f"angular_tol must lie in (0, pi/4), got {self.angular_tol}")
        for name in ("num_scales", "samples_per_scale", "pairs_per_scale",
                     "persistence_scales", "knn_k", "max_newton_iters"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.scale_t0 <= 0 or self.membership_tol <= 0 or self.linearity_residual_tol <= 0:
            raise ValueError("scale_t0, membership_tol and linearity_residual_tol must be positive")

    def replace(self, **overrides) -> "AnalysisConfig":
        data = asdict(self)
        data.update(overrides)
        return AnalysisConfig(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_overrides(cls, overrides: dict) -> "AnalysisConfig":
        """Build a config from string key=value overrides (CLI surface)."""
        known = {f.name: f.type for f in fields(cls)}
        parsed = {}
        for key, raw in overrides.items():
            if key not in known:
                raise KeyError(f"unknown config key: {key}")
            current = getattr(cls(), key)
            parsed[key] = type(current)(raw)
        return cls(**parsed)

"""Query-point sampling for waypoint scoring."""

from __future__ import annotations

import numpy as np

from ..rng import DeterministicRng
from .types import PolicyError, QuerySet


def sample_queries(workspace_lo, workspace_hi, m: int, rng: DeterministicRng) -> QuerySet:
    """Stage-1 set: m points uniform in the workspace box."""
    lo = np.asarray(workspace_lo, dtype=float)
    hi = np.asarray(workspace_hi, dtype=float)
    if m < 1:
        raise PolicyError(f"need at least one query point, got {m}")
    if (lo > hi).any():
        raise PolicyError(f"empty workspace box: {lo.tolist()} > {hi.tolist()}")
    u = rng.uniform(size=(m, 3))
    return QuerySet(points=lo + u * (hi - lo), stage=1)


def resample_queries(center, radius: float, m: int, rng: DeterministicRng, stage: int = 2) -> QuerySet:
    """Refinement set: m points uniform in ball(center, radius)."""
    if m < 1:
        raise PolicyError(f"need at least one query point, got {m}")
    if radius <= 0:
        raise PolicyError(f"radius must be positive, got {radius}")
    center = np.asarray(center, dtype=float)
    direction = rng.normal(size=(m, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radii = radius * rng.uniform(size=(m, 1)) ** (1.0 / 3.0)
    return QuerySet(points=center + direction * radii, stage=stage, center=center, radius=radius)

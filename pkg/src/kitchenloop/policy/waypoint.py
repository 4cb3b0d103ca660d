"""Coarse-to-fine waypoint selection over an injectable score function.

Stage 1 scores uniform workspace samples; each refinement stage resamples
inside a shrinking ball around the running argmax. The previous argmax is
always re-included at candidate index 0, which makes the per-stage best
score monotonically non-decreasing for any deterministic score function.
"""

from __future__ import annotations

import numpy as np

from ..rng import DeterministicRng
from .queries import resample_queries, sample_queries
from .types import PolicyError


def select_waypoint(
    score_fn,
    workspace_lo,
    workspace_hi,
    rng: DeterministicRng,
    m_coarse: int = 512,
    m_refine: int = 64,
    radius: float = 0.10,
    decay: float = 0.5,
    stages: int = 2,
    anchors=None,
):
    """Returns (best point (3,), per-stage trace list).

    `anchors` (K, 3) adds fixed stage-1 candidates alongside the uniform
    draw — callers pass observed cloud points so the coarse stage always
    covers actual scene geometry.
    """
    if stages < 1:
        raise PolicyError(f"stages must be >= 1, got {stages}")
    qs = sample_queries(workspace_lo, workspace_hi, m_coarse, rng)
    points = qs.points
    if anchors is not None and len(anchors):
        points = np.vstack([np.asarray(anchors, dtype=float), points])
    scores = np.asarray(score_fn(points), dtype=float)
    best = int(np.argmax(scores))  # ties resolve to the lowest index
    best_point = points[best]
    trace = [{"stage": 1, "best_score": float(scores[best]),
              "best_point": best_point.tolist(), "n_candidates": int(len(scores))}]

    for stage in range(2, stages + 1):
        r = radius * decay ** (stage - 2)
        ball = resample_queries(best_point, r, m_refine, rng, stage=stage)
        candidates = np.vstack([best_point[None, :], ball.points])
        scores = np.asarray(score_fn(candidates), dtype=float)
        best = int(np.argmax(scores))
        best_point = candidates[best]
        trace.append({"stage": stage, "best_score": float(scores[best]),
                      "best_point": best_point.tolist(), "n_candidates": int(len(scores))})
    return best_point, trace

"""Value types passed between the policy's featurization and scoring stages."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class PolicyError(Exception):
    pass


@dataclass
class FusedPointCloud:
    positions: np.ndarray   # N x 3
    semantic: np.ndarray    # N x C_s
    geometric: np.ndarray   # N x C_g
    fused: np.ndarray       # N x D

    def __post_init__(self):
        n = self.positions.shape[0]
        for name in ("positions", "semantic", "geometric", "fused"):
            arr = getattr(self, name)
            if arr.shape[0] != n:
                raise PolicyError(f"{name} has {arr.shape[0]} rows, expected {n}")
            if not np.isfinite(arr).all():
                raise PolicyError(f"non-finite values in {name}")
        if n > 4096:
            raise PolicyError(f"point cloud exceeds the 4096-point budget: {n}")


@dataclass
class LanguageEmbedding:
    vector: np.ndarray      # D_l, unit norm
    template_id: str

    def __post_init__(self):
        if not np.isfinite(self.vector).all():
            raise PolicyError("non-finite language embedding")
        norm = float(np.linalg.norm(self.vector))
        if abs(norm - 1.0) > 1e-9:
            raise PolicyError(f"language embedding must be unit norm, got {norm}")


@dataclass
class QuerySet:
    """Candidate waypoint positions for one scoring pass.

    Stage 1 covers the workspace box; stages >= 2 are confined to a ball
    around the previous argmax.
    """

    points: np.ndarray      # M x 3
    stage: int
    center: np.ndarray | None = None
    radius: float | None = None

    def __post_init__(self):
        if self.stage < 1:
            raise PolicyError(f"stage must be >= 1, got {self.stage}")
        if self.stage >= 2:
            if self.center is None or self.radius is None:
                raise PolicyError("refinement stages require center and radius")
            dists = np.linalg.norm(self.points - np.asarray(self.center), axis=1)
            if (dists > self.radius + 1e-12).any():
                raise PolicyError("refinement sample outside its ball")


@dataclass
class KeyframeAction:
    a_trans: np.ndarray     # 3
    a_rot: np.ndarray       # 3 x 72 one-hot
    a_open: float
    a_collide: float

    def __post_init__(self):
        self.a_trans = np.asarray(self.a_trans, dtype=float)
        self.a_rot = np.asarray(self.a_rot, dtype=float)
        if self.a_rot.shape != (3, 72):
            raise PolicyError(f"a_rot must be 3x72, got {self.a_rot.shape}")
        row_sums = self.a_rot.sum(axis=1)
        if not (np.isin(self.a_rot, (0.0, 1.0)).all() and (row_sums == 1.0).all()):
            raise PolicyError("a_rot rows must be one-hot")
        if not 0.0 <= self.a_open <= 1.0:
            raise PolicyError(f"a_open out of [0,1]: {self.a_open}")
        if not 0.0 <= self.a_collide <= 1.0:
            raise PolicyError(f"a_collide out of [0,1]: {self.a_collide}")

    def rotation_bins(self) -> np.ndarray:
        return self.a_rot.argmax(axis=1)

    def to_doc(self) -> dict:
        return {
            "a_trans": self.a_trans.tolist(),
            "rot_bins": self.rotation_bins().tolist(),
            "a_open": float(self.a_open),
            "a_collide": float(self.a_collide),
        }

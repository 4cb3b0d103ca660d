"""Pinhole camera model and 2D-feature back-projection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import PolicyError


@dataclass(frozen=True)
class CameraModel:
    fx: float
    fy: float
    cx: float
    cy: float
    rotation: np.ndarray     # 3x3 camera->world
    translation: np.ndarray  # 3
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise PolicyError(f"focal lengths must be positive: fx={self.fx}, fy={self.fy}")
        r = np.asarray(self.rotation, dtype=float)
        if r.shape != (3, 3) or np.abs(r @ r.T - np.eye(3)).max() > 1e-9:
            raise PolicyError("rotation must be orthonormal within 1e-9")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float))


def backproject(feature_map: np.ndarray, depth: np.ndarray, cam: CameraModel):
    """Lift a feature map through a depth image into world-space point features.

    Pixels are scanned row-major; zero-depth pixels are dropped. Returns
    (K x 3 positions, K x C features).
    """
    if feature_map.ndim != 3:
        raise PolicyError(f"feature map must be HxWxC, got shape {feature_map.shape}")
    if depth.shape != feature_map.shape[:2]:
        raise PolicyError(
            f"depth shape {depth.shape} does not match feature map {feature_map.shape[:2]}"
        )
    if (depth < 0).any():
        raise PolicyError("negative depth")
    h, w = depth.shape
    if (h, w) != (cam.height, cam.width):
        raise PolicyError(f"image is {h}x{w} but camera expects {cam.height}x{cam.width}")

    v, u = np.nonzero(depth > 0)  # np.nonzero scans row-major
    d = depth[v, u]
    x = (u - cam.cx) * d / cam.fx
    y = (v - cam.cy) * d / cam.fy
    cam_pts = np.stack([x, y, d], axis=1)
    world = cam_pts @ cam.rotation.T + cam.translation
    return world, feature_map[v, u]


def project(cam: CameraModel, points: np.ndarray):
    """Inverse of backproject: world points to (u, v, d). Used as the round-trip oracle."""
    cam_pts = (np.asarray(points) - cam.translation) @ cam.rotation
    d = cam_pts[:, 2]
    u = cam_pts[:, 0] * cam.fx / d + cam.cx
    v = cam_pts[:, 1] * cam.fy / d + cam.cy
    return u, v, d

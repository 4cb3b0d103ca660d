"""k-NN relative-offset geometric features (the point-branch of featurization).

Each point aggregates its k nearest neighbors' offsets through a two-layer
pointwise map with a mean pool over the neighborhood. Offsets are relative,
so features are invariant to global translation and equivariant under
permutation of the input rows. k is clamped to N when the cloud is smaller
than the neighborhood size.
"""

from __future__ import annotations

import numpy as np

from .types import PolicyError

# Neighbor offsets are a few centimeters; dividing by a typical spacing puts
# them on the unit scale of the other feature channels, so local shape is
# visible to the fused representation from the first gradient step.
REL_SCALE = 25.0


def knn_indices(positions: np.ndarray, k: int) -> np.ndarray:
    """Self-inclusive k-nearest-neighbor indices, N x k, stable under ties."""
    n = positions.shape[0]
    if n < 1:
        raise PolicyError("cannot encode an empty point cloud")
    k = min(k, n)
    diff = positions[:, None, :] - positions[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    order = np.argsort(d2, axis=1, kind="stable")
    return order[:, :k]


def encode_geometry(positions: np.ndarray, params: dict, k: int = 8, idx: np.ndarray | None = None) -> np.ndarray:
    """N x C_g features; `idx` lets callers reuse precomputed neighborhoods."""
    positions = np.asarray(positions, dtype=float)
    if idx is None:
        idx = knn_indices(positions, k)
    rel = (positions[idx] - positions[:, None, :]) * REL_SCALE   # N x k x 3
    h = np.maximum(rel @ params["geo_w1"] + params["geo_b1"], 0.0)
    pooled = h.mean(axis=1)                               # N x H
    return pooled @ params["geo_w2"] + params["geo_b2"]

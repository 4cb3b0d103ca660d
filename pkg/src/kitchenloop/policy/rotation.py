from __future__ import annotations

import math

import numpy as np

from .types import PolicyError

N_BINS = 72
BIN_DEGREES = 360.0 / N_BINS


def bin_rotation(angle_degrees: float) -> int:
    """Half-open 5-degree bins: [0,5) -> 0, [5,10) -> 1, ..."""
    if not math.isfinite(angle_degrees):
        raise PolicyError(f"non-finite rotation angle: {angle_degrees!r}")
    return int(math.floor((angle_degrees % 360.0) / BIN_DEGREES)) % N_BINS


def decode_bin(index: int) -> float:
    """Bin center in degrees: bin 0 -> 2.5."""
    if not 0 <= index < N_BINS:
        raise PolicyError(f"rotation bin out of range: {index}")
    return index * BIN_DEGREES + BIN_DEGREES / 2.0


def rotation_one_hot(angles_degrees) -> np.ndarray:
    """Per-axis one-hot target, 3 x 72, for extrinsic X-Y-Z Euler angles."""
    angles = list(angles_degrees)
    if len(angles) != 3:
        raise PolicyError(f"expected 3 Euler angles, got {len(angles)}")
    out = np.zeros((3, N_BINS))
    for axis, a in enumerate(angles):
        out[axis, bin_rotation(a)] = 1.0
    return out

"""Keyframe extraction from dense gripper trajectories.

A timestep is a keyframe when the gripper open flag flips or the gripper
comes to rest (speed drops below a threshold it was at or above on the
previous step). The final timestep is always a keyframe.
"""

from __future__ import annotations

import numpy as np

SPEED_EPS = 1e-6


def extract_keyframes(positions: np.ndarray, open_flags, eps: float = SPEED_EPS) -> list[int]:
    positions = np.asarray(positions, dtype=float)
    open_flags = [bool(f) for f in open_flags]
    t = positions.shape[0]
    if t < 1 or t != len(open_flags):
        raise ValueError(f"trajectory of {t} poses with {len(open_flags)} open flags")

    keyframes: set[int] = {t - 1}
    speeds = np.full(t, np.inf)
    if t > 1:
        speeds[1:] = np.linalg.norm(np.diff(positions[:, :3], axis=0), axis=1)
    for k in range(1, t):
        if open_flags[k] != open_flags[k - 1]:
            keyframes.add(k)
        if speeds[k] < eps <= speeds[k - 1]:
            keyframes.add(k)
    return sorted(keyframes)

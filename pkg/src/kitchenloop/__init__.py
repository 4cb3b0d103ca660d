"""Closed-loop kitchen manipulation: simulator, 3D keyframe policy, planner loop."""

__version__ = "0.1.0"

from .canonical import canonical_bytes, canonical_dumps, derive_seed, digest, q6
from .rng import DeterministicRng

__all__ = [
    "DeterministicRng",
    "canonical_bytes",
    "canonical_dumps",
    "derive_seed",
    "digest",
    "q6",
    "__version__",
]

"""Deterministic, serializable random streams.

A stream's entire state is the pair ``(seed, counter)``. Every draw call
derives a fresh counter-keyed Philox generator and bumps the counter, so
a stream restored from its two serialized integers continues exactly
where it left off, on any platform.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _derive_key(seed: int, counter: int) -> int:
    raw = hashlib.blake2b(f"{seed}:{counter}".encode(), digest_size=16).digest()
    return int.from_bytes(raw, "little")


class DeterministicRng:
    """Counter-based random stream with value-like serialization."""

    __slots__ = ("seed", "counter")

    def __init__(self, seed: int, counter: int = 0):
        self.seed = int(seed)
        self.counter = int(counter)

    def _generator(self) -> np.random.Generator:
        key = _derive_key(self.seed, self.counter)
        self.counter += 1
        return np.random.Generator(np.random.Philox(key=key))

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._generator().uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._generator().normal(loc, scale, size)

    def integers(self, low, high=None, size=None):
        return self._generator().integers(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self._generator().permutation(n)

    def spawn(self, *tags) -> "DeterministicRng":
        """Derive an independent stream keyed by tags; does not advance this one."""
        joined = "\x1f".join([str(self.seed), *[str(t) for t in tags]]).encode()
        sub = int.from_bytes(hashlib.blake2b(joined, digest_size=8).digest(), "little")
        return DeterministicRng(sub & (2**63 - 1))

    def copy(self) -> "DeterministicRng":
        return DeterministicRng(self.seed, self.counter)

    def state_dict(self) -> dict:
        return {"seed": self.seed, "counter": self.counter}

    @classmethod
    def from_state(cls, doc: dict) -> "DeterministicRng":
        return cls(int(doc["seed"]), int(doc["counter"]))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DeterministicRng)
            and self.seed == other.seed
            and self.counter == other.counter
        )

    def __repr__(self) -> str:
        return f"DeterministicRng(seed={self.seed}, counter={self.counter})"

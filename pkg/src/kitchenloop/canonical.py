"""Canonical, byte-stable JSON serialization.

Every golden file, episode log, report and checkpoint header in this
project is serialized through :func:`canonical_dumps` so that two runs
with identical inputs produce identical bytes: keys are sorted, floats
are written with exactly six decimal places, and non-finite numbers are
rejected outright.
"""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any

import numpy as np

PRECISION = 6


def q6(x: float) -> float:
    """Quantize to the 6-decimal grid used by canonical serialization.

    World geometry is stored pre-quantized so that serialize/deserialize
    is the identity. ``+0.0`` normalizes negative zero.
    """
    v = round(float(x), PRECISION) + 0.0
    if not math.isfinite(v):
        raise ValueError(f"non-finite value cannot be quantized: {x!r}")
    return v


def q6_tuple(values) -> tuple[float, ...]:
    return tuple(q6(v) for v in values)


def _format_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"non-finite float in canonical document: {x!r}")
    s = f"{x:.{PRECISION}f}"
    if s == f"-0.{'0' * PRECISION}":
        s = s[1:]
    return s


def _canon(obj: Any, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=True))
    elif isinstance(obj, np.ndarray):
        _canon(obj.tolist(), out)
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _canon(item, out)
        out.append("]")
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise TypeError(f"canonical documents require string keys, got {key!r}")
            if i:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=True))
            out.append(":")
            _canon(obj[key], out)
        out.append("}")
    else:
        raise TypeError(f"type {type(obj).__name__} is not canonically serializable")


def canonical_dumps(obj: Any) -> str:
    out: list[str] = []
    _canon(obj, out)
    return "".join(out)


def canonical_bytes(obj: Any) -> bytes:
    return canonical_dumps(obj).encode("utf-8")


def digest(obj: Any) -> str:
    """Stable 128-bit hex digest of a canonical document."""
    return hashlib.blake2b(canonical_bytes(obj), digest_size=16).hexdigest()


def derive_seed(*parts) -> int:
    """Derive a 63-bit seed from a sequence of labels (suite id, cell, trial...)."""
    joined = "\x1f".join(str(p) for p in parts).encode("utf-8")
    raw = hashlib.blake2b(joined, digest_size=8).digest()
    return int.from_bytes(raw, "little") & (2**63 - 1)

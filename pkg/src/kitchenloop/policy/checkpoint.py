"""Binary checkpoint format for trained parameters.

Layout: magic, little-endian u32 header length, canonical-JSON header
(schema version, full config document, config hash), then each parameter
sorted by name as <u32 name length, name bytes, u32 ndim, u32 dims...,
little-endian float64 data>. Floats round-trip bit exactly.
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

from ..canonical import canonical_dumps
from .config import PolicyConfig
from .types import PolicyError

MAGIC = b"KLP1"
SCHEMA_VERSION = 1


def save_checkpoint(path, params: dict, cfg: PolicyConfig) -> None:
    header = canonical_dumps({
        "schema_version": SCHEMA_VERSION,
        "config": cfg.to_doc(),
        "config_hash": cfg.config_hash(),
    }).encode("utf-8")
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for name in sorted(params):
            arr = np.ascontiguousarray(params[name], dtype="<f8")
            name_b = name.encode("utf-8")
            fh.write(struct.pack("<I", len(name_b)))
            fh.write(name_b)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())
    os.replace(tmp, path)


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise PolicyError(f"truncated checkpoint while reading {what}")
    return data


def load_checkpoint(path):
    """Returns (params, cfg). Raises PolicyError on any corruption."""
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise PolicyError("not a checkpoint file (bad magic)")
        (hlen,) = struct.unpack("<I", _read_exact(fh, 4, "header length"))
        try:
            header = json.loads(_read_exact(fh, hlen, "header"))
        except json.JSONDecodeError as exc:
            raise PolicyError(f"corrupt checkpoint header: {exc}") from exc
        if header.get("schema_version") != SCHEMA_VERSION:
            raise PolicyError(
                f"unsupported checkpoint schema {header.get('schema_version')!r}")
        cfg = PolicyConfig.from_doc(header["config"])
        if cfg.config_hash() != header["config_hash"]:
            raise PolicyError("checkpoint config hash mismatch")
        params = {}
        while True:
            raw = fh.read(4)
            if not raw:
                break
            if len(raw) != 4:
                raise PolicyError("truncated checkpoint while reading name length")
            (nlen,) = struct.unpack("<I", raw)
            name = _read_exact(fh, nlen, "parameter name").decode("utf-8")
            (ndim,) = struct.unpack("<I", _read_exact(fh, 4, f"{name} ndim"))
            shape = struct.unpack(f"<{ndim}I", _read_exact(fh, 4 * ndim, f"{name} shape"))
            count = int(np.prod(shape, dtype=np.int64)) if ndim else 1
            data = _read_exact(fh, 8 * count, f"{name} data")
            params[name] = np.frombuffer(data, dtype="<f8").reshape(shape).copy()
    return params, cfg

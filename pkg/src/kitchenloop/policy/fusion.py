from __future__ import annotations

import numpy as np

from .types import PolicyError


def fuse_features(semantic: np.ndarray, geometric: np.ndarray,
                  lang_vec: np.ndarray, params: dict) -> np.ndarray:
    """Instruction-conditioned point content.

    Two-layer relu encoder over [semantic | geometric | instruction], with
    the instruction embedding broadcast to every row. Folding the instruction
    in here puts instruction-object agreement directly into each point's
    features instead of leaving it for downstream attention to reconstruct.
    """
    if semantic.shape[0] != geometric.shape[0]:
        raise PolicyError(
            f"semantic has {semantic.shape[0]} rows but geometric has {geometric.shape[0]}"
        )
    lang = np.broadcast_to(lang_vec, (semantic.shape[0], lang_vec.shape[-1]))
    both = np.concatenate([semantic, geometric, lang], axis=-1)
    hidden = np.maximum(both @ params["fuse_w1"] + params["fuse_b1"], 0.0)
    out = hidden @ params["fuse_w2"] + params["fuse_b2"]
    if not np.isfinite(out).all():
        raise PolicyError("non-finite fused features")
    return out

"""Inference-time entry points: featurization, query scoring, action prediction."""

from __future__ import annotations

import numpy as np

from ..rng import DeterministicRng
from ..world.geometry import DEFAULT_KITCHEN
from ..world.sim import Observation
from .config import PolicyConfig
from .fusion import fuse_features
from .geometry_encoder import encode_geometry
from .network import _softmax, attention_stack, fourier_features, proprio_features
from .types import FusedPointCloud, KeyframeAction, LanguageEmbedding, PolicyError, QuerySet
from .waypoint import select_waypoint


def embed_language(params: dict, cfg: PolicyConfig, template_id: str) -> LanguageEmbedding:
    try:
        row = cfg.template_index(template_id)
    except KeyError as exc:
        raise PolicyError(str(exc)) from exc
    e = params["lang_embed"][row]
    norm = float(np.linalg.norm(e))
    if norm < 1e-12:
        raise PolicyError("zero-norm language embedding")
    return LanguageEmbedding(vector=e / norm, template_id=template_id)


def featurize(params: dict, cfg: PolicyConfig, positions: np.ndarray, semantic: np.ndarray,
              lang: LanguageEmbedding) -> FusedPointCloud:
    geometric = encode_geometry(positions, params, k=cfg.knn_k)
    fused = fuse_features(semantic, geometric, lang.vector, params)
    return FusedPointCloud(positions=np.asarray(positions, dtype=float),
                           semantic=np.asarray(semantic, dtype=float),
                           geometric=geometric, fused=fused)


def _build_kv(params: dict, cfg: PolicyConfig, fused: FusedPointCloud,
              lang: LanguageEmbedding, proprio) -> np.ndarray:
    phi = fourier_features(fused.positions, cfg.n_freqs)
    kv_pts = np.concatenate([fused.fused, phi], axis=-1)
    lang_tok = lang.vector @ params["lang_proj_w"] + params["lang_proj_b"]
    lang_kv = np.concatenate([lang_tok, np.zeros(cfg.pos_dim)])
    prop_in = proprio_features(np.asarray(proprio, dtype=float)[None, :], cfg.n_freqs)[0]
    prop_tok = prop_in @ params["prop_w"] + params["prop_b"]
    prop_kv = np.concatenate([prop_tok, prop_in[: cfg.pos_dim]])
    return np.concatenate([kv_pts, lang_kv[None, :], prop_kv[None, :]], axis=0)


def lateral_center(params: dict, cfg: PolicyConfig, fused: FusedPointCloud,
                   lang: LanguageEmbedding) -> np.ndarray:
    """Mean positional feature of the points matching the instruction.

    Mirrors the training forward's selection pass: a bilinear match between
    each point's semantic one-hot and the instruction embedding, z-scored
    and softmaxed into a selection over the cloud. Every point of the
    matching class shares one logit, so the selection averages evenly over
    the instructed object's surface. Depends only on the scene and the
    instruction, never on any query set.
    """
    raw = (fused.semantic @ params["sel_w"]) @ lang.vector
    c = raw - raw.mean()
    z = c / np.sqrt((c ** 2).mean() + 1e-8)
    sel = _softmax(z * params["sel_gain"][0])
    return sel @ fourier_features(fused.positions, cfg.n_freqs)


def score_queries(params: dict, cfg: PolicyConfig, fused: FusedPointCloud,
                  lang: LanguageEmbedding, proprio, queries: QuerySet,
                  pos_star: np.ndarray | None = None):
    """Scores for each query point plus the token feature f_t.

    Queries only ever attend the kv tokens, so each score depends on its own
    query point alone and f_t does not depend on the query set at all.
    ``pos_star`` is the scene's lateral-center feature; it is fixed across
    query sets, so repeat callers pass it in precomputed.
    """
    kv = _build_kv(params, cfg, fused, lang, proprio)[None, :, :]
    phi_q = fourier_features(queries.points[None, :, :], cfg.n_freqs)
    q_emb = phi_q @ params["query_w"] + params["query_b"]
    token = np.broadcast_to(params["token_t"], (1, 1, cfg.d_model))
    x = np.concatenate([token, q_emb], axis=1)
    x, layers = attention_stack(params, cfg, kv, x, check=True)
    f_t = x[0, 0]
    feat = layers[-1]["u"][0, 1:] if layers else x[0, 1:]
    scores = feat @ f_t
    if layers:
        if pos_star is None:
            pos_star = lateral_center(params, cfg, fused, lang)
        scores = scores + (phi_q[0] @ params["score_pos_w"]) @ pos_star
    if not np.isfinite(scores).all():
        raise PolicyError("non-finite scores output")
    return scores, f_t


def predict_action(params: dict, cfg: PolicyConfig, obs: Observation, template_id: str,
                   proprio, rng: DeterministicRng, workspace=None, stages: int | None = None) -> KeyframeAction:
    """Full keyframe-action prediction for one observation."""
    if workspace is None:
        workspace = DEFAULT_KITCHEN.workspace
    lo, hi = np.asarray(workspace.lo, dtype=float), np.asarray(workspace.hi, dtype=float)
    lang = embed_language(params, cfg, template_id)
    fused = featurize(params, cfg, obs.cloud_xyz, obs.cloud_sem, lang)
    pos_star = None if cfg.linear_only else lateral_center(params, cfg, fused, lang)

    def score_fn(points):
        qs = QuerySet(points=np.asarray(points, dtype=float), stage=1)
        return score_queries(params, cfg, fused, lang, proprio, qs,
                             pos_star=pos_star)[0]

    # The cloud points anchor the coarse stage: reach waypoints sit on scene
    # geometry, and anchoring skips spurious score ridges out in empty air.
    best_point, _ = select_waypoint(
        score_fn, lo, hi, rng,
        m_coarse=cfg.m_coarse, m_refine=cfg.m_refine,
        radius=cfg.refine_radius, decay=cfg.refine_decay,
        stages=cfg.stages if stages is None else stages,
        anchors=obs.cloud_xyz,
    )

    # Heads only need f_t, which is query-independent; score a single dummy query.
    dummy = QuerySet(points=lo[None, :], stage=1)
    _, f_t = score_queries(params, cfg, fused, lang, proprio, dummy,
                           pos_star=pos_star)
    rot_logits = (f_t @ params["head_rot_w"] + params["head_rot_b"]).reshape(3, cfg.n_rot_bins)
    a_rot = np.zeros_like(rot_logits)
    a_rot[np.arange(3), rot_logits.argmax(axis=1)] = 1.0
    a_open = 1.0 / (1.0 + np.exp(-(f_t @ params["head_open_w"] + params["head_open_b"][0])))
    a_collide = 1.0 / (1.0 + np.exp(-(f_t @ params["head_collide_w"] + params["head_collide_b"][0])))
    return KeyframeAction(a_trans=best_point, a_rot=a_rot,
                          a_open=float(a_open), a_collide=float(a_collide))

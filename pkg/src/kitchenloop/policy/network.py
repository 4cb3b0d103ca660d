"""The keyframe-action network: featurization, cross-attention, heads.

Everything here is hand-written numpy in double precision, forward and
backward. The layout:

- key/value tokens: each cloud point contributes [fused content | Fourier
  positional features], concatenated, so the attention projections decide
  separately how position enters keys and values. Point content is a
  two-layer relu encoder over [semantic one-hot | geometric descriptor |
  instruction embedding]: folding the instruction into every point makes
  "this point matches the instruction" a first-order feature of the values.
  (Routing the instruction only through a separate token leaves selectivity
  bilinear in <f_t, value>; that product of two small signals trains so
  slowly that optimization silences the language channel instead.) One
  language token (unit-normalized embedding lookup, zero positional block)
  and one proprioception token (positional block = gripper position
  features) complete the set, which is shared by every layer.
- query tokens: a learnable task token at index 0 followed by the query
  points. Layers are cross-attention only (queries never attend each
  other), so each query's feature is independent of the rest of the query
  set, and the token feature f_t is independent of the queries entirely.
- per layer: residual single-head attention (no output projection; values
  carry the bias) followed by a residual two-layer relu FFN. No layernorm.
- heads on f_t: 3x72 rotation logits, scalar openness and collision logits.
  Query scores are inner products <f_t, u_q> where u_q is the final layer's
  attention readout (a @ v) at that query, not its residual stream. The
  residual stream carries the raw positional embedding, and scoring it
  directly lets the net memorize absolute demo locations through the
  high-frequency octaves — a comb of spurious peaks that uniform negatives
  can never sample densely enough to flatten. The attended readout is a
  convex combination of value vectors, so a query's score depends on its
  position only through *what it attends to*, and suppression of empty
  space generalizes across locations. A second, global score term fixes
  what the local readout cannot see: where a query sits *within* one
  object's near-uniform surface. A bilinear match between each point's
  semantic one-hot and the instruction embedding selects the instructed
  object's points (softmax over z-scored match scores — every point of the
  matching class scores identically, so the selection spreads evenly over
  that object and nowhere else), and queries are scored by low-frequency
  positional agreement with the selection's mean positional feature. The
  low octaves make that a smooth lateral bowl centered on the selected
  mass's centroid — the face center — rather than a density comb peaked at
  the individual surface points.

Initialization is structural, not just scaled noise: the key projection's
positional block is paired with the query embedding so attention starts as
a multiscale locality kernel (a query attends to cloud points near it); the
value projection reads only the content block, never absolute position,
which is what lets one set of weights transfer across object placements;
and the task token is placed where query embeddings cannot reach and aimed
at by the language projection bias so the instruction is visible to it from
the first step.

`backward` consumes gradients w.r.t. (scores, rot, open, collide) and
returns gradients for every parameter; `grad_check` in gradcheck.py verifies
it against central finite differences.
"""

from __future__ import annotations

import numpy as np

from ..rng import DeterministicRng
from .config import PolicyConfig
from .geometry_encoder import REL_SCALE
from .types import PolicyError


def fourier_features(p: np.ndarray, n_freqs: int) -> np.ndarray:
    """sin/cos over octave frequencies pi * 2^i, per axis: (..., 3) -> (..., 6F)."""
    freqs = np.pi * (2.0 ** np.arange(n_freqs))
    angles = p[..., :, None] * freqs            # (..., 3, F)
    feats = np.stack([np.sin(angles), np.cos(angles)], axis=-1)
    return feats.reshape(*p.shape[:-1], 6 * n_freqs)


def proprio_features(proprio: np.ndarray, n_freqs: int) -> np.ndarray:
    """(B, 5) [x, y, z, yaw, open] -> (B, 6F + 3)."""
    pos = fourier_features(proprio[:, :3], n_freqs)
    yaw = proprio[:, 3]
    extra = np.stack([np.cos(yaw), np.sin(yaw), proprio[:, 4]], axis=1)
    return np.concatenate([pos, extra], axis=1)


def _row_null_space(a: np.ndarray) -> np.ndarray:
    """Orthonormal basis (rows) of the orthogonal complement of a's row space."""
    _, s, vt = np.linalg.svd(a, full_matrices=True)
    rank = int((s > 1e-10 * s[0]).sum()) if s.size else 0
    return vt[rank:]


def init_params(cfg: PolicyConfig, rng: DeterministicRng) -> dict:
    """Fresh parameter dict.

    Weights ~ N(0, 1/fan_in); biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    The nonzero bias draw keeps ReLU pre-activations off the exact kink so
    finite differencing stays meaningful (zero offsets paired with the
    self-neighbor's zero relative offset would sit precisely at it).
    """
    p = {}

    def w(name, *shape):
        p[name] = rng.normal(size=shape) / np.sqrt(shape[0])

    def b(name, dim, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        p[name] = rng.uniform(-bound, bound, size=dim)

    n_templates = max(len(cfg.templates), 1)
    p["lang_embed"] = rng.normal(size=(n_templates, cfg.d_lang))
    w("lang_proj_w", cfg.d_lang, cfg.d_model)
    b("lang_proj_b", cfg.d_model, cfg.d_lang)
    # Point content encoder over [semantic | geometric | instruction]. The
    # semantic one-hot and the instruction embedding are both unit vectors,
    # so the two enter the relu layer at equal strength.
    fuse_in = cfg.c_sem + cfg.c_geo + cfg.d_lang
    w("fuse_w1", fuse_in, cfg.d_fuse_hidden)
    b("fuse_b1", cfg.d_fuse_hidden, fuse_in)
    w("fuse_w2", cfg.d_fuse_hidden, cfg.d_model)
    b("fuse_b2", cfg.d_model, cfg.d_fuse_hidden)
    w("geo_w1", 3, cfg.d_geo_hidden); b("geo_b1", cfg.d_geo_hidden, 3)
    w("geo_w2", cfg.d_geo_hidden, cfg.c_geo); b("geo_b2", cfg.c_geo, cfg.d_geo_hidden)
    w("query_w", cfg.pos_dim, cfg.d_model)
    p["query_b"] = np.zeros(cfg.d_model)
    w("prop_w", cfg.pos_dim + 3, cfg.d_model); b("prop_b", cfg.d_model, cfg.pos_dim + 3)
    # The task token lives in the subspace query embeddings cannot reach
    # (the orthogonal complement of the query projection's range), and the
    # language projection bias points along it. The task token therefore
    # attends to the instruction token from the first step, while query
    # scores stay language-neutral at initialization; without this the
    # instruction sits at 1/(N+2) attention weight and template selectivity
    # never trains.
    null_basis = _row_null_space(p["query_w"])
    coeff = rng.normal(size=cfg.d_model)
    if null_basis.shape[0]:
        t_dir = coeff[: null_basis.shape[0]] @ null_basis
    else:
        t_dir = coeff
    t_dir = t_dir / np.linalg.norm(t_dir)
    p["token_t"] = 3.0 * t_dir
    p["lang_proj_b"] = 8.0 * t_dir
    # Key projection: content block passes through; positional block is the
    # pseudo-inverse pairing of the query projection, so a query's attention
    # logit against a cloud point starts as the multiscale cosine kernel
    # <phi(q), phi(p)> — peaked where the query coincides with the point.
    # The pairing runs at gain 2: the raw kernel's logit drop at 2 cm is
    # only ~0.6, which blurs attention (and hence the attended values)
    # across several centimeters of an object's surface; doubling it puts
    # centimeter-scale discrimination inside the softmax's dynamic range.
    # Value projection reads the content block only (d_model wide, not
    # kv_dim): absolute position can steer attention but never enters the
    # attended values themselves.
    key_pos = 2.0 * np.linalg.pinv(p["query_w"]).T
    for i in range(cfg.n_layers):
        p[f"layer{i}_wq"] = np.eye(cfg.d_model)
        p[f"layer{i}_wk"] = np.concatenate([np.eye(cfg.d_model), key_pos], axis=0)
        w(f"layer{i}_wv", cfg.d_model, cfg.d_model)
        for vec in ("bq", "bk", "bv"):
            b(f"layer{i}_{vec}", cfg.d_model, cfg.d_model)
        w(f"layer{i}_w1", cfg.d_model, cfg.d_ff); b(f"layer{i}_b1", cfg.d_ff, cfg.d_model)
        w(f"layer{i}_w2", cfg.d_ff, cfg.d_model); b(f"layer{i}_b2", cfg.d_model, cfg.d_ff)
    w("head_rot_w", cfg.d_model, 3 * cfg.n_rot_bins)
    b("head_rot_b", 3 * cfg.n_rot_bins, cfg.d_model)
    w("head_open_w", cfg.d_model); b("head_open_b", 1, cfg.d_model)
    w("head_collide_w", cfg.d_model); b("head_collide_b", 1, cfg.d_model)
    # Lateral-center scoring head (see forward). The agreement weight is
    # identity on the x/y bands of the *low* octaves only (wavelengths 2 m
    # down to 12.5 cm): summed, those cosines form a single smooth bowl
    # peaked at the selection's lateral centroid. The high octaves would
    # instead resolve the individual selected surface points — a density
    # comb whose peaks sit on the object's rim, the exact bias this term
    # exists to remove. The z bands stay zero: the selection spans the
    # whole surface, so its vertical centroid sits mid-body, below the
    # top-face waypoints the demonstrations teach, and the locality kernel
    # already discriminates sharply in z. The gain is the temperature on
    # the z-scored selection logits.
    w("sel_w", cfg.c_sem, cfg.d_lang)
    agree = np.zeros((cfg.pos_dim, cfg.pos_dim))
    per_axis = 2 * cfg.n_freqs
    for a in (0, 1):
        for k in range(min(5, cfg.n_freqs)):
            for s in (0, 1):
                d = a * per_axis + 2 * k + s
                agree[d, d] = 2.0
    p["score_pos_w"] = agree
    p["sel_gain"] = np.array([2.0])
    return p


def zero_grads(params: dict) -> dict:
    return {k: np.zeros_like(v) for k, v in params.items()}


def _softmax(s: np.ndarray) -> np.ndarray:
    e = np.exp(s - s.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def attention_stack(params: dict, cfg: PolicyConfig, kv: np.ndarray, x: np.ndarray, check: bool = False):
    """Run the residual cross-attention + FFN layers over fixed kv tokens.

    Returns (final x, per-layer cache list). With cfg.linear_only the stack
    is bypassed and x passes through unchanged.
    """
    layers = []
    if cfg.linear_only:
        return x, layers
    scale = 1.0 / np.sqrt(cfg.d_model)
    for i in range(cfg.n_layers):
        x_in = x
        qp = x_in @ params[f"layer{i}_wq"] + params[f"layer{i}_bq"]
        kp = kv @ params[f"layer{i}_wk"] + params[f"layer{i}_bk"]
        vp = kv[..., : cfg.d_model] @ params[f"layer{i}_wv"] + params[f"layer{i}_bv"]
        s = np.einsum("bmd,bnd->bmn", qp, kp) * scale
        a = _softmax(s)
        u = a @ vp
        x1 = x_in + u
        f_pre = x1 @ params[f"layer{i}_w1"] + params[f"layer{i}_b1"]
        f_act = np.maximum(f_pre, 0.0)
        x = x1 + f_act @ params[f"layer{i}_w2"] + params[f"layer{i}_b2"]
        if check and not np.isfinite(x).all():
            raise PolicyError(f"non-finite activations in layer {i}")
        layers.append({"x_in": x_in, "qp": qp, "kp": kp, "vp": vp, "a": a,
                       "u": u, "x1": x1, "f_pre": f_pre, "f_act": f_act})
    return x, layers


def forward(params: dict, cfg: PolicyConfig, batch: dict, check: bool = False):
    """Run the network on a batch.

    batch keys: positions (B,N,3), semantic (B,N,C_s), knn_idx (B,N,k),
    lang_idx (B,), proprio (B,5), queries (B,M,3).
    Returns (outputs, cache) where outputs has scores (B,M), f_t (B,D),
    rot (B,3,bins), open/collide logits (B,).
    """
    pos, sem = batch["positions"], batch["semantic"]
    idx, lang_idx = batch["knn_idx"], batch["lang_idx"]
    proprio, queries = batch["proprio"], batch["queries"]
    bsz, n = pos.shape[:2]
    cache = {"batch": batch}

    # geometric branch
    neighbors = pos[np.arange(bsz)[:, None, None], idx]   # B,N,k,3
    rel = (neighbors - pos[:, :, None, :]) * REL_SCALE
    h_pre = rel @ params["geo_w1"] + params["geo_b1"]
    h = np.maximum(h_pre, 0.0)
    pooled = h.mean(axis=2)
    geo = pooled @ params["geo_w2"] + params["geo_b2"]
    cache.update(rel=rel, h_pre=h_pre, pooled=pooled)

    # instruction embedding (unit-normalized lookup); it conditions every
    # point's content below and also gets its own kv token
    e = params["lang_embed"][lang_idx]                    # B,Dl
    norm = np.linalg.norm(e, axis=1, keepdims=True)
    if (norm < 1e-12).any():
        raise PolicyError("zero-norm language embedding")
    e_hat = e / norm
    cache.update(e=e, norm=norm, e_hat=e_hat)

    # instruction-conditioned content | positional features -> point kv tokens
    lang_pts = np.broadcast_to(e_hat[:, None, :], (bsz, n, cfg.d_lang))
    fused_in = np.concatenate([sem, geo, lang_pts], axis=-1)
    fuse_pre = fused_in @ params["fuse_w1"] + params["fuse_b1"]
    fuse_act = np.maximum(fuse_pre, 0.0)
    content = fuse_act @ params["fuse_w2"] + params["fuse_b2"]
    phi_pts = fourier_features(pos, cfg.n_freqs)
    kv_pts = np.concatenate([content, phi_pts], axis=-1)
    cache.update(fused_in=fused_in, fuse_pre=fuse_pre, fuse_act=fuse_act, phi_pts=phi_pts)

    lang_tok = e_hat @ params["lang_proj_w"] + params["lang_proj_b"]
    lang_kv = np.concatenate([lang_tok, np.zeros((bsz, cfg.pos_dim))], axis=-1)
    prop_in = proprio_features(proprio, cfg.n_freqs)
    prop_tok = prop_in @ params["prop_w"] + params["prop_b"]
    prop_kv = np.concatenate([prop_tok, prop_in[:, : cfg.pos_dim]], axis=-1)
    cache.update(prop_in=prop_in)

    kv = np.concatenate([kv_pts, lang_kv[:, None, :], prop_kv[:, None, :]], axis=1)

    # query tokens: learnable token first, then query-point embeddings
    phi_q = fourier_features(queries, cfg.n_freqs)
    q_emb = phi_q @ params["query_w"] + params["query_b"]
    token = np.broadcast_to(params["token_t"], (bsz, 1, cfg.d_model))
    x = np.concatenate([token, q_emb], axis=1)
    cache.update(phi_q=phi_q, kv=kv)

    x, layers = attention_stack(params, cfg, kv, x, check=check)
    cache["layers"] = layers

    f_t = x[:, 0]
    # Scores read the final layer's attended values at each query, not the
    # residual stream (see module docstring); linear_only has no attention,
    # so it scores the raw query embeddings.
    score_feat = layers[-1]["u"][:, 1:] if layers else x[:, 1:]
    scores = np.einsum("bd,bmd->bm", f_t, score_feat)
    if layers:
        # Lateral-center term. The attended-value readout above is blind to
        # where, within one object's near-uniform surface, a query sits:
        # every top-face query attends the same local value mix, so the
        # readout field is flat across the face and its argmax drifts to
        # the rim. The bilinear semantic/instruction match below selects
        # the instructed object's points (identical logits for every point
        # of the matching class, so the z-scored softmax spreads evenly
        # over that object and vanishes elsewhere), and the low-octave
        # agreement with the selection's mean positional feature adds a
        # smooth bowl over the face, peaked at its lateral center.
        sel_raw = np.einsum("bnc,cd,bd->bn", sem, params["sel_w"], e_hat)
        sel_c = sel_raw - sel_raw.mean(axis=1, keepdims=True)
        sel_sd = np.sqrt((sel_c ** 2).mean(axis=1, keepdims=True) + 1e-8)
        sel_z = sel_c / sel_sd
        sel = _softmax(sel_z * params["sel_gain"][0])
        pos_star = np.einsum("bn,bnp->bp", sel, phi_pts)
        agree = phi_q @ params["score_pos_w"]
        scores = scores + np.einsum("bmp,bp->bm", agree, pos_star)
        cache.update(pos_star=pos_star, sel=sel, sel_z=sel_z, sel_sd=sel_sd)
    rot = (f_t @ params["head_rot_w"] + params["head_rot_b"]).reshape(bsz, 3, cfg.n_rot_bins)
    open_logit = f_t @ params["head_open_w"] + params["head_open_b"][0]
    collide_logit = f_t @ params["head_collide_w"] + params["head_collide_b"][0]
    cache.update(f_t=f_t, score_feat=score_feat)

    outputs = {"scores": scores, "f_t": f_t, "rot": rot,
               "open": open_logit, "collide": collide_logit}
    if check:
        for name in ("scores", "rot", "open", "collide"):
            if not np.isfinite(outputs[name]).all():
                raise PolicyError(f"non-finite {name} output")
    return outputs, cache


def backward(params: dict, cfg: PolicyConfig, cache: dict, d_out: dict) -> dict:
    """Gradients of a scalar objective given d(scores)/d(rot)/d(open)/d(collide)."""
    g = zero_grads(params)
    batch = cache["batch"]
    f_t, score_feat = cache["f_t"], cache["score_feat"]
    bsz, n = batch["positions"].shape[:2]

    d_rot = d_out["rot"].reshape(bsz, -1)
    g["head_rot_w"] = f_t.T @ d_rot
    g["head_rot_b"] = d_rot.sum(axis=0)
    d_ft = d_rot @ params["head_rot_w"].T

    d_open, d_collide = d_out["open"], d_out["collide"]
    g["head_open_w"] = d_open @ f_t
    g["head_open_b"] = np.array([d_open.sum()])
    d_ft += np.outer(d_open, params["head_open_w"])
    g["head_collide_w"] = d_collide @ f_t
    g["head_collide_b"] = np.array([d_collide.sum()])
    d_ft += np.outer(d_collide, params["head_collide_w"])

    d_scores = d_out["scores"]
    d_ft += np.einsum("bm,bmd->bd", d_scores, score_feat)
    d_sf = d_scores[:, :, None] * f_t[:, None, :]
    d_kv = np.zeros_like(cache["kv"])

    d_ehat_sel = 0.0
    if not cfg.linear_only:
        # Lateral-center term (see forward): gradients for the agreement
        # weight, the gain, the bilinear match, and the instruction
        # embedding it conditions on. The positional features being
        # averaged are inputs, so that chain stops at the selection; the
        # z-score backward is the usual normalization jacobian.
        sem, e_hat = batch["semantic"], cache["e_hat"]
        phi_q, phi_pts = cache["phi_q"], cache["phi_pts"]
        pos_star, sel = cache["pos_star"], cache["sel"]
        sel_z, sel_sd = cache["sel_z"], cache["sel_sd"]
        g["score_pos_w"] = np.einsum("bm,bmp,bq->pq", d_scores, phi_q, pos_star)
        d_pos_star = np.einsum("bm,bmq->bq", d_scores,
                               phi_q @ params["score_pos_w"])
        d_sel = np.einsum("bp,bnp->bn", d_pos_star, phi_pts)
        d_zg = sel * (d_sel - (d_sel * sel).sum(axis=1, keepdims=True))
        g["sel_gain"] = np.array([(d_zg * sel_z).sum()])
        d_z = d_zg * params["sel_gain"][0]
        d_c = (d_z - sel_z * (d_z * sel_z).mean(axis=1, keepdims=True)) / sel_sd
        d_raw = d_c - d_c.mean(axis=1, keepdims=True)
        g["sel_w"] = np.einsum("bn,bnc,bd->cd", d_raw, sem, e_hat)
        d_ehat_sel = np.einsum("bn,bnc,cd->bd", d_raw, sem, params["sel_w"])

    if cfg.linear_only:
        dx = np.concatenate([d_ft[:, None, :], d_sf], axis=1)
    else:
        # Query rows of the final residual stream feed nothing; the score
        # gradient enters at the last layer's attention output instead.
        dx = np.concatenate([d_ft[:, None, :], np.zeros_like(d_sf)], axis=1)
        d_u_extra = np.concatenate(
            [np.zeros((bsz, 1, cfg.d_model)), d_sf], axis=1)

    if not cfg.linear_only:
        scale = 1.0 / np.sqrt(cfg.d_model)
        for i in reversed(range(cfg.n_layers)):
            lay = cache["layers"][i]
            # FFN (residual)
            d_x1 = dx.copy()
            d_fact = dx @ params[f"layer{i}_w2"].T
            g[f"layer{i}_w2"] = np.einsum("bmf,bmd->fd", lay["f_act"], dx)
            g[f"layer{i}_b2"] = dx.sum(axis=(0, 1))
            d_fpre = d_fact * (lay["f_pre"] > 0)
            g[f"layer{i}_w1"] = np.einsum("bmd,bmf->df", lay["x1"], d_fpre)
            g[f"layer{i}_b1"] = d_fpre.sum(axis=(0, 1))
            d_x1 += d_fpre @ params[f"layer{i}_w1"].T
            # attention (residual, no output projection)
            dx = d_x1.copy()
            d_o = d_x1 + d_u_extra if i == cfg.n_layers - 1 else d_x1
            d_a = np.einsum("bmd,bnd->bmn", d_o, lay["vp"])
            d_vp = np.einsum("bmn,bmd->bnd", lay["a"], d_o)
            a = lay["a"]
            d_s = a * (d_a - (d_a * a).sum(axis=-1, keepdims=True))
            d_qp = np.einsum("bmn,bnd->bmd", d_s, lay["kp"]) * scale
            d_kp = np.einsum("bmn,bmd->bnd", d_s, lay["qp"]) * scale
            g[f"layer{i}_wq"] = np.einsum("bmd,bme->de", lay["x_in"], d_qp)
            g[f"layer{i}_bq"] = d_qp.sum(axis=(0, 1))
            dx += d_qp @ params[f"layer{i}_wq"].T
            g[f"layer{i}_wk"] = np.einsum("bnd,bne->de", cache["kv"], d_kp)
            g[f"layer{i}_bk"] = d_kp.sum(axis=(0, 1))
            d_kv += d_kp @ params[f"layer{i}_wk"].T
            g[f"layer{i}_wv"] = np.einsum(
                "bnd,bne->de", cache["kv"][..., : cfg.d_model], d_vp)
            g[f"layer{i}_bv"] = d_vp.sum(axis=(0, 1))
            d_kv[..., : cfg.d_model] += d_vp @ params[f"layer{i}_wv"].T

    # query-side inputs
    g["token_t"] = dx[:, 0].sum(axis=0)
    d_qemb = dx[:, 1:]
    g["query_w"] = np.einsum("bmp,bmd->pd", cache["phi_q"], d_qemb)
    g["query_b"] = d_qemb.sum(axis=(0, 1))

    # kv-side inputs; positional blocks are constants, only content carries grads
    d_content = d_kv[:, :n, : cfg.d_model]
    d_lang_tok = d_kv[:, n, : cfg.d_model]
    d_prop_tok = d_kv[:, n + 1, : cfg.d_model]

    g["fuse_w2"] = np.einsum("bnh,bnd->hd", cache["fuse_act"], d_content)
    g["fuse_b2"] = d_content.sum(axis=(0, 1))
    d_fuse = (d_content @ params["fuse_w2"].T) * (cache["fuse_pre"] > 0)
    g["fuse_w1"] = np.einsum("bnc,bnh->ch", cache["fused_in"], d_fuse)
    g["fuse_b1"] = d_fuse.sum(axis=(0, 1))
    d_fin = d_fuse @ params["fuse_w1"].T
    d_geo = d_fin[..., cfg.c_sem : cfg.c_sem + cfg.c_geo]

    g["geo_w2"] = np.einsum("bnh,bnc->hc", cache["pooled"], d_geo)
    g["geo_b2"] = d_geo.sum(axis=(0, 1))
    d_pooled = d_geo @ params["geo_w2"].T
    k = cache["rel"].shape[2]
    d_h = np.repeat(d_pooled[:, :, None, :] / k, k, axis=2)
    d_hpre = d_h * (cache["h_pre"] > 0)
    g["geo_w1"] = np.einsum("bnkx,bnkh->xh", cache["rel"], d_hpre)
    g["geo_b1"] = d_hpre.sum(axis=(0, 1, 2))

    g["lang_proj_w"] = cache["e_hat"].T @ d_lang_tok
    g["lang_proj_b"] = d_lang_tok.sum(axis=0)
    # the embedding reaches the loss through its token, through every
    # point's content, and through the lateral-center selection match
    d_ehat = d_lang_tok @ params["lang_proj_w"].T
    d_ehat += d_fin[..., cfg.c_sem + cfg.c_geo :].sum(axis=1)
    d_ehat = d_ehat + d_ehat_sel
    e_hat, norm = cache["e_hat"], cache["norm"]
    d_e = (d_ehat - e_hat * (e_hat * d_ehat).sum(axis=1, keepdims=True)) / norm
    np.add.at(g["lang_embed"], batch["lang_idx"], d_e)

    g["prop_w"] = cache["prop_in"].T @ d_prop_tok
    g["prop_b"] = d_prop_tok.sum(axis=0)
    return g

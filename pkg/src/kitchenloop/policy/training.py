"""Behavior-cloning training loop: Adam on the hand-written network.

Augmentation follows the usual point-cloud recipe: per-point semantic
dropout plus a global translation jitter applied to both the cloud and the
waypoint target, so the cloud-to-waypoint mapping the network learns is
translation consistent. Every random draw comes from one seeded stream,
making training bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..canonical import derive_seed
from ..rng import DeterministicRng
from ..world.geometry import DEFAULT_KITCHEN, KITCHENS
from ..world.types import GRIPPER_HOME
from .config import PolicyConfig
from .dataset import Demonstration, make_reach_scene
from .geometry_encoder import knn_indices
from .inference import predict_action
from .loss import DEFAULT_WEIGHTS, batch_loss_and_grads
from .network import backward, forward, init_params, zero_grads


class TrainingError(Exception):
    pass


@dataclass
class TrainConfig:
    lr: float = 3e-4
    batch_size: int = 16
    epochs: int = 20
    seed: int = 0
    alpha: float = 0.1
    weights: dict = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    jitter: float = 0.02
    sem_dropout: float = 0.1
    m_uniform: int = 64
    m_near: int = 64
    near_r_min: float = 0.005
    near_r_max: float = 0.5
    m_axis: int = 12
    axis_r_min: float = 0.05
    axis_r_max: float = 0.6
    m_cloud: int = 16
    cloud_sigma: float = 0.01


def _build_samples(demos: list[Demonstration], cfg: PolicyConfig):
    """Flatten demos into (cloud, knn, lang, proprio, action) tuples.

    Every trajectory frame becomes one sample predicting the next keyframe's
    action, the usual keyframe behavior-cloning extraction.
    """
    samples = []
    n_points = None
    for demo in demos:
        if n_points is None:
            n_points = demo.cloud_xyz.shape[0]
        elif demo.cloud_xyz.shape[0] != n_points:
            raise TrainingError("demonstrations must share a cloud size for batching")
        idx = knn_indices(demo.cloud_xyz, cfg.knn_k)
        lang = cfg.template_index(demo.template_id)
        kf_iter = list(zip(demo.keyframes, demo.actions))
        for t in range(len(demo.poses) - 1):
            action = next(a for k, a in kf_iter if k > t)
            pose = demo.poses[t]
            proprio = np.array([pose[0], pose[1], pose[2], pose[3],
                                1.0 if demo.open_flags[t] else 0.0])
            samples.append({
                "positions": demo.cloud_xyz,
                "semantic": demo.cloud_sem,
                "knn_idx": idx,
                "lang_idx": lang,
                "proprio": proprio,
                "trans": action.a_trans.copy(),
                "rot_idx": action.rotation_bins(),
                "open": float(action.a_open),
                "collide": float(action.a_collide),
            })
    if not samples:
        raise TrainingError("empty dataset")
    return samples


def _assemble_batch(samples, order, cfg: PolicyConfig, hyper: TrainConfig,
                    rng: DeterministicRng, workspace):
    bsz = len(order)
    n = samples[0]["positions"].shape[0]
    positions = np.stack([samples[i]["positions"] for i in order])
    semantic = np.stack([samples[i]["semantic"] for i in order]).astype(float)
    knn_idx = np.stack([samples[i]["knn_idx"] for i in order])
    lang_idx = np.array([samples[i]["lang_idx"] for i in order])
    proprio = np.stack([samples[i]["proprio"] for i in order])
    target = np.stack([samples[i]["trans"] for i in order])

    offset = rng.uniform(-hyper.jitter, hyper.jitter, size=(bsz, 3))
    positions = positions + offset[:, None, :]
    target = target + offset
    keep = rng.uniform(size=(bsz, n)) >= hyper.sem_dropout
    semantic = semantic * keep[:, :, None]

    lo, hi = np.array(workspace.lo), np.array(workspace.hi)
    m_u, m_n, m_a = hyper.m_uniform, hyper.m_near, hyper.m_axis
    uniform = lo + rng.uniform(size=(bsz, m_u, 3)) * (hi - lo)
    # Shell queries at log-uniform radii: the cross-entropy then ranks the
    # nearest query against negatives at every scale, which is what lets a
    # coarse-to-fine search descend the score landscape from far away.
    dirs = rng.normal(size=(bsz, m_n, 3))
    dirs /= np.linalg.norm(dirs, axis=2, keepdims=True)
    log_span = np.log(hyper.near_r_max / hyper.near_r_min)
    radii = hyper.near_r_min * np.exp(rng.uniform(size=(bsz, m_n, 1)) * log_span)
    near = np.clip(target[:, None, :] + dirs * radii, lo, hi)
    # Single-axis offsets from the target are the hardest negatives: the
    # per-axis positional features leave ridges along them, and these
    # queries are what teach the score to put the ridges down.
    axis = np.tile(np.arange(3), -(-m_a // 3))[:m_a]
    sign = np.where(rng.uniform(size=(bsz, m_a)) < 0.5, -1.0, 1.0)
    a_span = np.log(hyper.axis_r_max / hyper.axis_r_min)
    mag = hyper.axis_r_min * np.exp(rng.uniform(size=(bsz, m_a)) * a_span)
    offs = np.zeros((bsz, m_a, 3))
    offs[:, np.arange(m_a), axis] = sign * mag
    axis_neg = np.clip(target[:, None, :] + offs, lo, hi)
    # Cloud-anchored negatives: jittered copies of observed points, mostly
    # on distractors and fixtures. Being on *some* geometry must not score;
    # inference anchors its coarse search on the cloud, so these are the
    # candidates the policy will actually face.
    m_c = hyper.m_cloud
    pick = rng.integers(0, n, size=(bsz, m_c))
    noise = rng.normal(size=(bsz, m_c, 3)) * hyper.cloud_sigma
    cloud_neg = np.clip(
        positions[np.arange(bsz)[:, None], pick] + noise, lo, hi)
    queries = np.concatenate([uniform, near, axis_neg, cloud_neg], axis=1)

    batch = {"positions": positions, "semantic": semantic, "knn_idx": knn_idx,
             "lang_idx": lang_idx, "proprio": proprio, "queries": queries}
    dists = np.linalg.norm(queries - target[:, None, :], axis=2)
    targets = {
        "trans_idx": dists.argmin(axis=1),
        "rot_idx": np.stack([samples[i]["rot_idx"] for i in order]),
        "open": np.array([samples[i]["open"] for i in order]),
        "collide": np.array([samples[i]["collide"] for i in order]),
    }
    return batch, targets


def adam_step(params, grads, state, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    state["t"] += 1
    t = state["t"]
    for name, g in grads.items():
        state["m"][name] = beta1 * state["m"][name] + (1 - beta1) * g
        state["v"][name] = beta2 * state["v"][name] + (1 - beta2) * g * g
        m_hat = state["m"][name] / (1 - beta1 ** t)
        v_hat = state["v"][name] / (1 - beta2 ** t)
        params[name] = params[name] - lr * m_hat / (np.sqrt(v_hat) + eps)


def train_policy(demos: list[Demonstration], cfg: PolicyConfig,
                 hyper: TrainConfig, workspace=None):
    """Train from scratch; returns (params, per-epoch mean loss curve).

    Each curve entry is a dict of epoch means: "total" plus the per-term
    values under the term names of the loss breakdown.
    """
    if workspace is None:
        workspace = DEFAULT_KITCHEN.workspace
    root = DeterministicRng(hyper.seed)
    params = init_params(cfg, root.spawn("init"))
    samples = _build_samples(demos, cfg)
    state = {"t": 0, "m": zero_grads(params), "v": zero_grads(params)}
    curve = []
    for epoch in range(hyper.epochs):
        order = root.spawn("perm", epoch).permutation(len(samples))
        aug = root.spawn("aug", epoch)
        rows = []
        for start in range(0, len(order), hyper.batch_size):
            chunk = order[start:start + hyper.batch_size]
            batch, targets = _assemble_batch(samples, list(chunk), cfg, hyper,
                                             aug, workspace)
            outputs, cache = forward(params, cfg, batch)
            breakdown, d_out = batch_loss_and_grads(outputs, targets,
                                                    hyper.weights, hyper.alpha)
            if not np.isfinite(breakdown.total):
                raise TrainingError(f"training diverged at epoch {epoch}")
            grads = backward(params, cfg, cache, d_out)
            adam_step(params, grads, state, hyper.lr)
            rows.append({"total": breakdown.total, **breakdown.terms})
        curve.append({k: float(np.mean([r[k] for r in rows]))
                      for k in rows[0]})
    return params, curve


def evaluate_reach(params, cfg: PolicyConfig, templates, n_scenes: int,
                   seed: int, tol: float = 0.02, stages: int = 5,
                   kitchen: str = "default", n_points: int = 256):
    """Waypoint accuracy on freshly generated held-out scenes."""
    geometry = KITCHENS[kitchen]
    home = np.array([GRIPPER_HOME[0], GRIPPER_HOME[1], GRIPPER_HOME[2],
                     GRIPPER_HOME[3], 1.0])
    errors = []
    hits = 0
    for template_id in templates:
        for i in range(n_scenes):
            scene_seed = derive_seed("reach-eval", kitchen, template_id, i, seed)
            obs, target = make_reach_scene(template_id, scene_seed, kitchen, n_points)
            rng = DeterministicRng(derive_seed("reach-eval-rng", template_id, i, seed))
            action = predict_action(params, cfg, obs, template_id, home, rng,
                                    workspace=geometry.workspace, stages=stages)
            err = float(np.linalg.norm(action.a_trans - target))
            errors.append(err)
            hits += err <= tol
    total = len(errors)
    return {"success_rate": hits / total, "mean_error": float(np.mean(errors)),
            "n": total, "errors": errors}

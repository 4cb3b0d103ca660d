"""Behavior-cloning loss: smoothed translation CE plus rotation/open/collide CE.

The translation term smooths its one-hot target toward uniform,
y' = (1 - alpha) * Y + alpha / M, before the cross-entropy; the other
terms are plain cross-entropy. The rotation term averages its three axes.
All terms enter the total positively, weighted by their lambdas.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .types import PolicyError

DEFAULT_WEIGHTS = {"trans": 1.0, "rot": 1.0, "open": 1.0, "collide": 1.0}


@dataclass
class LossBreakdown:
    total: float
    terms: dict
    weights: dict
    alpha: float
    softmaxes: dict = field(default_factory=dict)
    targets: dict = field(default_factory=dict)

    def to_doc(self) -> dict:
        return {"total": self.total, "terms": dict(self.terms),
                "weights": dict(self.weights), "alpha": self.alpha}


def _log_softmax(q: np.ndarray) -> np.ndarray:
    shifted = q - q.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def _check_one_hot(y: np.ndarray, name: str) -> None:
    ok = np.isin(y, (0.0, 1.0)).all() and (y.sum(axis=-1) == 1.0).all()
    if not ok:
        raise PolicyError(f"{name} must be one-hot")


def loss_bc(logits: dict, targets: dict, weights: dict | None = None, alpha: float = 0.1) -> LossBreakdown:
    """Single-instance loss.

    logits: Q_trans (M,), Q_rot (3, bins), Q_open (2,), Q_collide (2,);
    targets: same keys, one-hot arrays.
    """
    if not 0.0 <= alpha <= 1.0:
        raise PolicyError(f"alpha must lie in [0, 1], got {alpha}")
    weights = dict(DEFAULT_WEIGHTS, **(weights or {}))

    q_trans = np.asarray(logits["Q_trans"], dtype=float)
    y_trans = np.asarray(targets["Y_trans"], dtype=float)
    if q_trans.shape != y_trans.shape:
        raise PolicyError("Q_trans and Y_trans shapes differ")
    _check_one_hot(y_trans, "Y_trans")
    m = q_trans.shape[-1]
    log_v_trans = _log_softmax(q_trans)
    y_smooth = (1.0 - alpha) * y_trans + alpha / m
    term_trans = float(-(y_smooth * log_v_trans).sum())

    q_rot = np.asarray(logits["Q_rot"], dtype=float)
    y_rot = np.asarray(targets["Y_rot"], dtype=float)
    if q_rot.shape != y_rot.shape or q_rot.ndim != 2:
        raise PolicyError("Q_rot/Y_rot must both be (axes, bins)")
    _check_one_hot(y_rot, "Y_rot")
    log_v_rot = _log_softmax(q_rot)
    term_rot = float(-(y_rot * log_v_rot).sum(axis=-1).mean())

    terms = {"trans": term_trans, "rot": term_rot}
    softmaxes = {"trans": np.exp(log_v_trans), "rot": np.exp(log_v_rot)}
    for key in ("open", "collide"):
        q = np.asarray(logits[f"Q_{key}"], dtype=float)
        y = np.asarray(targets[f"Y_{key}"], dtype=float)
        if q.shape != (2,) or y.shape != (2,):
            raise PolicyError(f"Q_{key}/Y_{key} must have shape (2,)")
        _check_one_hot(y, f"Y_{key}")
        log_v = _log_softmax(q)
        terms[key] = float(-(y * log_v).sum())
        softmaxes[key] = np.exp(log_v)

    total = sum(weights[k] * terms[k] for k in terms)
    return LossBreakdown(total=float(total), terms=terms, weights=weights, alpha=alpha,
                         softmaxes=softmaxes, targets=dict(targets))


def batch_loss_and_grads(outputs: dict, targets: dict, weights: dict | None, alpha: float):
    """Mean loss over a batch of network outputs, plus gradients w.r.t. them.

    outputs: scores (B,M), rot (B,axes,bins), open (B,), collide (B,) —
    open/collide are scalar logits q scored as the two-class pair [0, q].
    targets: trans_idx (B,), rot_idx (B,axes), open (B,), collide (B,) with
    open/collide in {0,1}.
    Returns (LossBreakdown, d_outputs) with d_outputs matching outputs' keys.
    """
    if not 0.0 <= alpha <= 1.0:
        raise PolicyError(f"alpha must lie in [0, 1], got {alpha}")
    weights = dict(DEFAULT_WEIGHTS, **(weights or {}))
    scores = outputs["scores"]
    bsz, m = scores.shape
    rows = np.arange(bsz)

    log_v = _log_softmax(scores)
    v = np.exp(log_v)
    y_smooth = np.full_like(scores, alpha / m)
    y_smooth[rows, targets["trans_idx"]] += 1.0 - alpha
    term_trans = float(-(y_smooth * log_v).sum(axis=1).mean())
    d_scores = weights["trans"] * (v - y_smooth) / bsz

    rot = outputs["rot"]
    n_axes = rot.shape[1]
    log_v_rot = _log_softmax(rot)
    v_rot = np.exp(log_v_rot)
    y_rot = np.zeros_like(rot)
    axis_idx = np.arange(n_axes)
    y_rot[rows[:, None], axis_idx[None, :], targets["rot_idx"]] = 1.0
    term_rot = float(-(y_rot * log_v_rot).sum(axis=2).mean(axis=1).mean())
    d_rot = weights["rot"] * (v_rot - y_rot) / (n_axes * bsz)

    terms = {"trans": term_trans, "rot": term_rot}
    d_out = {"scores": d_scores, "rot": d_rot}
    for key in ("open", "collide"):
        q = outputs[key]
        y = targets[key].astype(float)
        # two-class pair [0, q]: CE = log(1 + e^q) - y*q, d/dq = sigmoid(q) - y
        terms[key] = float((np.logaddexp(0.0, q) - y * q).mean())
        d_out[key] = weights[key] * (1.0 / (1.0 + np.exp(-q)) - y) / bsz

    total = sum(weights[k] * terms[k] for k in terms)
    breakdown = LossBreakdown(total=float(total), terms=terms, weights=weights, alpha=alpha)
    return breakdown, d_out

"""Keyframe-action manipulation policy on fused point clouds."""

from .camera import CameraModel, backproject, project
from .checkpoint import load_checkpoint, save_checkpoint
from .config import PolicyConfig
from .dataset import (
    REACH_TEMPLATES,
    Demonstration,
    load_dataset,
    make_reach_dataset,
    make_reach_demo,
    make_reach_scene,
    save_dataset,
    template_target_class,
)
from .fusion import fuse_features
from .geometry_encoder import encode_geometry, knn_indices
from .gradcheck import grad_check, make_instance, run_gradcheck, tiny_config
from .inference import embed_language, featurize, predict_action, score_queries
from .keyframes import extract_keyframes
from .loss import DEFAULT_WEIGHTS, LossBreakdown, batch_loss_and_grads, loss_bc
from .network import (
    backward,
    forward,
    fourier_features,
    init_params,
    proprio_features,
    zero_grads,
)
from .queries import resample_queries, sample_queries
from .rotation import BIN_DEGREES, N_BINS, bin_rotation, decode_bin, rotation_one_hot
from .training import TrainConfig, TrainingError, adam_step, evaluate_reach, train_policy
from .types import FusedPointCloud, KeyframeAction, LanguageEmbedding, PolicyError, QuerySet
from .waypoint import select_waypoint

__all__ = [
    "BIN_DEGREES",
    "CameraModel",
    "DEFAULT_WEIGHTS",
    "Demonstration",
    "FusedPointCloud",
    "KeyframeAction",
    "LanguageEmbedding",
    "LossBreakdown",
    "N_BINS",
    "PolicyConfig",
    "PolicyError",
    "QuerySet",
    "REACH_TEMPLATES",
    "TrainConfig",
    "TrainingError",
    "adam_step",
    "backproject",
    "backward",
    "batch_loss_and_grads",
    "bin_rotation",
    "decode_bin",
    "embed_language",
    "encode_geometry",
    "evaluate_reach",
    "extract_keyframes",
    "featurize",
    "forward",
    "fourier_features",
    "fuse_features",
    "grad_check",
    "init_params",
    "knn_indices",
    "load_checkpoint",
    "load_dataset",
    "loss_bc",
    "make_instance",
    "make_reach_dataset",
    "make_reach_demo",
    "make_reach_scene",
    "predict_action",
    "project",
    "proprio_features",
    "resample_queries",
    "rotation_one_hot",
    "run_gradcheck",
    "sample_queries",
    "save_checkpoint",
    "save_dataset",
    "score_queries",
    "select_waypoint",
    "template_target_class",
    "tiny_config",
    "train_policy",
    "zero_grads",
]

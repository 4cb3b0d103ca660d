"""Policy hyperparameters and the config hash used by checkpoints."""

from __future__ import annotations

from dataclasses import dataclass, field, fields

from ..canonical import digest


@dataclass(frozen=True)
class PolicyConfig:
    d_model: int = 64          # width of point/query/token features
    d_lang: int = 32           # instruction embedding width
    c_sem: int = 8             # one-hot semantic channels
    c_geo: int = 16            # geometric-encoder output channels
    n_layers: int = 2          # cross-attention layers
    n_rot_bins: int = 72       # 5-degree bins per rotation axis
    n_freqs: int = 8           # octaves of positional sin/cos per axis
    d_geo_hidden: int = 32
    d_fuse_hidden: int = 64    # hidden width of the point content encoder
    d_ff: int = 128
    knn_k: int = 8
    m_coarse: int = 512        # stage-1 workspace samples
    m_refine: int = 64         # per-refinement-stage samples
    refine_radius: float = 0.10
    refine_decay: float = 0.5
    stages: int = 2
    alpha: float = 0.1         # translation label smoothing
    lambda_trans: float = 1.0
    lambda_rot: float = 1.0
    lambda_open: float = 1.0
    lambda_collide: float = 1.0
    linear_only: bool = False  # bypass attention: features come from embeddings alone
    templates: tuple[str, ...] = ()

    def __post_init__(self):
        if self.n_rot_bins != 72:
            raise ValueError("rotation heads are defined over 72 five-degree bins")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if len(set(self.templates)) != len(self.templates):
            raise ValueError("duplicate instruction templates")

    @property
    def pos_dim(self) -> int:
        return 6 * self.n_freqs  # sin+cos per axis per octave

    def to_doc(self) -> dict:
        doc = {}
        for f in fields(self):
            v = getattr(self, f.name)
            doc[f.name] = list(v) if isinstance(v, tuple) else v
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> "PolicyConfig":
        kwargs = dict(doc)
        kwargs["templates"] = tuple(kwargs.get("templates", ()))
        return cls(**kwargs)

    def config_hash(self) -> str:
        return digest(self.to_doc())

    def template_index(self, template_id: str) -> int:
        try:
            return self.templates.index(template_id)
        except ValueError:
            raise KeyError(f"unknown instruction template {template_id!r}") from None

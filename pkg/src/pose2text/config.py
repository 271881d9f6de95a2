"""Model and training configuration dataclasses.

Defaults reproduce the headline architecture: 512-wide, 2048-FFN, 6+6-layer
encoder-decoder fed by a 255->512 linear pose projection, trained with
AdaFactor at a constant 1e-3 after a 10-epoch linear warm-up.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

from .exceptions import ConfigError
from .pose import FRAME_DIM

FFN_VARIANTS = ("relu", "gated-gelu")


@dataclass
class ModelConfig:
    d_model: int = 512
    d_ff: int = 2048
    num_layers: int = 6
    num_heads: int = 8
    d_kv: int = 64
    ffn_variant: str = "relu"
    pose_dim: int = FRAME_DIM
    max_input_frames: int = 256
    max_output_tokens: int = 128
    vocab_size: int = 32128
    rel_buckets: int = 32
    rel_max_distance: int = 128
    dropout: float = 0.1
    tie_output_embedding: bool = True

    def __post_init__(self):
        for name in ("d_model", "d_ff", "num_layers", "num_heads", "d_kv", "vocab_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.ffn_variant not in FFN_VARIANTS:
            raise ConfigError(f"ffn_variant must be one of {FFN_VARIANTS}, got {self.ffn_variant!r}")
        if self.pose_dim != FRAME_DIM:
            raise ConfigError(f"pose_dim must be {FRAME_DIM}, got {self.pose_dim}")
        if self.max_input_frames < 1 or self.max_output_tokens < 1:
            raise ConfigError("sequence caps must be >= 1")
        if self.rel_buckets < 2 or self.rel_max_distance < 2:
            raise ConfigError("relative bias needs >= 2 buckets and max distance >= 2")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")

    @property
    def inner_dim(self) -> int:
        """Total attention width across heads."""
        return self.num_heads * self.d_kv

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, payload: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ConfigError(f"unknown ModelConfig fields: {sorted(unknown)}")
        return cls(**payload)


@dataclass
class TrainConfig:
    epochs: int = 80
    warmup_epochs: float = 10.0
    lr_max: float = 1e-3
    weight_decay: float = 0.0
    label_smoothing: float = 0.1
    clip_norm: float = 1.0
    effective_batch: int = 128
    micro_batch: int = 16
    seed: int = 0
    log_path: str | None = None
    checkpoint_path: str | None = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.warmup_epochs < 0:
            raise ConfigError(f"warmup_epochs must be >= 0, got {self.warmup_epochs}")
        if not 0.0 <= self.label_smoothing < 1.0:
            raise ConfigError(f"label_smoothing must be in [0, 1), got {self.label_smoothing}")
        if self.clip_norm <= 0:
            raise ConfigError(f"clip_norm must be > 0, got {self.clip_norm}")
        if self.micro_batch < 1 or self.effective_batch < 1:
            raise ConfigError("batch sizes must be >= 1")
        if self.effective_batch % self.micro_batch != 0:
            raise ConfigError(
                f"effective_batch ({self.effective_batch}) must be divisible by "
                f"micro_batch ({self.micro_batch})"
            )
        if self.weight_decay != 0.0:
            raise ConfigError("weight decay is fixed at 0 in this recipe")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, payload: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ConfigError(f"unknown TrainConfig fields: {sorted(unknown)}")
        return cls(**payload)

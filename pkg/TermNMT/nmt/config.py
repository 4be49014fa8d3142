"""
NMT model and training configuration
"""

from dataclasses import asdict, dataclass, fields
from typing import Optional

from TermNMT.errors import ConfigError

DECAY_RULES = ("min_of_last_three", "all_of_last_three")


@dataclass(frozen=True)
class NmtConfig:
    """Hyperparameters of the encoder-decoder and its training schedule"""

    source_vocab_size: int = 40000
    target_vocab_size: int = 40000
    layers: int = 3
    hidden_size: int = 512
    embed_size: Optional[int] = None
    attention_size: Optional[int] = None
    reverse_source: bool = True
    minibatch: int = 128
    lr0: float = 0.5
    lr_decay: float = 0.99
    decay_rule: str = "min_of_last_three"
    clip_norm: float = 5.0
    epochs: int = 10
    eval_every_batches: int = 1500
    init_range: float = 0.06
    beam_size: int = 8
    max_decode_len: int = 60
    seed: int = 1234

    def __post_init__(self):
        sizes = {
            "source_vocab_size": self.source_vocab_size,
            "target_vocab_size": self.target_vocab_size,
            "layers": self.layers,
            "hidden_size": self.hidden_size,
            "embed_size": self.embed_dim,
            "attention_size": self.attention_dim,
            "minibatch": self.minibatch,
            "eval_every_batches": self.eval_every_batches,
            "beam_size": self.beam_size,
            "max_decode_len": self.max_decode_len,
        }
        for name, value in sizes.items():
            if value < 1:
                raise ConfigError(f"nmt.{name} must be >= 1, got {value}")
        if self.epochs < 0:
            raise ConfigError(f"nmt.epochs must be >= 0, got {self.epochs}")
        if not self.lr0 > 0:
            raise ConfigError(f"nmt.lr0 must be > 0, got {self.lr0}")
        if not 0 < self.lr_decay <= 1:
            raise ConfigError(f"nmt.lr_decay must be in (0, 1], got {self.lr_decay}")
        if not self.clip_norm > 0:
            raise ConfigError(f"nmt.clip_norm must be > 0, got {self.clip_norm}")
        if not self.init_range > 0:
            raise ConfigError(f"nmt.init_range must be > 0, got {self.init_range}")
        if self.decay_rule not in DECAY_RULES:
            raise ConfigError(f"nmt.decay_rule must be one of {DECAY_RULES}, got {self.decay_rule!r}")

    @property
    def embed_dim(self) -> int:
        return self.embed_size if self.embed_size is not None else self.hidden_size

    @property
    def attention_dim(self) -> int:
        return self.attention_size if self.attention_size is not None else self.hidden_size

    def replace(self, **changes) -> "NmtConfig":
        values = asdict(self)
        values.update(changes)
        return NmtConfig(**values)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "NmtConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown nmt settings: {', '.join(sorted(unknown))}")
        return cls(**data)

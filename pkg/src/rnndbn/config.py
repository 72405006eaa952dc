from dataclasses import dataclass, asdict
from typing import Optional


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters shared by every trainer and sampler.

    ``learning_rate`` may be 0, which turns any training call into a no-op
    on the parameters (useful for determinism and reduction checks).
    ``clip_threshold=None`` disables elementwise gradient clipping.
    ``gen_mean_field`` feeds the RNN with the visible probabilities of the
    last Gibbs sweep during generation instead of the binary sample.
    """

    learning_rate: float = 0.1
    cd_k: int = 1
    epochs: int = 1
    batch_size: int = 1
    gen_gibbs_steps: int = 25
    clip_threshold: Optional[float] = None
    seed: int = 0
    gen_mean_field: bool = False

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        for name in ("cd_k", "epochs", "batch_size", "gen_gibbs_steps"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value}")
        if self.clip_threshold is not None and not self.clip_threshold > 0:
            raise ValueError(f"clip_threshold must be > 0 or None, got {self.clip_threshold}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

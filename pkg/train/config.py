from dataclasses import asdict, dataclass, fields, replace
from enum import Enum
from typing import Any, Dict

from graph.core import NormalizationMode
from helper import DEFAULT_SLOPE, PAGERANK_DAMPING, UsageError
from model.propagate import Activation


class ResidualStrategy(Enum):
    LEARNABLE = "learnable"
    PAGERANK = "pagerank"
    STATIC = "static"
    GCN = "gcn"


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one node-classification run."""
    lr: float = 0.01
    weight_decay: float = 1e-4
    hidden_dim: int = 64
    num_layers: int = 2
    dropout: float = 0.4
    activation: str = Activation.RELU.value
    slope: float = DEFAULT_SLOPE
    strategy: str = ResidualStrategy.LEARNABLE.value
    top_fraction: float = 0.1
    lambda_max: float = 0.7
    lambda_min: float = 0.3
    beta: float = 0.5
    damping: float = PAGERANK_DAMPING
    normalization: str = NormalizationMode.AUGMENTED.value
    epochs: int = 1000
    patience: int = 100
    log_every: int = 10
    seed: int = 0

    def __post_init__(self):
        validate(self)

    @property
    def residual_strategy(self) -> ResidualStrategy:
        return ResidualStrategy(self.strategy)

    @property
    def activation_kind(self) -> Activation:
        return Activation(self.activation)

    @property
    def normalization_mode(self) -> NormalizationMode:
        return NormalizationMode(self.normalization)

    def with_overrides(self, **overrides) -> "TrainConfig":
        return replace(self, **overrides)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


TRAIN_KEYS = frozenset(f.name for f in fields(TrainConfig))


def _choice(enum, value: str, what: str) -> None:
    try:
        enum(value)
    except ValueError:
        allowed = ", ".join(member.value for member in enum)
        raise UsageError(f"unknown {what} {value!r} (expected one of: {allowed})")


def validate(config: TrainConfig) -> None:
    _choice(ResidualStrategy, config.strategy, "residual strategy")
    _choice(Activation, config.activation, "activation")
    _choice(NormalizationMode, config.normalization, "normalization")
    if not config.lr > 0:
        raise UsageError(f"lr must be > 0, got {config.lr}")
    if config.weight_decay < 0:
        raise UsageError(f"weight_decay must be >= 0, got {config.weight_decay}")
    if not 0.0 <= config.dropout < 1.0:
        raise UsageError(f"dropout must lie in [0, 1), got {config.dropout}")
    if config.num_layers < 1 or config.hidden_dim < 1:
        raise UsageError("num_layers and hidden_dim must be >= 1")
    if config.epochs < 0 or config.patience < 1 or config.log_every < 1:
        raise UsageError("epochs must be >= 0; patience and log_every must be >= 1")

import dataclasses
import statistics
from enum import Enum, unique
from typing import List

import numpy as np

from shadowpolicy.exceptions import InvalidSpecError
from shadowpolicy.ml.approximator import NetworkSpec


@dataclasses.dataclass
class Transition:
    s: np.ndarray
    a: int
    r: float
    s_next: np.ndarray
    terminal: bool


@unique
class TdLoss(str, Enum):
    squared = "squared"
    huber = "huber"


@dataclasses.dataclass
class DqnConfig:
    network: NetworkSpec = dataclasses.field(
        default_factory=lambda: NetworkSpec(layer_sizes=[4, 64, 64, 2])
    )
    replay_capacity: int = 50000
    batch_size: int = 64
    gamma: float = 0.99
    target_update: int = 500
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    exploration_fraction: float = 0.1
    total_steps: int = 50000
    learning_starts: int = 1000
    train_frequency: int = 1
    learning_rate: float = 1e-3
    max_grad_norm: float = 10.0
    loss: TdLoss = TdLoss.huber
    log_interval: int = 20
    seed: int = 0

    def validate(self) -> None:
        self.network.validate()
        if not 0 < self.gamma <= 1:
            raise InvalidSpecError("gamma must lie in (0, 1]")
        for name in (
            "replay_capacity",
            "batch_size",
            "target_update",
            "train_frequency",
        ):
            if getattr(self, name) <= 0:
                raise InvalidSpecError("{} must be positive".format(name))
        if self.total_steps < 0 or self.learning_starts < 0:
            raise InvalidSpecError("step counts must be nonnegative")
        if not (0 <= self.epsilon_end <= 1 and 0 <= self.epsilon_start <= 1):
            raise InvalidSpecError("exploration rates must lie in [0, 1]")
        if self.learning_rate <= 0:
            raise InvalidSpecError("learning_rate must be positive")


@dataclasses.dataclass
class DqfdConfig:
    network: NetworkSpec = dataclasses.field(
        default_factory=lambda: NetworkSpec(layer_sizes=[4, 64, 64, 2])
    )
    pretraining_steps: int = 5000
    margin: float = 0.8
    lambda_nstep: float = 1.0
    lambda_imitation: float = 1.0
    lambda_l2: float = 1e-5
    n_step: int = 10
    gamma: float = 0.99
    target_update: int = 1000
    batch_size: int = 32
    learning_rate: float = 1e-3
    priority_alpha: float = 0.4
    priority_epsilon_demo: float = 1.0
    priority_epsilon_self: float = 0.001
    interaction_steps: int = 100000
    replay_capacity: int = 50000
    exploration_epsilon: float = 0.01
    max_grad_norm: float = 10.0
    holdout_fraction: float = 0.2
    log_interval: int = 100
    seed: int = 0

    def validate(self) -> None:
        self.network.validate()
        if self.pretraining_steps < 0 or self.interaction_steps < 0:
            raise InvalidSpecError("step counts must be nonnegative")
        if self.margin < 0:
            raise InvalidSpecError("margin must be nonnegative")
        if self.n_step < 1:
            raise InvalidSpecError("n_step must be at least 1")
        if not 0 < self.gamma <= 1:
            raise InvalidSpecError("gamma must lie in (0, 1]")
        if self.target_update <= 0 or self.batch_size <= 0:
            raise InvalidSpecError("target_update and batch_size must be positive")
        if self.replay_capacity <= 0:
            raise InvalidSpecError("replay_capacity must be positive")
        if self.priority_epsilon_demo <= 0 or self.priority_epsilon_self <= 0:
            raise InvalidSpecError("priority offsets must be positive")
        if self.priority_alpha < 0:
            raise InvalidSpecError("priority_alpha must be nonnegative")
        if not 0 <= self.holdout_fraction < 1:
            raise InvalidSpecError("holdout_fraction must lie in [0, 1)")


@dataclasses.dataclass
class EvalStats:
    returns: List[float]
    mean: float
    min: float
    max: float

    @classmethod
    def from_returns(cls, returns: List[float]) -> "EvalStats":
        if not returns:
            raise ValueError("at least one episode return is required")
        return cls(
            returns=list(returns),
            mean=statistics.fmean(returns),
            min=min(returns),
            max=max(returns),
        )


@dataclasses.dataclass
class EpisodeRecord:
    """One row of a training curve."""

    episode: int
    steps: int
    return_: float


@dataclasses.dataclass
class ImitationLogRecord:
    step: int
    loss: float
    agreement: float

import dataclasses
import statistics
from typing import List, Optional

import numpy as np

from shadowpolicy.agents import DqnConfig
from shadowpolicy.exceptions import InvalidSpecError
from shadowpolicy.ml.approximator import NetworkSpec


def _adversary_dqn() -> DqnConfig:
    return DqnConfig(
        network=NetworkSpec(layer_sizes=[4, 64, 64, 2]),
        total_steps=30000,
        target_update=500,
    )


def check_r_max(r_max: float, max_return: float) -> None:
    if r_max < max_return:
        raise InvalidSpecError(
            "r_max {} is below the maximum return {}".format(r_max, max_return)
        )


@dataclasses.dataclass
class AdversaryConfig:
    cost: float = 1.0
    # None: the environment's maximum return
    r_max: Optional[float] = None
    dqn: DqnConfig = dataclasses.field(default_factory=_adversary_dqn)
    seed: int = 0

    def validate(self, max_return: Optional[float] = None) -> None:
        """`max_return`: the highest score of the attacked environment, if known."""
        if self.cost < 0:
            raise InvalidSpecError("perturbation cost must be nonnegative")
        if self.r_max is not None and self.r_max <= 0:
            raise InvalidSpecError("r_max must be positive")
        if self.r_max is not None and max_return is not None:
            check_r_max(self.r_max, max_return)
        self.dqn.validate()


@dataclasses.dataclass
class AttackEpisode:
    episode: int
    regret: float
    perturbations: int
    victim_return: float
    adversary_return: float


@dataclasses.dataclass
class AttackReport:
    episodes: List[AttackEpisode]
    mean_regret: float
    mean_perturbations: float
    max_regret: float
    mean_adversary_return: float

    @property
    def resilience(self) -> float:
        """Mean perturbation count needed per episode."""
        return self.mean_perturbations

    @classmethod
    def from_episodes(cls, episodes: List[AttackEpisode]) -> "AttackReport":
        return cls(
            episodes=episodes,
            mean_regret=statistics.fmean(e.regret for e in episodes),
            mean_perturbations=statistics.fmean(e.perturbations for e in episodes),
            max_regret=max(e.regret for e in episodes),
            mean_adversary_return=statistics.fmean(
                e.adversary_return for e in episodes
            ),
        )


@dataclasses.dataclass
class FgsmConfig:
    eps: float = 0.01
    low: float = -5.0
    high: float = 5.0
    max_iterations: int = 1000
    # False: keep the gradient computed at the original state for every step
    refresh_gradient: bool = True

    def validate(self) -> None:
        if self.eps <= 0:
            raise InvalidSpecError("eps must be positive")
        if not self.low < self.high:
            raise InvalidSpecError("low must be below high")
        if self.max_iterations < 1:
            raise InvalidSpecError("max_iterations must be at least 1")


@dataclasses.dataclass
class TransferTrial:
    original_state: np.ndarray
    perturbed_state: Optional[np.ndarray]
    imitation_flipped: bool
    victim_flipped: bool


@dataclasses.dataclass
class TransferEpisode:
    episode: int
    steps: int
    crafted: int
    transferred: int


@dataclasses.dataclass
class TransferReport:
    episodes: List[TransferEpisode]
    mean_crafted: float
    mean_transferred: float

    @classmethod
    def from_episodes(cls, episodes: List[TransferEpisode]) -> "TransferReport":
        return cls(
            episodes=episodes,
            mean_crafted=statistics.fmean(e.crafted for e in episodes),
            mean_transferred=statistics.fmean(e.transferred for e in episodes),
        )

import abc
import dataclasses
from typing import Any

import numpy as np


@dataclasses.dataclass(frozen=True)
class StepResult:
    next_state: Any
    reward: float
    terminal: bool


class Environment(metaclass=abc.ABCMeta):
    """Functional environment: states are values, nothing is mutated."""

    @abc.abstractmethod
    def reset(self, seed: int) -> Any:
        pass

    @abc.abstractmethod
    def step(self, state: Any, action: int) -> StepResult:
        pass

    @abc.abstractmethod
    def observe(self, state: Any) -> np.ndarray:
        """Observation vector fed to the agent acting in this environment."""
        pass

    @property
    @abc.abstractmethod
    def observation_size(self) -> int:
        pass

    @property
    @abc.abstractmethod
    def action_count(self) -> int:
        pass

    @property
    def name(self) -> str:
        return self.__class__.__name__

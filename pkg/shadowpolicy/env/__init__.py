from .base import Environment, StepResult
from .cartpole import CARTPOLE, CartPoleEnv, EnvState, max_return

__all__ = [
    "CARTPOLE",
    "CartPoleEnv",
    "EnvState",
    "Environment",
    "StepResult",
    "max_return",
]

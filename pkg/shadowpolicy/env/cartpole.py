"""Deterministic CartPole with an episode cap of 500 steps."""
import dataclasses
import math

import numpy as np

from shadowpolicy.exceptions import TerminalStateError

from .base import Environment, StepResult

GRAVITY = 9.8
CART_MASS = 1.0
POLE_MASS = 0.1
TOTAL_MASS = CART_MASS + POLE_MASS
HALF_POLE_LENGTH = 0.5
POLE_MASS_LENGTH = POLE_MASS * HALF_POLE_LENGTH
FORCE_MAGNITUDE = 10.0
TAU = 0.02

X_THRESHOLD = 2.4
THETA_THRESHOLD = 12 * 2 * math.pi / 360
EPISODE_CAP = 500
STEP_REWARD = 1.0
RESET_BOUND = 0.05

PUSH_LEFT = 0
PUSH_RIGHT = 1


@dataclasses.dataclass(frozen=True)
class EnvState:
    x: float
    x_dot: float
    theta: float
    theta_dot: float
    steps: int = 0
    terminal: bool = False

    def observation(self) -> np.ndarray:
        return np.array(
            [self.x, self.x_dot, self.theta, self.theta_dot], dtype=np.float64
        )


def reset(seed: int) -> EnvState:
    rng = np.random.default_rng(seed)
    x, x_dot, theta, theta_dot = rng.uniform(-RESET_BOUND, RESET_BOUND, size=4)
    return EnvState(
        x=float(x), x_dot=float(x_dot), theta=float(theta), theta_dot=float(theta_dot)
    )


def step(state: EnvState, action: int) -> StepResult:
    if state.terminal:
        raise TerminalStateError("cannot step a terminal state")

    if action not in (PUSH_LEFT, PUSH_RIGHT):
        raise ValueError("invalid CartPole action: {}".format(action))

    force = FORCE_MAGNITUDE if action == PUSH_RIGHT else -FORCE_MAGNITUDE
    cos_theta = math.cos(state.theta)
    sin_theta = math.sin(state.theta)

    temp = (
        force + POLE_MASS_LENGTH * state.theta_dot * state.theta_dot * sin_theta
    ) / TOTAL_MASS
    theta_acc = (GRAVITY * sin_theta - cos_theta * temp) / (
        HALF_POLE_LENGTH
        * (4.0 / 3.0 - POLE_MASS * cos_theta * cos_theta / TOTAL_MASS)
    )
    x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos_theta / TOTAL_MASS

    x = state.x + TAU * state.x_dot
    x_dot = state.x_dot + TAU * x_acc
    theta = state.theta + TAU * state.theta_dot
    theta_dot = state.theta_dot + TAU * theta_acc
    steps = state.steps + 1

    terminal = (
        abs(x) > X_THRESHOLD or abs(theta) > THETA_THRESHOLD or steps >= EPISODE_CAP
    )
    next_state = EnvState(
        x=x,
        x_dot=x_dot,
        theta=theta,
        theta_dot=theta_dot,
        steps=steps,
        terminal=terminal,
    )
    return StepResult(next_state=next_state, reward=STEP_REWARD, terminal=terminal)


def max_return() -> float:
    return EPISODE_CAP * STEP_REWARD


class CartPoleEnv(Environment):
    def reset(self, seed: int) -> EnvState:
        return reset(seed)

    def step(self, state: EnvState, action: int) -> StepResult:
        return step(state, action)

    def observe(self, state: EnvState) -> np.ndarray:
        return state.observation()

    @property
    def observation_size(self) -> int:
        return 4

    @property
    def action_count(self) -> int:
        return 2

    def max_return(self) -> float:
        return max_return()


CARTPOLE = CartPoleEnv()

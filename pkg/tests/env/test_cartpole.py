import dataclasses

import numpy as np
import pytest

from shadowpolicy.env import CARTPOLE, EnvState, max_return
from shadowpolicy.env.cartpole import reset, step
from shadowpolicy.exceptions import TerminalStateError

ORIGIN = EnvState(x=0.0, x_dot=0.0, theta=0.0, theta_dot=0.0)


def test_reset_is_deterministic():
    assert reset(42) == reset(42)


def test_reset_bounds():
    for seed in range(1000):
        assert np.all(np.abs(reset(seed).observation()) <= 0.05)


def test_reset_seeds_differ():
    states = {reset(seed) for seed in range(1000)}
    assert len(states) >= 999


def test_reset_starts_episode():
    state = reset(3)
    assert state.steps == 0
    assert not state.terminal


def test_push_right_from_rest():
    result = step(ORIGIN, 1)

    assert result.next_state.x_dot == pytest.approx(0.1951, abs=1e-3)
    assert result.next_state.x == 0.0
    assert result.reward == 1.0
    assert not result.terminal
    assert result.next_state.steps == 1


def test_mirror_symmetry():
    left, right = ORIGIN, ORIGIN

    while not (left.terminal or right.terminal):
        left = step(left, 0).next_state
        right = step(right, 1).next_state

        np.testing.assert_allclose(
            left.observation(), -right.observation(), rtol=0, atol=1e-12
        )

    assert left.terminal and right.terminal


def test_episode_cap():
    state = dataclasses.replace(ORIGIN, steps=499)
    result = step(state, 0)

    assert result.terminal
    assert result.next_state.steps == 500


@pytest.mark.parametrize(
    "state",
    [
        EnvState(x=2.39, x_dot=1.0, theta=0.0, theta_dot=0.0),
        EnvState(x=0.0, x_dot=0.0, theta=0.2, theta_dot=1.0),
    ],
)
def test_failure_is_terminal(state):
    assert step(state, 1).terminal


def test_step_terminal_state_rejected():
    state = dataclasses.replace(ORIGIN, terminal=True)

    with pytest.raises(TerminalStateError):
        step(state, 0)


@pytest.mark.parametrize("action", [-1, 2])
def test_invalid_action(action):
    with pytest.raises(ValueError):
        step(ORIGIN, action)


def test_step_is_pure():
    state = reset(5)
    assert step(state, 1) == step(state, 1)
    assert state.steps == 0


def test_return_is_steps_survived():
    state = reset(0)
    total = 0.0

    while not state.terminal:
        result = CARTPOLE.step(state, 1)
        total += result.reward
        state = result.next_state

    assert total == state.steps
    assert total <= max_return()


def test_max_return():
    assert max_return() == 500.0
    assert CARTPOLE.max_return() == 500.0


def test_environment_shape():
    assert CARTPOLE.observation_size == 4
    assert CARTPOLE.action_count == 2
    assert CARTPOLE.observe(ORIGIN).shape == (4,)

import math
from typing import Callable, List, Optional, Tuple

import numpy as np

from shadowpolicy.env import CARTPOLE, Environment
from shadowpolicy.exceptions import DivergenceError
from shadowpolicy.ml.approximator import (
    Network,
    OptimizerState,
    backward,
    forward_batch,
    init_network,
    init_optimizer,
    optimizer_step,
)
from shadowpolicy.utils import get_logger
from shadowpolicy.utils.seeding import episode_seeds

from .dataclass import DqnConfig, EpisodeRecord, EvalStats, TdLoss, Transition
from .policy import Policy, greedy_action
from .replay import ReplayBatch, RingBuffer

logger = get_logger(__name__)


def epsilon_greedy_action(
    net: Network, s: np.ndarray, epsilon: float, rng: np.random.Generator
) -> int:
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must lie in [0, 1], got {}".format(epsilon))

    if rng.random() < epsilon:
        return int(rng.integers(net.action_count))

    return greedy_action(net, s)


def double_q_target(
    behavior: Network, target: Network, t: Transition, gamma: float
) -> float:
    if t.terminal:
        return float(t.r)

    return float(
        double_q_targets(
            behavior,
            target,
            np.asarray([t.r], dtype=np.float64),
            np.asarray(t.s_next, dtype=np.float64)[None, :],
            np.asarray([t.terminal]),
            gamma,
        )[0]
    )


def double_q_targets(
    behavior: Network,
    target: Network,
    rewards: np.ndarray,
    next_states: np.ndarray,
    terminals: np.ndarray,
    gamma: float,
) -> np.ndarray:
    """r + gamma * Q_target(s', argmax_a Q_behavior(s', a)), or r if terminal."""
    best = np.argmax(forward_batch(behavior, next_states), axis=1)
    evaluated = forward_batch(target, next_states)[np.arange(len(best)), best]
    return np.where(terminals, rewards, rewards + gamma * evaluated)


def linear_epsilon(cfg: DqnConfig, step: int) -> float:
    decay_steps = max(1, int(cfg.exploration_fraction * cfg.total_steps))
    fraction = min(1.0, step / decay_steps)
    return cfg.epsilon_start + fraction * (cfg.epsilon_end - cfg.epsilon_start)


def td_loss_and_gradient(
    q_taken: np.ndarray, targets: np.ndarray, loss: TdLoss
) -> Tuple[float, np.ndarray]:
    """Mean TD loss and its derivative with respect to each Q(s, a)."""
    errors = q_taken - targets

    if loss == TdLoss.huber:
        abs_errors = np.abs(errors)
        quadratic = np.minimum(abs_errors, 1.0)
        values = 0.5 * quadratic ** 2 + (abs_errors - quadratic)
        return float(values.mean()), np.clip(errors, -1.0, 1.0)

    return float(np.mean(errors ** 2)), 2.0 * errors


def td_update(
    behavior: Network,
    target: Network,
    optimizer: OptimizerState,
    batch: ReplayBatch,
    cfg: DqnConfig,
    stage: str = "dqn",
    step: int = 0,
) -> float:
    """One double-Q gradient step of `behavior` on `batch`; returns the TD loss."""
    targets = double_q_targets(
        behavior,
        target,
        batch.rewards,
        batch.next_states,
        batch.terminals,
        cfg.gamma,
    )
    q_values = forward_batch(behavior, batch.states)
    rows = np.arange(len(batch))
    loss, d_q = td_loss_and_gradient(q_values[rows, batch.actions], targets, cfg.loss)

    if not math.isfinite(loss):
        raise DivergenceError(stage, step, loss)

    output_grads = np.zeros_like(q_values)
    output_grads[rows, batch.actions] = d_q
    grads = backward(behavior, batch.states, output_grads)
    optimizer_step(optimizer, behavior, grads.clip_by_norm(cfg.max_grad_norm))
    return loss


def train_q_network(
    env: Environment,
    cfg: DqnConfig,
    stage: str = "dqn",
    on_episode: Optional[Callable[[EpisodeRecord], None]] = None,
) -> Tuple[Network, List[EpisodeRecord]]:
    """Double DQN with uniform experience replay on any `Environment`."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    behavior = init_network(cfg.network)
    target = behavior.copy()
    optimizer = init_optimizer(behavior, step_size=cfg.learning_rate)
    replay = RingBuffer(cfg.replay_capacity, env.observation_size)

    curve: List[EpisodeRecord] = []
    seeds = iter(episode_seeds(cfg.seed, cfg.total_steps + 1))
    state = env.reset(next(seeds))
    episode_return = 0.0
    episode_steps = 0

    for step in range(1, cfg.total_steps + 1):
        obs = env.observe(state)
        action = epsilon_greedy_action(behavior, obs, linear_epsilon(cfg, step), rng)
        result = env.step(state, action)
        replay.append(
            Transition(
                s=obs,
                a=action,
                r=result.reward,
                s_next=env.observe(result.next_state),
                terminal=result.terminal,
            )
        )
        episode_return += result.reward
        episode_steps += 1
        state = result.next_state

        if result.terminal:
            record = EpisodeRecord(
                episode=len(curve) + 1, steps=episode_steps, return_=episode_return
            )
            curve.append(record)
            if on_episode is not None:
                on_episode(record)
            if record.episode % cfg.log_interval == 0:
                recent = [r.return_ for r in curve[-cfg.log_interval :]]
                logger.info(
                    "{} step {}: episode {}, mean return {:.2f}".format(
                        stage, step, record.episode, float(np.mean(recent))
                    )
                )
            state = env.reset(next(seeds))
            episode_return = 0.0
            episode_steps = 0

        if step > cfg.learning_starts and step % cfg.train_frequency == 0:
            batch = replay.sample(cfg.batch_size, rng)
            td_update(behavior, target, optimizer, batch, cfg, stage, step)

        if step % cfg.target_update == 0:
            target.load_parameters_from(behavior)

    return behavior, curve


def train_dqn(cfg: DqnConfig) -> Tuple[Network, List[EpisodeRecord]]:
    """Train a CartPole victim; returns the behavior network and its curve."""
    return train_q_network(CARTPOLE, cfg, stage="victim")


def run_episode(
    policy: Policy, seed: int, env: Environment = CARTPOLE
) -> List[Transition]:
    state = env.reset(seed)
    transitions: List[Transition] = []
    terminal = False

    while not terminal:
        obs = env.observe(state)
        action = policy.act(obs)
        result = env.step(state, action)
        terminal = result.terminal
        transitions.append(
            Transition(
                s=obs,
                a=action,
                r=result.reward,
                s_next=env.observe(result.next_state),
                terminal=terminal,
            )
        )
        state = result.next_state

    return transitions


def evaluate_policy(
    policy: Policy, episodes: int, seed: int, env: Environment = CARTPOLE
) -> EvalStats:
    if episodes < 1:
        raise ValueError("at least one evaluation episode is required")

    policy.reseed(seed)
    returns = [
        float(sum(t.r for t in run_episode(policy, episode_seed, env)))
        for episode_seed in episode_seeds(seed, episodes)
    ]
    return EvalStats.from_returns(returns)

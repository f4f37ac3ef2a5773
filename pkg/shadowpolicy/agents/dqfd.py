"""Deep Q-learning from demonstrations.

The imitation Q-function is pre-trained on demonstrations only, then keeps
learning from epsilon-greedy play in a replica environment, with the
demonstrations kept in the replay memory for good.
"""
import dataclasses
import math
from typing import Dict, List, Optional, Sequence

import numpy as np

from shadowpolicy.env import CARTPOLE, Environment
from shadowpolicy.exceptions import DivergenceError
from shadowpolicy.ml.approximator import (
    GradientSet,
    Network,
    backward,
    forward,
    forward_batch,
    init_network,
    init_optimizer,
    optimizer_step,
)
from shadowpolicy.utils import get_logger
from shadowpolicy.utils.seeding import episode_seeds

from .dataclass import DqfdConfig, EpisodeRecord, ImitationLogRecord, Transition
from .demonstrations import DemonstrationSet
from .dqn import double_q_targets, epsilon_greedy_action
from .policy import GreedyPolicy, Policy, agreement
from .replay import ReplayBatch, ReplayBuffer

logger = get_logger(__name__)


def _margin_scores(q_row: np.ndarray, a_e: int, margin: float) -> np.ndarray:
    scores = np.asarray(q_row, dtype=np.float64) + margin
    scores[a_e] -= margin
    return scores


def margin_loss(q_row: Sequence[float], a_e: int, margin: float) -> float:
    """max_a [Q(s, a) + l(a_E, a)] - Q(s, a_E), l = margin off the expert action."""
    q_row = np.asarray(q_row, dtype=np.float64)

    if not 0 <= a_e < len(q_row):
        raise ValueError("expert action {} out of range".format(a_e))

    if margin < 0:
        raise ValueError("margin must be nonnegative")

    scores = _margin_scores(q_row, a_e, margin)
    return float(scores.max() - q_row[a_e])


def margin_loss_gradient(q_row: Sequence[float], a_e: int, margin: float) -> np.ndarray:
    """Subgradient of `margin_loss` with respect to the Q-value row."""
    q_row = np.asarray(q_row, dtype=np.float64)
    grad = np.zeros_like(q_row)
    grad[int(np.argmax(_margin_scores(q_row, a_e, margin)))] += 1.0
    grad[a_e] -= 1.0
    return grad


@dataclasses.dataclass
class NStepSegment:
    """Transitions t, t+1, ... of a single episode, in order."""

    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray


def n_step_return(
    segment: NStepSegment, n: int, gamma: float, target_net: Network
) -> float:
    """sum_{i<k} gamma^i r_{t+i} + gamma^k max_a Q(s_{t+k}, a).

    k = n unless the segment ends earlier; a terminal transition drops the
    bootstrap term.
    """
    if n < 1:
        raise ValueError("n must be at least 1")

    total = 0.0
    k = 0
    last = 0
    while k < n and k < len(segment.rewards):
        last = k
        total += gamma ** k * float(segment.rewards[k])
        k += 1
        if segment.terminals[last]:
            return total

    bootstrap = float(np.max(forward(target_net, segment.next_states[last])))
    return total + gamma ** k * bootstrap


def nstep_targets(batch: ReplayBatch, target: Network) -> np.ndarray:
    bootstrap = np.max(forward_batch(target, batch.nstep_states), axis=1)
    return batch.nstep_rewards + batch.nstep_discounts * bootstrap


@dataclasses.dataclass
class HybridLoss:
    loss: float
    grads: GradientSet
    td_errors: np.ndarray
    components: Dict[str, float]


def hybrid_loss(
    behavior: Network, target: Network, batch: ReplayBatch, cfg: DqfdConfig
) -> HybridLoss:
    """J = J_DQ + lambda_1 J_n + lambda_2 J_E + lambda_3 J_L2.

    J_DQ and J_n are mean squared errors against the 1-step double-Q and the
    n-step targets, J_E is the mean margin loss with self-generated entries
    weighted zero, J_L2 the sum of squared weight-matrix entries.
    """
    size = len(batch)
    if size == 0:
        raise ValueError("empty batch")

    rows = np.arange(size)
    q_values = forward_batch(behavior, batch.states)
    q_taken = q_values[rows, batch.actions]

    one_step = double_q_targets(
        behavior, target, batch.rewards, batch.next_states, batch.terminals, cfg.gamma
    )
    one_step_errors = q_taken - one_step
    j_dq = float(np.mean(one_step_errors ** 2))

    n_errors = q_taken - nstep_targets(batch, target)
    j_n = float(np.mean(n_errors ** 2))

    is_demo = (
        batch.is_demo if batch.is_demo is not None else np.ones(size, dtype=bool)
    )
    output_grads = np.zeros_like(q_values)
    output_grads[rows, batch.actions] += 2.0 * one_step_errors
    output_grads[rows, batch.actions] += cfg.lambda_nstep * 2.0 * n_errors

    margin_values = np.zeros(size)
    for i in np.flatnonzero(is_demo):
        a_e = int(batch.actions[i])
        margin_values[i] = margin_loss(q_values[i], a_e, cfg.margin)
        output_grads[i] += cfg.lambda_imitation * margin_loss_gradient(
            q_values[i], a_e, cfg.margin
        )
    j_e = float(np.mean(margin_values))

    j_l2 = float(sum(np.sum(w * w) for w in behavior.weights))

    loss = (
        j_dq
        + cfg.lambda_nstep * j_n
        + cfg.lambda_imitation * j_e
        + cfg.lambda_l2 * j_l2
    )

    if not math.isfinite(loss):
        raise DivergenceError("imitation", 0, loss)

    grads = backward(behavior, batch.states, output_grads)
    if cfg.lambda_l2:
        grads.weights = [
            g + cfg.lambda_l2 * 2.0 * w for g, w in zip(grads.weights, behavior.weights)
        ]

    return HybridLoss(
        loss=loss,
        grads=grads,
        td_errors=np.abs(one_step_errors),
        components={"dq": j_dq, "n_step": j_n, "margin": j_e, "l2": j_l2},
    )


def sample_prioritized(
    buffer: ReplayBuffer, batch_size: int, rng: np.random.Generator
) -> ReplayBatch:
    return buffer.sample(batch_size, rng)


def build_replay_buffer(demos: DemonstrationSet, cfg: DqfdConfig) -> ReplayBuffer:
    return ReplayBuffer(
        demos,
        capacity=cfg.replay_capacity,
        n_step=cfg.n_step,
        gamma=cfg.gamma,
        alpha=cfg.priority_alpha,
        epsilon_demo=cfg.priority_epsilon_demo,
        epsilon_self=cfg.priority_epsilon_self,
    )


@dataclasses.dataclass
class ImitationResult:
    network: Network
    log: List[ImitationLogRecord]
    curve: List[EpisodeRecord]
    env_steps: int
    buffer: Optional[ReplayBuffer] = None


class _UpdateLoop:
    """Shared gradient-update state of both training phases."""

    def __init__(self, demos: DemonstrationSet, cfg: DqfdConfig):
        self.cfg = cfg
        self.demos = demos
        self.rng = np.random.default_rng(cfg.seed)
        self.behavior = init_network(cfg.network)
        self.target = self.behavior.copy()
        self.optimizer = init_optimizer(self.behavior, step_size=cfg.learning_rate)
        self.buffer = build_replay_buffer(demos, cfg)
        self.log: List[ImitationLogRecord] = []
        self.step = 0
        self._window: List[float] = []

    def update(self) -> None:
        self.step += 1
        batch = sample_prioritized(self.buffer, self.cfg.batch_size, self.rng)

        try:
            result = hybrid_loss(self.behavior, self.target, batch, self.cfg)
        except DivergenceError as e:
            raise DivergenceError("imitation", self.step, e.loss) from e

        optimizer_step(
            self.optimizer,
            self.behavior,
            result.grads.clip_by_norm(self.cfg.max_grad_norm),
        )
        self.buffer.update_priorities(batch.indices, result.td_errors)
        self._window.append(result.loss)

        if self.step % self.cfg.target_update == 0:
            self.target.load_parameters_from(self.behavior)

        if self.step % self.cfg.log_interval == 0:
            record = ImitationLogRecord(
                step=self.step,
                loss=float(np.mean(self._window)),
                agreement=demonstration_agreement(self.behavior, self.demos),
            )
            self._window = []
            self.log.append(record)
            logger.info(
                "imitation step {}: loss {:.4f}, agreement {:.3f}".format(
                    record.step, record.loss, record.agreement
                )
            )


def dqfd_train(
    demos: DemonstrationSet,
    cfg: DqfdConfig,
    env: Environment = CARTPOLE,
    keep_buffer: bool = False,
) -> ImitationResult:
    """Pre-train on demonstrations, then interact with the replica `env`."""
    cfg.validate()
    if demos.count == 0:
        raise ValueError("dqfd_train needs at least one demonstration")

    loop = _UpdateLoop(demos, cfg)

    for _ in range(cfg.pretraining_steps):
        loop.update()

    curve: List[EpisodeRecord] = []
    env_steps = 0
    seeds = iter(episode_seeds(cfg.seed + 1, cfg.interaction_steps + 1))
    state = env.reset(next(seeds)) if cfg.interaction_steps else None
    episode_return = 0.0
    episode_steps = 0

    for _ in range(cfg.interaction_steps):
        obs = env.observe(state)
        action = epsilon_greedy_action(
            loop.behavior, obs, cfg.exploration_epsilon, loop.rng
        )
        result = env.step(state, action)
        env_steps += 1
        loop.buffer.add(
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
            curve.append(
                EpisodeRecord(
                    episode=len(curve) + 1, steps=episode_steps, return_=episode_return
                )
            )
            state = env.reset(next(seeds))
            episode_return = 0.0
            episode_steps = 0

        loop.update()

    return ImitationResult(
        network=loop.behavior,
        log=loop.log,
        curve=curve,
        env_steps=env_steps,
        buffer=loop.buffer if keep_buffer else None,
    )


def imitated_policy(q_tilde: Network) -> Policy:
    return GreedyPolicy(q_tilde)


def demonstration_agreement(q_tilde: Network, demos: DemonstrationSet) -> float:
    """Fraction of demonstrated actions reproduced by the greedy imitation."""
    if demos.count == 0:
        return float("nan")
    return agreement(imitated_policy(q_tilde), None, demos.states, demos.actions)


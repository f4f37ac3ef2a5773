"""Black-box perturbation adversary driven by an imitated Q-function.

The adversary decides on every step whether to perturb the victim. A
perturbation is assumed to succeed and makes the victim play the action the
imitation rates worst. The adversary pays `cost` per perturbation and collects
the victim's regret when the episode ends.
"""
import dataclasses
import math
from enum import IntEnum
from typing import List, Optional, Tuple

import numpy as np

from shadowpolicy.agents import EpisodeRecord, GreedyPolicy, Policy, as_black_box
from shadowpolicy.agents.dqn import train_q_network
from shadowpolicy.env import CARTPOLE, CartPoleEnv, Environment, EnvState, StepResult
from shadowpolicy.exceptions import AccountingError
from shadowpolicy.ml.approximator import Network, forward
from shadowpolicy.utils import get_logger
from shadowpolicy.utils.seeding import episode_seeds

from .dataclass import AdversaryConfig, AttackEpisode, AttackReport, check_r_max

logger = get_logger(__name__)


class AdversaryAction(IntEnum):
    no_perturb = 0
    perturb = 1


@dataclasses.dataclass(frozen=True)
class AdversaryEnvState:
    env_state: EnvState
    score: float = 0.0
    perturbations: int = 0


def worst_action(q_tilde: Network, s: np.ndarray) -> int:
    # first minimum wins ties
    return int(np.argmin(forward(q_tilde, s)))


def adversary_step_reward(
    to_perturb: bool, terminal: bool, cost: float, r_max: float, r_t: float
) -> float:
    """Per-step adversary reward; `r_t` includes this step's victim reward."""
    if not 0 <= r_t <= r_max:
        raise ValueError("victim score {} outside [0, {}]".format(r_t, r_max))

    reward = -cost if to_perturb else 0.0

    if terminal:
        reward += r_max - r_t

    return reward


def adversary_env_step(
    adv_state: AdversaryEnvState,
    adv_action: int,
    victim: Policy,
    q_tilde: Network,
    cost: float = 1.0,
    r_max: Optional[float] = None,
    env: Environment = CARTPOLE,
) -> StepResult:
    if r_max is None:
        r_max = _max_return(env)

    obs = env.observe(adv_state.env_state)
    to_perturb = adv_action == AdversaryAction.perturb
    action = worst_action(q_tilde, obs) if to_perturb else victim.act(obs)
    result = env.step(adv_state.env_state, action)
    score = adv_state.score + result.reward
    reward = adversary_step_reward(to_perturb, result.terminal, cost, r_max, score)
    next_state = AdversaryEnvState(
        env_state=result.next_state,
        score=score,
        perturbations=adv_state.perturbations + int(to_perturb),
    )
    return StepResult(next_state=next_state, reward=reward, terminal=result.terminal)


def _max_return(env: Environment) -> float:
    if isinstance(env, CartPoleEnv):
        return env.max_return()
    raise ValueError("r_max is required for environment {}".format(env.name))


class AdversaryEnv(Environment):
    """The victim's environment seen from the adversary's seat."""

    def __init__(
        self,
        victim: Policy,
        q_tilde: Network,
        cost: float = 1.0,
        r_max: Optional[float] = None,
        env: Environment = CARTPOLE,
    ):
        self.victim = as_black_box(victim)
        self.q_tilde = q_tilde
        self.cost = cost
        if r_max is None:
            r_max = _max_return(env)
        elif isinstance(env, CartPoleEnv):
            check_r_max(r_max, env.max_return())
        self.r_max = r_max
        self.env = env

    def reset(self, seed: int) -> AdversaryEnvState:
        return AdversaryEnvState(env_state=self.env.reset(seed))

    def step(self, state: AdversaryEnvState, action: int) -> StepResult:
        return adversary_env_step(
            state, action, self.victim, self.q_tilde, self.cost, self.r_max, self.env
        )

    def observe(self, state: AdversaryEnvState) -> np.ndarray:
        return self.env.observe(state.env_state)

    @property
    def observation_size(self) -> int:
        return self.env.observation_size

    @property
    def action_count(self) -> int:
        return len(AdversaryAction)


def train_adversary(
    victim: Policy,
    q_tilde: Network,
    cfg: AdversaryConfig,
    env: Environment = CARTPOLE,
) -> Tuple[Network, List[EpisodeRecord]]:
    cfg.validate()
    victim = as_black_box(victim)
    victim.reseed(cfg.seed)
    adv_env = AdversaryEnv(victim, q_tilde, cfg.cost, cfg.r_max, env)
    return train_q_network(adv_env, cfg.dqn, stage="adversary")


def evaluate_attack(
    adversary: Network,
    victim: Policy,
    q_tilde: Network,
    episodes: int,
    seed: int,
    cost: float = 1.0,
    r_max: Optional[float] = None,
    env: Environment = CARTPOLE,
) -> AttackReport:
    if episodes < 1:
        raise ValueError("at least one attack episode is required")

    victim = as_black_box(victim)
    victim.reseed(seed)
    adv_env = AdversaryEnv(victim, q_tilde, cost, r_max, env)
    adv_policy = GreedyPolicy(adversary)
    records: List[AttackEpisode] = []

    for index, episode_seed in enumerate(episode_seeds(seed, episodes), start=1):
        state = adv_env.reset(episode_seed)
        adversary_return = 0.0
        terminal = False

        while not terminal:
            action = adv_policy.act(adv_env.observe(state))
            result = adv_env.step(state, action)
            adversary_return += result.reward
            terminal = result.terminal
            state = result.next_state

        regret = adv_env.r_max - state.score
        expected = regret - adv_env.cost * state.perturbations

        if not math.isclose(adversary_return, expected, rel_tol=0.0, abs_tol=1e-9):
            raise AccountingError(
                "episode {}: adversary return {} != {}".format(
                    index, adversary_return, expected
                )
            )

        records.append(
            AttackEpisode(
                episode=index,
                regret=regret,
                perturbations=state.perturbations,
                victim_return=state.score,
                adversary_return=adversary_return,
            )
        )

    report = AttackReport.from_episodes(records)
    logger.info(
        "Attack over {} episodes: mean regret {:.2f}, mean perturbations {:.2f}".format(
            episodes, report.mean_regret, report.mean_perturbations
        )
    )
    return report

"""Adversarial state crafting against the imitation, and transfer to the victim."""
from typing import List, Optional, Tuple

import numpy as np

from shadowpolicy.agents import Policy, as_black_box
from shadowpolicy.agents.dqn import run_episode
from shadowpolicy.env import CARTPOLE, Environment
from shadowpolicy.ml.approximator import (
    Network,
    Objective,
    forward_batch,
    input_gradient_batch,
)
from shadowpolicy.utils import get_logger
from shadowpolicy.utils.seeding import episode_seeds

from .dataclass import FgsmConfig, TransferEpisode, TransferReport, TransferTrial

logger = get_logger(__name__)


def _greedy_batch(q_tilde: Network, states: np.ndarray) -> np.ndarray:
    return np.argmax(forward_batch(q_tilde, states), axis=1)


def craft_adversarial_batch(
    q_tilde: Network, states: np.ndarray, cfg: FgsmConfig
) -> Tuple[np.ndarray, np.ndarray]:
    """Iterative FGSM on a batch of states.

    Each state moves by `eps` along the sign of the gradient of the negated
    value of the action Q̃ prefers at the original state, clipped into
    [low, high], until that preference changes. Returns the final iterates and
    a boolean mask of the states whose greedy action flipped.
    """
    original = np.asarray(states, dtype=np.float64)
    if original.ndim != 2:
        raise ValueError("expected a 2-D batch of states")

    chosen = _greedy_batch(q_tilde, original)
    current = np.clip(original, cfg.low, cfg.high)
    success = np.zeros(len(original), dtype=bool)
    active = np.ones(len(original), dtype=bool)
    frozen_step: Optional[np.ndarray] = None

    if not cfg.refresh_gradient and len(original):
        frozen_step = cfg.eps * np.sign(
            input_gradient_batch(
                q_tilde, original, Objective.negative_action_value, chosen
            )
        )

    for _ in range(cfg.max_iterations):
        idx = np.flatnonzero(active)
        if len(idx) == 0:
            break

        if frozen_step is None:
            step = cfg.eps * np.sign(
                input_gradient_batch(
                    q_tilde,
                    current[idx],
                    Objective.negative_action_value,
                    chosen[idx],
                )
            )
        else:
            step = frozen_step[idx]

        updated = np.clip(current[idx] + step, cfg.low, cfg.high)
        stalled = np.all(updated == current[idx], axis=1)
        current[idx] = updated

        flipped = _greedy_batch(q_tilde, updated) != chosen[idx]
        success[idx[flipped]] = True
        active[idx[flipped | stalled]] = False

    return current, success


def craft_adversarial_state(
    q_tilde: Network, s: np.ndarray, cfg: FgsmConfig
) -> Optional[np.ndarray]:
    """Perturbed state flipping Q̃'s greedy action, or None on failure."""
    perturbed, success = craft_adversarial_batch(
        q_tilde, np.asarray(s, dtype=np.float64)[None, :], cfg
    )
    return perturbed[0] if success[0] else None


def transfer_trial(
    victim: Policy,
    imitation: Policy,
    q_tilde: Network,
    s: np.ndarray,
    cfg: FgsmConfig,
) -> TransferTrial:
    s = np.asarray(s, dtype=np.float64)
    perturbed = craft_adversarial_state(q_tilde, s, cfg)

    if perturbed is None:
        return TransferTrial(
            original_state=s,
            perturbed_state=None,
            imitation_flipped=False,
            victim_flipped=False,
        )

    imitation_flipped = imitation.act(perturbed) != imitation.act(s)
    victim_flipped = imitation_flipped and victim.act(perturbed) != victim.act(s)
    return TransferTrial(
        original_state=s,
        perturbed_state=perturbed,
        imitation_flipped=bool(imitation_flipped),
        victim_flipped=bool(victim_flipped),
    )


def count_transfers(
    victim: Policy,
    imitation: Policy,
    q_tilde: Network,
    states: np.ndarray,
    cfg: FgsmConfig,
) -> Tuple[int, int]:
    """(crafted, transferred) counts over a batch of visited states."""
    states = np.asarray(states, dtype=np.float64)
    perturbed, success = craft_adversarial_batch(q_tilde, states, cfg)

    if not success.any():
        return 0, 0

    originals = states[success]
    crafted_states = perturbed[success]
    crafted = imitation.act_batch(crafted_states) != imitation.act_batch(originals)
    transferred = crafted & (
        victim.act_batch(crafted_states) != victim.act_batch(originals)
    )
    return int(crafted.sum()), int(transferred.sum())


def run_transfer_eval(
    victim: Policy,
    imitation: Policy,
    q_tilde: Network,
    episodes: int = 100,
    cfg: Optional[FgsmConfig] = None,
    seed: int = 0,
    env: Environment = CARTPOLE,
) -> TransferReport:
    """Victim-driven rollouts with crafting measured on every visited state.

    All rollouts happen before any measurement, so the victim's trajectories
    match an unattacked evaluation with the same seed.
    """
    if episodes < 1:
        raise ValueError("at least one transfer episode is required")

    cfg = cfg or FgsmConfig()
    cfg.validate()
    victim = as_black_box(victim)
    victim.reseed(seed)
    trajectories: List[np.ndarray] = [
        np.stack([t.s for t in run_episode(victim, episode_seed, env)])
        for episode_seed in episode_seeds(seed, episodes)
    ]

    records: List[TransferEpisode] = []
    for index, states in enumerate(trajectories, start=1):
        crafted, transferred = count_transfers(victim, imitation, q_tilde, states, cfg)
        records.append(
            TransferEpisode(
                episode=index,
                steps=len(states),
                crafted=crafted,
                transferred=transferred,
            )
        )
        logger.debug(
            "transfer episode {}: {} crafted, {} transferred".format(
                index, crafted, transferred
            )
        )

    report = TransferReport.from_episodes(records)
    logger.info(
        "Transfer over {} episodes: mean crafted {:.2f}, "
        "mean transferred {:.2f}".format(
            episodes, report.mean_crafted, report.mean_transferred
        )
    )
    return report

"""Constrained randomization of a greedy policy.

On every step the policy draws uniformly among the actions whose value falls
at most `omega_max` below the best one. Each step therefore loses at most
`omega_max` of value; nothing bounds the loss over a whole episode.
"""
import warnings
from typing import List, Optional, Sequence

import numpy as np
from scipy import stats

from shadowpolicy.agents import DqfdConfig, GreedyPolicy, Policy, agreement
from shadowpolicy.agents.demonstrations import collect_demonstrations
from shadowpolicy.agents.dqfd import dqfd_train
from shadowpolicy.agents.dqn import evaluate_policy
from shadowpolicy.attacks import FgsmConfig, run_transfer_eval
from shadowpolicy.env import CARTPOLE, Environment
from shadowpolicy.ml.approximator import Network, forward
from shadowpolicy.utils import get_logger

from .dataclass import CropConfig, CropReport, CropRow

logger = get_logger(__name__)


def feasible_actions(
    q: Network, s: np.ndarray, omega_max: float, literal_inequality: bool = False
) -> List[int]:
    if not omega_max >= 0:
        raise ValueError("omega_max must be nonnegative")

    values = forward(q, s)
    best = int(np.argmax(values))
    gaps = values[best] - values

    if literal_inequality:
        admitted = gaps >= omega_max
        admitted[best] = True
    else:
        admitted = gaps <= omega_max

    return [int(a) for a in np.flatnonzero(admitted)]


class CropPolicy(Policy):
    def __init__(self, network: Network, cfg: CropConfig):
        cfg.validate()
        super().__init__(network.action_count)
        self.network = network
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)

    def act(self, state: np.ndarray) -> int:
        actions = feasible_actions(
            self.network, state, self.cfg.omega_max, self.cfg.literal_inequality
        )
        if len(actions) == 1:
            return actions[0]
        return actions[int(self.rng.integers(len(actions)))]

    def reseed(self, seed: int) -> None:
        self.rng = np.random.default_rng(seed)


def crop_policy(q: Network, cfg: CropConfig) -> Policy:
    return CropPolicy(q, cfg)


def spearman_correlation(x: Sequence[float], y: Sequence[float]) -> float:
    if len(x) < 2:
        return float("nan")

    with warnings.catch_warnings():
        # constant input: scipy warns and returns NaN
        warnings.simplefilter("ignore")
        rho, _ = stats.spearmanr(x, y)

    return float(rho)


def evaluate_crop(
    victim_q: Network,
    omegas: Sequence[float],
    dqfd_cfg: DqfdConfig,
    demo_count: int,
    episodes: int,
    seed: int,
    fgsm_cfg: Optional[FgsmConfig] = None,
    transfer_episodes: Optional[int] = None,
    literal_inequality: bool = False,
    env: Environment = CARTPOLE,
) -> CropReport:
    """Sweep omega: return of the defended victim and how well it imitates.

    Every omega reuses the same seeds, so the omega = 0 row reproduces the
    undefended victim.
    """
    if len(omegas) == 0:
        raise ValueError("omega sweep is empty")

    fgsm_cfg = fgsm_cfg or FgsmConfig()
    transfer_episodes = transfer_episodes or episodes
    reference = GreedyPolicy(victim_q)
    rows: List[CropRow] = []

    for omega in omegas:
        crop_cfg = CropConfig(
            omega_max=omega, seed=seed, literal_inequality=literal_inequality
        )
        defended = crop_policy(victim_q, crop_cfg)
        stats_ = evaluate_policy(defended, episodes, seed, env)

        demos = collect_demonstrations(defended, demo_count, seed, env)
        imitation = dqfd_train(demos, dqfd_cfg, env)
        imitated = GreedyPolicy(imitation.network)
        transfer = run_transfer_eval(
            reference,
            imitated,
            imitation.network,
            transfer_episodes,
            fgsm_cfg,
            seed,
            env,
        )
        row = CropRow(
            omega=float(omega),
            mean_return=stats_.mean,
            imitation_agreement=agreement(imitated, reference, demos.states),
            mean_transfers=transfer.mean_transferred,
        )
        rows.append(row)
        logger.info(
            "CRoP omega={}: mean return {:.2f}, agreement {:.3f}, "
            "transfers {:.2f}".format(
                row.omega, row.mean_return, row.imitation_agreement, row.mean_transfers
            )
        )

    return CropReport(
        rows=rows,
        spearman=spearman_correlation(
            [r.omega for r in rows], [r.mean_return for r in rows]
        ),
    )

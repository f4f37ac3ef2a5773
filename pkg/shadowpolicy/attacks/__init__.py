from .adversary import (
    AdversaryAction,
    AdversaryEnv,
    AdversaryEnvState,
    adversary_env_step,
    adversary_step_reward,
    evaluate_attack,
    train_adversary,
    worst_action,
)
from .dataclass import (
    AdversaryConfig,
    AttackEpisode,
    AttackReport,
    FgsmConfig,
    TransferEpisode,
    TransferReport,
    TransferTrial,
)
from .transfer import (
    count_transfers,
    craft_adversarial_batch,
    craft_adversarial_state,
    run_transfer_eval,
    transfer_trial,
)

__all__ = [
    "AdversaryAction",
    "AdversaryConfig",
    "AdversaryEnv",
    "AdversaryEnvState",
    "AttackEpisode",
    "AttackReport",
    "FgsmConfig",
    "TransferEpisode",
    "TransferReport",
    "TransferTrial",
    "adversary_env_step",
    "adversary_step_reward",
    "count_transfers",
    "craft_adversarial_batch",
    "craft_adversarial_state",
    "evaluate_attack",
    "run_transfer_eval",
    "train_adversary",
    "worst_action",
]

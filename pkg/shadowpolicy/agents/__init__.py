from .dataclass import (
    DqfdConfig,
    DqnConfig,
    EpisodeRecord,
    EvalStats,
    ImitationLogRecord,
    TdLoss,
    Transition,
)
from .demonstrations import (
    DemonstrationSet,
    collect_demonstrations,
    load_demonstrations,
    save_demonstrations,
    split_demonstrations,
)
from .policy import (
    BlackBoxPolicy,
    GreedyPolicy,
    Policy,
    RandomPolicy,
    agreement,
    as_black_box,
    greedy_action,
)

__all__ = [
    "BlackBoxPolicy",
    "DemonstrationSet",
    "DqfdConfig",
    "DqnConfig",
    "EpisodeRecord",
    "EvalStats",
    "GreedyPolicy",
    "ImitationLogRecord",
    "Policy",
    "RandomPolicy",
    "TdLoss",
    "Transition",
    "agreement",
    "as_black_box",
    "collect_demonstrations",
    "greedy_action",
    "load_demonstrations",
    "save_demonstrations",
    "split_demonstrations",
]

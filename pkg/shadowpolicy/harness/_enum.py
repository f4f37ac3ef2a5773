from enum import Enum, unique


class StrEnum(str, Enum):
    pass


@unique
class Stage(StrEnum):
    train_target = "train-target"
    collect_demos = "collect-demos"
    imitate = "imitate"
    attack_train = "attack-train"
    attack_eval = "attack-eval"
    transfer_eval = "transfer-eval"
    crop_eval = "crop-eval"


@unique
class StageStatus(StrEnum):
    completed = "completed"
    skipped = "skipped"
    failed = "failed"
    blocked = "blocked"


@unique
class ReportKind(StrEnum):
    attack = "attack"
    transfer = "transfer"
    crop = "crop"
    training_curve = "training-curve"
    imitation_log = "imitation-log"
    attack_summary = "attack-summary"
    transfer_summary = "transfer-summary"
    imitation_summary = "imitation-summary"
    victim_summary = "victim-summary"

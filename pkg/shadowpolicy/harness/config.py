import dataclasses
import hashlib
import pathlib
from typing import Any, Dict, List, Optional, Sequence, Union

import dacite
import orjson

from shadowpolicy import settings
from shadowpolicy.agents import DqfdConfig, DqnConfig, TdLoss
from shadowpolicy.attacks import AdversaryConfig, FgsmConfig
from shadowpolicy.env import CARTPOLE
from shadowpolicy.exceptions import InvalidSpecError
from shadowpolicy.ml.approximator import Activation, NetworkSpec

# Fields with no influence on the produced numbers
_UNHASHED_FIELDS = ("output_dir", "workers", "render_plots")


@dataclasses.dataclass
class VictimSpec:
    victim_id: str
    dqn: DqnConfig
    seed: int = 0

    def validate(self) -> None:
        if not self.victim_id:
            raise InvalidSpecError("victim_id must not be empty")
        self.dqn.validate()


def _victim(victim_id: str, layer_sizes: List[int], seed: int) -> VictimSpec:
    return VictimSpec(
        victim_id=victim_id,
        dqn=DqnConfig(network=NetworkSpec(layer_sizes=layer_sizes)),
        seed=seed,
    )


def default_roster() -> List[VictimSpec]:
    return [
        _victim("dqn-a", [4, 64, 64, 2], 0),
        _victim("dqn-b", [4, 32, 32, 2], 1),
        _victim("dqn-c", [4, 128, 2], 2),
    ]


@dataclasses.dataclass
class EvaluationConfig:
    victim_episodes: int = 100
    attack_episodes: int = 100
    transfer_episodes: int = 100

    def validate(self) -> None:
        for field in dataclasses.fields(self):
            if getattr(self, field.name) < 1:
                raise InvalidSpecError("{} must be at least 1".format(field.name))


@dataclasses.dataclass
class CropSweepConfig:
    omegas: List[float] = dataclasses.field(
        default_factory=lambda: [0.0, 0.5, 1.0, 2.0, 5.0]
    )
    demo_count: int = 1000
    episodes: int = 100
    transfer_episodes: int = 20
    literal_inequality: bool = False
    enabled: bool = True

    def validate(self) -> None:
        if not self.omegas:
            raise InvalidSpecError("the omega sweep is empty")
        if any(not omega >= 0 for omega in self.omegas):
            raise InvalidSpecError("omegas must be nonnegative")
        if self.demo_count < 1 or self.episodes < 1 or self.transfer_episodes < 1:
            raise InvalidSpecError("crop counts must be positive")


@dataclasses.dataclass
class ExperimentConfig:
    victims: List[VictimSpec] = dataclasses.field(default_factory=default_roster)
    demo_counts: List[int] = dataclasses.field(
        default_factory=lambda: [5000, 2500, 1000]
    )
    dqfd: DqfdConfig = dataclasses.field(default_factory=DqfdConfig)
    adversary: AdversaryConfig = dataclasses.field(default_factory=AdversaryConfig)
    fgsm: FgsmConfig = dataclasses.field(default_factory=FgsmConfig)
    crop: CropSweepConfig = dataclasses.field(default_factory=CropSweepConfig)
    evaluation: EvaluationConfig = dataclasses.field(default_factory=EvaluationConfig)
    master_seed: int = 0
    output_dir: str = str(settings.OUTPUT_DIR)
    render_plots: bool = False
    workers: int = settings.WORKER_COUNT

    def validate(self) -> None:
        if not self.victims:
            raise InvalidSpecError("the victim roster is empty")

        ids = [v.victim_id for v in self.victims]
        if len(set(ids)) != len(ids):
            raise InvalidSpecError("duplicate victim ids: {}".format(ids))

        for victim in self.victims:
            victim.validate()

        if not self.demo_counts or any(count < 1 for count in self.demo_counts):
            raise InvalidSpecError(
                "demo counts must be positive, got {}".format(self.demo_counts)
            )

        if self.workers < 1:
            raise InvalidSpecError("workers must be at least 1")

        self.dqfd.validate()
        self.adversary.validate(CARTPOLE.max_return())
        self.fgsm.validate()
        self.crop.validate()
        self.evaluation.validate()

    @property
    def victim_ids(self) -> List[str]:
        return [v.victim_id for v in self.victims]

    def get_victim(self, victim_id: str) -> VictimSpec:
        for victim in self.victims:
            if victim.victim_id == victim_id:
                return victim

        raise InvalidSpecError(
            "unknown victim {}, roster: {}".format(victim_id, self.victim_ids)
        )


DACITE_CONFIG = dacite.Config(strict=True, cast=[Activation, TdLoss, float])


def config_from_dict(data: Dict[str, Any]) -> ExperimentConfig:
    try:
        cfg = dacite.from_dict(ExperimentConfig, data, config=DACITE_CONFIG)
    except dacite.DaciteError as e:
        raise InvalidSpecError("invalid experiment config: {}".format(e)) from e

    cfg.validate()
    return cfg


def load_config(path: Union[str, pathlib.Path, None] = None) -> ExperimentConfig:
    path = pathlib.Path(path) if path is not None else settings.DEFAULT_CONFIG_PATH

    with path.open("rb") as f:
        data = orjson.loads(f.read())

    return config_from_dict(data)


def apply_overrides(
    cfg: ExperimentConfig,
    seed: Optional[int] = None,
    out: Optional[Union[str, pathlib.Path]] = None,
    victims: Optional[Sequence[str]] = None,
    demos: Optional[Sequence[int]] = None,
    workers: Optional[int] = None,
) -> ExperimentConfig:
    """Return a copy of `cfg` with the command-line values applied."""
    changes: Dict[str, Any] = {}

    if seed is not None:
        changes["master_seed"] = seed
    if out is not None:
        changes["output_dir"] = str(out)
    if victims:
        changes["victims"] = [cfg.get_victim(victim_id) for victim_id in victims]
    if demos:
        changes["demo_counts"] = list(demos)
    if workers is not None:
        changes["workers"] = workers

    updated = dataclasses.replace(cfg, **changes)
    updated.validate()
    return updated


def canonical_json(item: Any) -> bytes:
    return orjson.dumps(item, option=orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY)


def digest(item: Any) -> str:
    return hashlib.sha256(canonical_json(item)).hexdigest()


def config_hash(cfg: ExperimentConfig) -> str:
    data = dataclasses.asdict(cfg)
    for name in _UNHASHED_FIELDS:
        data.pop(name)
    return digest(data)

import dataclasses
import pathlib
from typing import Dict, List, Optional, Tuple, Union

import dacite

from shadowpolicy import __version__, settings
from shadowpolicy.exceptions import ShadowPolicyException
from shadowpolicy.utils import dump_json, load_json

from ._enum import Stage, StageStatus


@dataclasses.dataclass
class RunLayout:
    """Where every artifact of a run lives, below a single root directory."""

    root: pathlib.Path

    @property
    def manifest_path(self) -> pathlib.Path:
        return self.root / settings.MANIFEST_NAME

    @property
    def reports_dir(self) -> pathlib.Path:
        return self.root / settings.REPORTS_DIRNAME

    @property
    def plots_dir(self) -> pathlib.Path:
        return self.root / settings.PLOTS_DIRNAME

    def victim_dir(self, victim_id: str) -> pathlib.Path:
        return self.root / settings.VICTIMS_DIRNAME / victim_id

    def cell_dir(self, victim_id: str, demo_count: int) -> pathlib.Path:
        return self.root / settings.CELLS_DIRNAME / cell_id(victim_id, demo_count)

    def relative(self, path: pathlib.Path) -> str:
        return path.relative_to(self.root).as_posix()


def cell_id(victim_id: str, demo_count: int) -> str:
    return "{}-{}".format(victim_id, demo_count)


@dataclasses.dataclass
class StageRecord:
    stage: Stage
    cell_id: str
    status: StageStatus
    stage_hash: str = ""
    seconds: float = 0.0
    # paths relative to the run directory
    artifacts: List[str] = dataclasses.field(default_factory=list)
    error: Optional[str] = None

    @property
    def key(self) -> Tuple[str, str]:
        return self.stage.value, self.cell_id

    @property
    def succeeded(self) -> bool:
        return self.status in (StageStatus.completed, StageStatus.skipped)


@dataclasses.dataclass
class RunManifest:
    config_hash: str
    version: str = __version__
    stages: List[StageRecord] = dataclasses.field(default_factory=list)
    reports: List[str] = dataclasses.field(default_factory=list)

    def get(self, stage: Stage, cell: str) -> Optional[StageRecord]:
        for record in self.stages:
            if record.stage == stage and record.cell_id == cell:
                return record
        return None

    def records_by_key(self) -> Dict[Tuple[str, str], StageRecord]:
        return {record.key: record for record in self.stages}

    @property
    def failed_count(self) -> int:
        return sum(1 for r in self.stages if r.status == StageStatus.failed)

    def to_dict(self) -> Dict:
        return dataclasses.asdict(self)

    def save(self, path: Union[str, pathlib.Path]) -> None:
        path = pathlib.Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        dump_json(path, self.to_dict())

    @classmethod
    def load(cls, path: Union[str, pathlib.Path]) -> "RunManifest":
        try:
            return dacite.from_dict(
                cls,
                load_json(path),
                config=dacite.Config(cast=[Stage, StageStatus]),
            )
        except (dacite.DaciteError, ValueError) as e:
            raise ShadowPolicyException(
                "unreadable run manifest {}: {}".format(path, e)
            ) from e

import dataclasses
from typing import List

from shadowpolicy.exceptions import InvalidSpecError


@dataclasses.dataclass
class CropConfig:
    omega_max: float = 0.0
    seed: int = 0
    # admit actions whose value gap is *at least* omega_max instead
    literal_inequality: bool = False

    def validate(self) -> None:
        if not self.omega_max >= 0:
            raise InvalidSpecError("omega_max must be nonnegative")


@dataclasses.dataclass
class CropRow:
    omega: float
    mean_return: float
    imitation_agreement: float
    mean_transfers: float


@dataclasses.dataclass
class CropReport:
    rows: List[CropRow]
    # rank correlation between omega and mean return, NaN when undefined
    spearman: float

import dataclasses
from enum import Enum, unique
from typing import List

import numpy as np

from shadowpolicy.exceptions import InvalidSpecError


@unique
class Activation(str, Enum):
    relu = "relu"


# Codes used by the checkpoint format
ACTIVATION_CODES = {"identity": 0, Activation.relu.value: 1}


@dataclasses.dataclass
class NetworkSpec:
    layer_sizes: List[int]
    activation: Activation = Activation.relu
    seed: int = 0

    def validate(self) -> None:
        if len(self.layer_sizes) < 2:
            raise InvalidSpecError(
                "at least 2 layers are required, got {}".format(self.layer_sizes)
            )

        if any(int(size) < 1 for size in self.layer_sizes):
            raise InvalidSpecError(
                "layer sizes must be positive, got {}".format(self.layer_sizes)
            )

        if not 0 <= self.seed < 2 ** 64:
            raise InvalidSpecError("seed must be a 64-bit unsigned integer")

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_size(self) -> int:
        return self.layer_sizes[-1]

    @property
    def layer_count(self) -> int:
        return len(self.layer_sizes) - 1


@dataclasses.dataclass
class GradientSet:
    """Gradients of a scalar loss with respect to every network parameter."""

    weights: List[np.ndarray]
    biases: List[np.ndarray]

    @classmethod
    def zeros_like(cls, weights: List[np.ndarray], biases: List[np.ndarray]):
        return cls(
            weights=[np.zeros_like(w) for w in weights],
            biases=[np.zeros_like(b) for b in biases],
        )

    def arrays(self) -> List[np.ndarray]:
        return [*self.weights, *self.biases]

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())

    def global_norm(self) -> float:
        return float(np.sqrt(sum(float(np.sum(a * a)) for a in self.arrays())))

    def scale(self, factor: float) -> "GradientSet":
        return GradientSet(
            weights=[w * factor for w in self.weights],
            biases=[b * factor for b in self.biases],
        )

    def clip_by_norm(self, max_norm: float) -> "GradientSet":
        norm = self.global_norm()
        if max_norm <= 0 or norm <= max_norm:
            return self
        return self.scale(max_norm / norm)

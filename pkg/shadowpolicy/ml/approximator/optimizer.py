import dataclasses
from typing import List, Tuple

import numpy as np

from shadowpolicy.exceptions import (
    DimensionMismatchError,
    InvalidSpecError,
    NonFiniteError,
)

from .dataclass import GradientSet
from .network import Network


@dataclasses.dataclass
class OptimizerState:
    """Adam moments for one network; `step` counts applied updates."""

    step_size: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    first_moments: List[np.ndarray] = dataclasses.field(default_factory=list)
    second_moments: List[np.ndarray] = dataclasses.field(default_factory=list)
    step: int = 0
    algorithm: str = "adam"

    def validate(self) -> None:
        if self.step_size <= 0:
            raise InvalidSpecError("step_size must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise InvalidSpecError("beta1 and beta2 must lie in (0, 1)")


def init_optimizer(
    net: Network,
    step_size: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
) -> OptimizerState:
    params = [*net.weights, *net.biases]
    state = OptimizerState(
        step_size=step_size,
        beta1=beta1,
        beta2=beta2,
        epsilon=epsilon,
        first_moments=[np.zeros_like(p) for p in params],
        second_moments=[np.zeros_like(p) for p in params],
    )
    state.validate()
    return state


def optimizer_step(
    state: OptimizerState, net: Network, grads: GradientSet
) -> Tuple[Network, OptimizerState]:
    """Apply one Adam update.

    The network and moment buffers are updated in place and returned.
    """
    params = [*net.weights, *net.biases]
    grad_arrays = grads.arrays()

    if len(grad_arrays) != len(params) or any(
        g.shape != p.shape for g, p in zip(grad_arrays, params)
    ):
        raise DimensionMismatchError("gradient shapes do not match the network")

    if not grads.is_finite():
        raise NonFiniteError("refusing to apply non-finite gradients")

    state.step += 1
    bias1 = 1.0 - state.beta1 ** state.step
    bias2 = 1.0 - state.beta2 ** state.step

    for p, g, m, v in zip(
        params, grad_arrays, state.first_moments, state.second_moments
    ):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        m_hat = m / bias1
        v_hat = v / bias2
        p -= state.step_size * m_hat / (np.sqrt(v_hat) + state.epsilon)

    return net, state

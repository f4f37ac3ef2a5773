"""Multilayer perceptron with hand-written reverse-mode differentiation.

Every Q-function in the package (victims, imitations, adversaries) is a
`Network`: ReLU hidden layers, identity output, float64 parameters.
"""
import dataclasses
from enum import Enum, unique
from typing import List, Sequence, Tuple, Union

import numpy as np

from shadowpolicy.exceptions import DimensionMismatchError, NonFiniteError

from .dataclass import GradientSet, NetworkSpec


@unique
class Objective(str, Enum):
    action_value = "action_value"
    negative_action_value = "negative_action_value"


@dataclasses.dataclass
class Network:
    spec: NetworkSpec
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def copy(self) -> "Network":
        return Network(
            spec=dataclasses.replace(
                self.spec, layer_sizes=list(self.spec.layer_sizes)
            ),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )

    def load_parameters_from(self, other: "Network") -> None:
        """Copy `other`'s parameters into this network (target sync)."""
        for w, w_other in zip(self.weights, other.weights):
            np.copyto(w, w_other)
        for b, b_other in zip(self.biases, other.biases):
            np.copyto(b, b_other)

    @property
    def action_count(self) -> int:
        return self.spec.output_size

    @property
    def state_size(self) -> int:
        return self.spec.input_size

    def __call__(self, state: np.ndarray) -> np.ndarray:
        return forward(self, state)


def init_network(spec: NetworkSpec) -> Network:
    """Draw He-uniform weights and zero biases from `spec.seed`."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)

    weights = []
    biases = []
    for fan_in, fan_out in zip(spec.layer_sizes[:-1], spec.layer_sizes[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(
            rng.uniform(-limit, limit, size=(fan_out, fan_in)).astype(np.float64)
        )
        biases.append(np.zeros(fan_out, dtype=np.float64))

    return Network(spec=spec, weights=weights, biases=biases)


def _as_batch(net: Network, states: Union[np.ndarray, Sequence]) -> np.ndarray:
    x = np.asarray(states, dtype=np.float64)

    if x.ndim != 2 or x.shape[1] != net.state_size:
        raise DimensionMismatchError(
            "expected states of shape (batch, {}), got {}".format(
                net.state_size, x.shape
            )
        )

    if not np.all(np.isfinite(x)):
        raise NonFiniteError("non-finite network input")

    return x


def _forward_trace(
    net: Network, x: np.ndarray
) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """Return (layer inputs, pre-activations) for a batch `x`."""
    inputs = []
    pre_activations = []
    last = len(net.weights) - 1
    a = x

    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        inputs.append(a)
        z = a @ w.T + b
        pre_activations.append(z)
        a = z if i == last else np.maximum(z, 0.0)

    return inputs, pre_activations


def forward_batch(net: Network, states: Union[np.ndarray, Sequence]) -> np.ndarray:
    x = _as_batch(net, states)
    _, pre_activations = _forward_trace(net, x)
    return pre_activations[-1]


def forward(net: Network, state: Union[np.ndarray, Sequence]) -> np.ndarray:
    """Action values of a single state."""
    x = np.asarray(state, dtype=np.float64)

    if x.ndim != 1:
        raise DimensionMismatchError(
            "expected a 1-D state, got shape {}".format(x.shape)
        )

    return forward_batch(net, x[None, :])[0]


def _backpropagate(
    net: Network,
    inputs: List[np.ndarray],
    pre_activations: List[np.ndarray],
    delta: np.ndarray,
    with_parameters: bool = True,
) -> Tuple[GradientSet, np.ndarray]:
    """Push `delta` (dL/d output) back through the network.

    Returns summed parameter gradients and dL/d input.
    """
    grads = GradientSet.zeros_like(net.weights, net.biases)

    for i in range(len(net.weights) - 1, -1, -1):
        if with_parameters:
            grads.weights[i] = delta.T @ inputs[i]
            grads.biases[i] = delta.sum(axis=0)

        delta = delta @ net.weights[i]

        if i > 0:
            delta = delta * (pre_activations[i - 1] > 0.0)

    return grads, delta


def backward(
    net: Network,
    states: Union[np.ndarray, Sequence],
    output_gradients: Union[np.ndarray, Sequence],
) -> GradientSet:
    """Mean parameter gradient over a batch.

    `output_gradients[i]` is dL_i / d forward(net, states[i]); the returned
    gradient is that of mean_i L_i.
    """
    x = _as_batch(net, states)
    g = np.asarray(output_gradients, dtype=np.float64)

    if x.shape[0] == 0:
        raise DimensionMismatchError("empty batch")

    if g.shape != (x.shape[0], net.action_count):
        raise DimensionMismatchError(
            "expected output gradients of shape {}, got {}".format(
                (x.shape[0], net.action_count), g.shape
            )
        )

    if not np.all(np.isfinite(g)):
        raise NonFiniteError("non-finite output gradient")

    inputs, pre_activations = _forward_trace(net, x)
    grads, _ = _backpropagate(net, inputs, pre_activations, g / x.shape[0])

    if not grads.is_finite():
        raise NonFiniteError("non-finite parameter gradient")

    return grads


def input_gradient_batch(
    net: Network,
    states: Union[np.ndarray, Sequence],
    objective: Objective,
    actions: Union[np.ndarray, Sequence[int]],
) -> np.ndarray:
    """Gradient of the per-state objective with respect to each input state."""
    x = _as_batch(net, states)
    actions = np.asarray(actions, dtype=np.int64)

    if actions.shape != (x.shape[0],):
        raise DimensionMismatchError("one action index per state is required")

    if np.any(actions < 0) or np.any(actions >= net.action_count):
        raise ValueError(
            "action index out of range [0, {})".format(net.action_count)
        )

    sign = 1.0 if objective == Objective.action_value else -1.0
    delta = np.zeros((x.shape[0], net.action_count), dtype=np.float64)
    delta[np.arange(x.shape[0]), actions] = sign

    inputs, pre_activations = _forward_trace(net, x)
    _, input_grad = _backpropagate(
        net, inputs, pre_activations, delta, with_parameters=False
    )
    return input_grad


def input_gradient(
    net: Network,
    state: Union[np.ndarray, Sequence],
    objective: Objective,
    action: int,
) -> np.ndarray:
    x = np.asarray(state, dtype=np.float64)

    if x.ndim != 1:
        raise DimensionMismatchError(
            "expected a 1-D state, got shape {}".format(x.shape)
        )

    return input_gradient_batch(net, x[None, :], objective, [action])[0]

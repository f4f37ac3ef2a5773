import abc
from typing import Optional

import numpy as np
from sklearn.metrics import accuracy_score

from shadowpolicy.ml.approximator import Network, forward, forward_batch


class Policy(metaclass=abc.ABCMeta):
    def __init__(self, action_count: int):
        self.action_count = action_count

    @abc.abstractmethod
    def act(self, state: np.ndarray) -> int:
        pass

    def act_batch(self, states: np.ndarray) -> np.ndarray:
        return np.array([self.act(s) for s in states], dtype=np.int64)

    def reseed(self, seed: int) -> None:
        """Reset the policy's random generator, if it has one."""
        pass

    def __call__(self, state: np.ndarray) -> int:
        return self.act(state)

    @property
    def name(self) -> str:
        return self.__class__.__name__


def greedy_action(net: Network, s: np.ndarray) -> int:
    # np.argmax returns the first maximum: ties go to the lowest index
    return int(np.argmax(forward(net, s)))


class GreedyPolicy(Policy):
    def __init__(self, network: Network):
        super().__init__(network.action_count)
        self.network = network

    def act(self, state: np.ndarray) -> int:
        return greedy_action(self.network, state)

    def act_batch(self, states: np.ndarray) -> np.ndarray:
        return np.argmax(forward_batch(self.network, states), axis=1)


class RandomPolicy(Policy):
    def __init__(self, action_count: int, seed: int = 0):
        super().__init__(action_count)
        self.seed = seed
        self.rng = np.random.default_rng(seed)

    def act(self, state: np.ndarray) -> int:
        return int(self.rng.integers(self.action_count))

    def reseed(self, seed: int) -> None:
        self.seed = seed
        self.rng = np.random.default_rng(seed)


class BlackBoxPolicy(Policy):
    """Expose only the decisions of a wrapped policy.

    Attack code receives victims through this wrapper, so it can query actions
    but holds no attribute leading to the victim's parameters. This guards
    against accidental access only: Python offers no way to seal an object.
    """

    def __init__(self, policy: Policy):
        super().__init__(policy.action_count)

        def act(state: np.ndarray) -> int:
            return policy.act(state)

        def act_batch(states: np.ndarray) -> np.ndarray:
            return policy.act_batch(states)

        def reseed(seed: int) -> None:
            policy.reseed(seed)

        self._act = act
        self._act_batch = act_batch
        self._reseed = reseed

    def act(self, state: np.ndarray) -> int:
        return self._act(state)

    def act_batch(self, states: np.ndarray) -> np.ndarray:
        return self._act_batch(states)

    def reseed(self, seed: int) -> None:
        self._reseed(seed)


def as_black_box(policy: Policy) -> BlackBoxPolicy:
    if isinstance(policy, BlackBoxPolicy):
        return policy
    return BlackBoxPolicy(policy)


def agreement(
    policy: Policy, other: Optional[Policy], states: np.ndarray, actions=None
) -> float:
    """Fraction of `states` on which `policy` picks the reference action.

    The reference is `other`'s decision, or `actions` when `other` is None.
    """
    states = np.asarray(states, dtype=np.float64)
    if len(states) == 0:
        raise ValueError("agreement needs at least one state")

    predicted = policy.act_batch(states)

    if other is not None:
        reference = other.act_batch(states)
    elif actions is not None:
        reference = np.asarray(actions, dtype=np.int64)
    else:
        raise ValueError("one of other, actions must be provided")

    return float(accuracy_score(reference, predicted))

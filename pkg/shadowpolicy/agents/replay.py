"""Replay memories.

`RingBuffer` is the plain experience replay of the DQN trainer.
`ReplayBuffer` is the two-region DQfD memory: a frozen demonstration region
followed by a ring of self-generated transitions, sampled proportionally to
priority ** alpha through a sum tree.
"""
import collections
import dataclasses
from typing import Deque, List, Optional, Tuple

import numpy as np

from .dataclass import Transition
from .demonstrations import DemonstrationSet


@dataclasses.dataclass
class ReplayBatch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray
    indices: np.ndarray
    nstep_rewards: Optional[np.ndarray] = None
    nstep_states: Optional[np.ndarray] = None
    nstep_discounts: Optional[np.ndarray] = None
    is_demo: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.actions)


class RingBuffer:
    def __init__(self, capacity: int, state_size: int):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.states = np.zeros((capacity, state_size), dtype=np.float64)
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity, dtype=np.float64)
        self.next_states = np.zeros((capacity, state_size), dtype=np.float64)
        self.terminals = np.zeros(capacity, dtype=bool)
        self.next_idx = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def append(self, t: Transition) -> int:
        """Store `t`, overwriting the oldest entry when full; return its slot."""
        slot = self.next_idx
        self.states[slot] = t.s
        self.actions[slot] = t.a
        self.rewards[slot] = t.r
        self.next_states[slot] = t.s_next
        self.terminals[slot] = t.terminal
        self.next_idx = (self.next_idx + 1) % self.capacity
        self.size = min(self.capacity, self.size + 1)
        return slot

    def oldest_slot(self) -> int:
        return self.next_idx if self.size == self.capacity else 0

    def take(self, slots: np.ndarray) -> ReplayBatch:
        return ReplayBatch(
            states=self.states[slots],
            actions=self.actions[slots],
            rewards=self.rewards[slots],
            next_states=self.next_states[slots],
            terminals=self.terminals[slots],
            indices=slots,
        )

    def sample(self, batch_size: int, rng: np.random.Generator) -> ReplayBatch:
        if self.size == 0:
            raise ValueError("cannot sample an empty buffer")
        return self.take(rng.integers(0, self.size, size=batch_size))


class SumTree:
    """Binary tree of partial sums over `capacity` nonnegative leaves."""

    def __init__(self, capacity: int):
        size = 1
        while size < capacity:
            size *= 2
        self.capacity = capacity
        self.size = size
        self.tree = np.zeros(2 * size, dtype=np.float64)

    @property
    def total(self) -> float:
        return float(self.tree[1])

    def __getitem__(self, indices):
        return self.tree[self.size + np.asarray(indices)]

    def set(self, indices: np.ndarray, values: np.ndarray) -> None:
        indices = np.asarray(indices, dtype=np.int64)
        nodes = self.size + indices
        self.tree[nodes] = values
        nodes = np.unique(nodes // 2)

        while nodes[0] >= 1:
            self.tree[nodes] = self.tree[2 * nodes] + self.tree[2 * nodes + 1]
            if nodes[0] == 1:
                break
            nodes = np.unique(nodes // 2)

    def find(self, prefix_sums: np.ndarray) -> np.ndarray:
        """Leaf index whose cumulative range contains each prefix sum."""
        u = np.minimum(np.asarray(prefix_sums, dtype=np.float64), self.total)
        nodes = np.ones(len(u), dtype=np.int64)

        while nodes[0] < self.size:
            left = 2 * nodes
            left_sum = self.tree[left]
            go_right = (u >= left_sum) & (self.tree[left + 1] > 0)
            u = np.where(go_right, u - left_sum, u)
            nodes = np.where(go_right, left + 1, left)

        return nodes - self.size


def nstep_lookahead(
    rewards: np.ndarray,
    next_states: np.ndarray,
    terminals: np.ndarray,
    episode_bounds: List[Tuple[int, int]],
    n: int,
    gamma: float,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Precompute n-step lookahead for every entry of contiguous episodes.

    For entry t with k = min(n, steps left in its episode) the cache holds
    sum_{i<k} gamma^i r_{t+i}, the state s_{t+k}, and the bootstrap discount
    gamma^k (0 when the k-th transition is terminal).
    """
    count = len(rewards)
    nstep_rewards = np.zeros(count, dtype=np.float64)
    nstep_states = np.zeros_like(next_states)
    nstep_discounts = np.zeros(count, dtype=np.float64)

    for start, end in episode_bounds:
        for t in range(start, end):
            total = 0.0
            k = 0
            last = t
            while k < n and t + k < end:
                last = t + k
                total += gamma ** k * rewards[last]
                k += 1
                if terminals[last]:
                    break
            nstep_rewards[t] = total
            nstep_states[t] = next_states[last]
            nstep_discounts[t] = 0.0 if terminals[last] else gamma ** k

    return nstep_rewards, nstep_states, nstep_discounts


class ReplayBuffer:
    """DQfD replay memory.

    Indices [0, demo_count) address demonstrations, which are stored in
    read-only arrays and never evicted; indices demo_count + slot address the
    self-generated ring.
    """

    def __init__(
        self,
        demos: DemonstrationSet,
        capacity: int,
        n_step: int,
        gamma: float,
        alpha: float,
        epsilon_demo: float,
        epsilon_self: float,
    ):
        self.n_step = n_step
        self.gamma = gamma
        self.alpha = alpha
        self.epsilon_demo = epsilon_demo
        self.epsilon_self = epsilon_self
        self.demo_count = demos.count
        self.capacity = capacity

        nstep_rewards, nstep_states, nstep_discounts = nstep_lookahead(
            demos.rewards,
            demos.next_states,
            demos.terminals,
            demos.episode_bounds(),
            n_step,
            gamma,
        )
        self.demo = {
            "states": demos.states.copy(),
            "actions": demos.actions.copy(),
            "rewards": demos.rewards.copy(),
            "next_states": demos.next_states.copy(),
            "terminals": demos.terminals.copy(),
            "nstep_rewards": nstep_rewards,
            "nstep_states": nstep_states,
            "nstep_discounts": nstep_discounts,
        }
        for array in self.demo.values():
            array.flags.writeable = False

        self.ring = RingBuffer(capacity, demos.state_size)
        self.ring_nstep_rewards = np.zeros(capacity, dtype=np.float64)
        self.ring_nstep_states = np.zeros((capacity, demos.state_size))
        self.ring_nstep_discounts = np.zeros(capacity, dtype=np.float64)
        self.ring_generation = np.zeros(capacity, dtype=np.int64)
        # (slot, generation, steps looked ahead) of entries still collecting rewards
        self.pending: Deque[List[int]] = collections.deque()

        self.priorities = np.zeros(self.demo_count + capacity, dtype=np.float64)
        self.tree = SumTree(self.demo_count + capacity)
        self.max_priority = 1.0
        self._set_priorities(
            np.arange(self.demo_count), np.full(self.demo_count, self.max_priority)
        )

    def __len__(self) -> int:
        return self.demo_count + len(self.ring)

    @property
    def self_count(self) -> int:
        return len(self.ring)

    def _set_priorities(self, indices: np.ndarray, priorities: np.ndarray) -> None:
        if len(indices) == 0:
            return
        self.priorities[indices] = priorities
        self.tree.set(indices, priorities ** self.alpha)

    def add(self, t: Transition) -> int:
        """Append a self-generated transition and return its buffer index."""
        slot = self.ring.append(t)
        self.ring_generation[slot] += 1
        self.ring_nstep_rewards[slot] = t.r
        self.ring_nstep_states[slot] = t.s_next
        self.ring_nstep_discounts[slot] = 0.0 if t.terminal else self.gamma

        still_pending: Deque[List[int]] = collections.deque()
        for entry in self.pending:
            pending_slot, generation, k = entry
            if self.ring_generation[pending_slot] != generation:
                continue
            self.ring_nstep_rewards[pending_slot] += self.gamma ** k * t.r
            self.ring_nstep_states[pending_slot] = t.s_next
            k += 1
            self.ring_nstep_discounts[pending_slot] = (
                0.0 if t.terminal else self.gamma ** k
            )
            if k < self.n_step and not t.terminal:
                still_pending.append([pending_slot, generation, k])

        if t.terminal:
            still_pending.clear()
        elif self.n_step > 1:
            still_pending.append([slot, int(self.ring_generation[slot]), 1])
        self.pending = still_pending

        index = self.demo_count + slot
        self._set_priorities(np.array([index]), np.array([self.max_priority]))
        return index

    def end_episode(self) -> None:
        """Stop extending lookaheads of an episode cut without a terminal."""
        self.pending.clear()

    def take(self, indices: np.ndarray) -> ReplayBatch:
        indices = np.asarray(indices, dtype=np.int64)
        is_demo = indices < self.demo_count
        demo_idx = np.where(is_demo, indices, 0)
        slots = np.where(is_demo, 0, indices - self.demo_count)

        def pick(demo_array: np.ndarray, ring_array: np.ndarray) -> np.ndarray:
            if self.demo_count == 0:
                return ring_array[slots]
            mask = is_demo.reshape((-1,) + (1,) * (demo_array.ndim - 1))
            return np.where(mask, demo_array[demo_idx], ring_array[slots])

        return ReplayBatch(
            states=pick(self.demo["states"], self.ring.states),
            actions=pick(self.demo["actions"], self.ring.actions),
            rewards=pick(self.demo["rewards"], self.ring.rewards),
            next_states=pick(self.demo["next_states"], self.ring.next_states),
            terminals=pick(self.demo["terminals"], self.ring.terminals),
            nstep_rewards=pick(self.demo["nstep_rewards"], self.ring_nstep_rewards),
            nstep_states=pick(self.demo["nstep_states"], self.ring_nstep_states),
            nstep_discounts=pick(
                self.demo["nstep_discounts"], self.ring_nstep_discounts
            ),
            is_demo=is_demo,
            indices=indices,
        )

    def sample(self, batch_size: int, rng: np.random.Generator) -> ReplayBatch:
        if len(self) == 0:
            raise ValueError("cannot sample an empty buffer")
        prefix_sums = rng.random(batch_size) * self.tree.total
        return self.take(self.tree.find(prefix_sums))

    def update_priorities(self, indices: np.ndarray, td_errors: np.ndarray) -> None:
        indices = np.asarray(indices, dtype=np.int64)
        offsets = np.where(
            indices < self.demo_count, self.epsilon_demo, self.epsilon_self
        )
        priorities = np.abs(np.asarray(td_errors, dtype=np.float64)) + offsets
        self._set_priorities(indices, priorities)
        self.max_priority = max(self.max_priority, float(priorities.max()))

"""Passively observed victim transitions and their on-disk format.

File layout (little-endian): b"DEMO", version u8, state dim u32, count u32,
then `count` records of float64 (s, a, r, s', terminal), then the episode
boundary block: episode count u32 followed by one u64 start index per episode.
"""
import dataclasses
import pathlib
import struct
from typing import Iterable, List, Tuple, Union

import numpy as np
from more_itertools import pairwise
from sklearn.model_selection import GroupShuffleSplit

from shadowpolicy.env import CARTPOLE, Environment
from shadowpolicy.exceptions import DemonstrationFormatError
from shadowpolicy.utils import get_logger
from shadowpolicy.utils.seeding import episode_seeds

from .dataclass import Transition
from .policy import Policy

logger = get_logger(__name__)

MAGIC = b"DEMO"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sBII")
_EPISODE_COUNT = struct.Struct("<I")


@dataclasses.dataclass
class DemonstrationSet:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray
    episode_starts: np.ndarray

    @property
    def count(self) -> int:
        return len(self.actions)

    @property
    def state_size(self) -> int:
        return self.states.shape[1]

    @property
    def episode_count(self) -> int:
        return len(self.episode_starts)

    def __len__(self) -> int:
        return self.count

    def episode_bounds(self) -> List[Tuple[int, int]]:
        ends = list(self.episode_starts[1:]) + [self.count]
        return [(int(s), int(e)) for s, e in zip(self.episode_starts, ends)]

    def episode_ids(self) -> np.ndarray:
        ids = np.zeros(self.count, dtype=np.int64)
        for i, (start, end) in enumerate(self.episode_bounds()):
            ids[start:end] = i
        return ids

    def transitions(self) -> Iterable[Transition]:
        for i in range(self.count):
            yield Transition(
                s=self.states[i],
                a=int(self.actions[i]),
                r=float(self.rewards[i]),
                s_next=self.next_states[i],
                terminal=bool(self.terminals[i]),
            )

    def validate(self) -> None:
        """Check episode contiguity and s'/s chaining inside episodes."""
        if self.count == 0:
            raise DemonstrationFormatError("empty demonstration set")

        if self.episode_count == 0 or self.episode_starts[0] != 0:
            raise DemonstrationFormatError("first episode must start at index 0")

        if np.any(np.diff(self.episode_starts) <= 0) or (
            self.episode_starts[-1] >= self.count
        ):
            raise DemonstrationFormatError("episode boundaries are not increasing")

        for start, end in self.episode_bounds():
            for i, j in pairwise(range(start, end)):
                if self.terminals[i]:
                    raise DemonstrationFormatError(
                        "terminal transition {} inside an episode".format(i)
                    )
                if not np.array_equal(self.next_states[i], self.states[j]):
                    raise DemonstrationFormatError(
                        "transition {} does not chain into {}".format(i, j)
                    )

    def select_episodes(self, episode_indices: Iterable[int]) -> "DemonstrationSet":
        bounds = self.episode_bounds()
        rows: List[int] = []
        starts: List[int] = []

        for index in sorted(episode_indices):
            start, end = bounds[index]
            starts.append(len(rows))
            rows.extend(range(start, end))

        idx = np.asarray(rows, dtype=np.int64)
        return DemonstrationSet(
            states=self.states[idx],
            actions=self.actions[idx],
            rewards=self.rewards[idx],
            next_states=self.next_states[idx],
            terminals=self.terminals[idx],
            episode_starts=np.asarray(starts, dtype=np.int64),
        )

    @classmethod
    def from_episodes(cls, episodes: List[List[Transition]]) -> "DemonstrationSet":
        episodes = [e for e in episodes if e]
        transitions = [t for episode in episodes for t in episode]

        if not transitions:
            raise DemonstrationFormatError("no transitions recorded")

        starts = np.cumsum([0] + [len(e) for e in episodes[:-1]]).astype(np.int64)
        return cls(
            states=np.stack([t.s for t in transitions]).astype(np.float64),
            actions=np.asarray([t.a for t in transitions], dtype=np.int64),
            rewards=np.asarray([t.r for t in transitions], dtype=np.float64),
            next_states=np.stack([t.s_next for t in transitions]).astype(np.float64),
            terminals=np.asarray([t.terminal for t in transitions], dtype=bool),
            episode_starts=starts,
        )


def collect_demonstrations(
    victim: Policy, count: int, seed: int, env: Environment = CARTPOLE
) -> DemonstrationSet:
    """Record `count` transitions of `victim` acting on unperturbed states.

    Fresh seeded episodes are run until `count` transitions are stored; the
    final episode is cut at `count`.
    """
    if count < 1:
        raise ValueError("at least one demonstration is required")

    victim.reseed(seed)
    episodes: List[List[Transition]] = []
    recorded = 0
    seed_iter = iter(episode_seeds(seed, count))

    while recorded < count:
        state = env.reset(next(seed_iter))
        episode: List[Transition] = []
        terminal = False

        while not terminal and recorded < count:
            obs = env.observe(state)
            action = victim.act(obs)
            result = env.step(state, action)
            terminal = result.terminal
            episode.append(
                Transition(
                    s=obs,
                    a=action,
                    r=result.reward,
                    s_next=env.observe(result.next_state),
                    terminal=terminal,
                )
            )
            recorded += 1
            state = result.next_state

        episodes.append(episode)

    demos = DemonstrationSet.from_episodes(episodes)
    logger.info(
        "Collected {} demonstrations over {} episodes".format(
            demos.count, demos.episode_count
        )
    )
    return demos


def split_demonstrations(
    demos: DemonstrationSet, holdout_fraction: float, seed: int
) -> Tuple[DemonstrationSet, DemonstrationSet]:
    """Split by whole episodes into (train, held-out) sets."""
    if holdout_fraction <= 0:
        return demos, demos.select_episodes([])

    if demos.episode_count < 2:
        raise ValueError("a held-out split needs at least two episodes")

    splitter = GroupShuffleSplit(
        n_splits=1, test_size=holdout_fraction, random_state=seed % (2 ** 32)
    )
    train_idx, test_idx = next(
        splitter.split(demos.states, demos.actions, groups=demos.episode_ids())
    )
    ids = demos.episode_ids()
    return (
        demos.select_episodes(np.unique(ids[train_idx])),
        demos.select_episodes(np.unique(ids[test_idx])),
    )


def _record_dtype(state_size: int) -> np.dtype:
    return np.dtype(
        [
            ("s", "<f8", (state_size,)),
            ("a", "<f8"),
            ("r", "<f8"),
            ("s_next", "<f8", (state_size,)),
            ("terminal", "<f8"),
        ]
    )


def save_demonstrations(path: Union[str, pathlib.Path], demos: DemonstrationSet):
    records = np.zeros(demos.count, dtype=_record_dtype(demos.state_size))
    records["s"] = demos.states
    records["a"] = demos.actions
    records["r"] = demos.rewards
    records["s_next"] = demos.next_states
    records["terminal"] = demos.terminals

    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as f:
        f.write(_HEADER.pack(MAGIC, FORMAT_VERSION, demos.state_size, demos.count))
        f.write(records.tobytes())
        f.write(_EPISODE_COUNT.pack(demos.episode_count))
        f.write(demos.episode_starts.astype("<u8").tobytes())


def load_demonstrations(path: Union[str, pathlib.Path]) -> DemonstrationSet:
    data = pathlib.Path(path).read_bytes()

    if len(data) < _HEADER.size:
        raise DemonstrationFormatError("demonstration file truncated")

    magic, version, state_size, count = _HEADER.unpack_from(data, 0)

    if magic != MAGIC:
        raise DemonstrationFormatError("bad demonstration magic: {!r}".format(magic))

    if version != FORMAT_VERSION:
        raise DemonstrationFormatError(
            "unsupported demonstration version: {}".format(version)
        )

    dtype = _record_dtype(state_size)
    offset = _HEADER.size
    end = offset + count * dtype.itemsize

    if len(data) < end + _EPISODE_COUNT.size:
        raise DemonstrationFormatError("demonstration file truncated")

    records = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
    (episode_count,) = _EPISODE_COUNT.unpack_from(data, end)
    offset = end + _EPISODE_COUNT.size

    if len(data) != offset + 8 * episode_count:
        raise DemonstrationFormatError("bad episode boundary block")

    starts = np.frombuffer(data, dtype="<u8", count=episode_count, offset=offset)
    demos = DemonstrationSet(
        states=records["s"].astype(np.float64),
        actions=records["a"].astype(np.int64),
        rewards=records["r"].astype(np.float64),
        next_states=records["s_next"].astype(np.float64),
        terminals=records["terminal"].astype(bool),
        episode_starts=starts.astype(np.int64),
    )
    demos.validate()
    return demos

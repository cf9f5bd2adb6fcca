from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from ..decomposition import ReturnStats, TrajectoryBatch
from ..envs import Trajectory


@dataclass
class TransitionSample:
    traj_ids: np.ndarray  # buffer-wide ids, stable across evictions
    steps: np.ndarray
    states: np.ndarray
    actions: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray

    def __len__(self) -> int:
        return len(self.steps)


class ReplayBuffer:
    """FIFO store of complete trajectories; transitions are views into them.

    ``capacity`` bounds the number of stored transitions and ``max_trajectories``
    optionally the number of trajectories. The oldest trajectories go first.
    The last transition of every trajectory is marked done, whether the
    episode hit a terminal state or the horizon.
    """

    def __init__(self, capacity: int = 10**6, max_trajectories: int | None = None):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.max_trajectories = max_trajectories
        self._trajs: deque[Trajectory] = deque()
        self._first_id = 0
        self._n_transitions = 0
        self._lengths = np.zeros(0, dtype=np.int64)
        self.stats = ReturnStats()

    def __len__(self) -> int:
        return len(self._trajs)

    @property
    def n_transitions(self) -> int:
        return self._n_transitions

    def push(self, traj: Trajectory) -> int:
        """Store a complete trajectory; returns its id."""
        if traj.episodic_return is None:
            raise ValueError("only complete trajectories (with a revealed return) can be stored")
        if len(traj) > self.capacity:
            raise ValueError("trajectory longer than the buffer capacity")
        self._trajs.append(traj)
        self._n_transitions += len(traj)
        self.stats.update(traj.episodic_return)
        while self._n_transitions > self.capacity or (
            self.max_trajectories is not None and len(self._trajs) > self.max_trajectories
        ):
            old = self._trajs.popleft()
            self._n_transitions -= len(old)
            self._first_id += 1
        self._lengths = np.fromiter((len(t) for t in self._trajs), dtype=np.int64, count=len(self._trajs))
        return self._first_id + len(self._trajs) - 1

    def trajectory(self, traj_id: int) -> Trajectory:
        i = traj_id - self._first_id
        if not 0 <= i < len(self._trajs):
            raise KeyError(f"trajectory {traj_id} is not in the buffer")
        return self._trajs[i]

    def batch(self, traj_ids) -> TrajectoryBatch:
        return TrajectoryBatch.from_trajectories([self.trajectory(int(i)) for i in traj_ids])

    def sample_trajectories(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Ids of ``n`` trajectories drawn uniformly (with replacement)."""
        if not self._trajs:
            raise ValueError("buffer is empty")
        return self._first_id + rng.integers(0, len(self._trajs), size=n)

    def sample_transitions(self, n: int, rng: np.random.Generator) -> TransitionSample:
        """``n`` transitions drawn uniformly over all stored transitions."""
        if self._n_transitions == 0:
            raise ValueError("buffer holds no transitions")
        flat = rng.integers(0, self._n_transitions, size=n)
        return self._gather(flat)

    def all_transitions(self) -> TransitionSample:
        return self._gather(np.arange(self._n_transitions))

    def _gather(self, flat: np.ndarray) -> TransitionSample:
        ends = np.cumsum(self._lengths)
        rows = np.searchsorted(ends, flat, side="right")
        steps = flat - (ends[rows] - self._lengths[rows])
        s = np.empty(len(flat), dtype=np.int64)
        a = np.empty_like(s)
        s2 = np.empty_like(s)
        for j, (i, t) in enumerate(zip(rows, steps)):
            traj = self._trajs[i]
            s[j], a[j], s2[j] = traj.states[t], traj.actions[t], traj.states[t + 1]
        dones = steps == self._lengths[rows] - 1
        return TransitionSample(rows + self._first_id, steps, s, a, s2, dones)

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ROW_TOL = 1e-12


class EpisodeError(RuntimeError):
    """Agent-facing API misuse: stepping a finished episode, finishing early, ..."""


@dataclass
class EnumeratedMDP:
    """Explicit finite-horizon MDP.

    ``transition[s, a]`` is a distribution over next states and
    ``hidden_reward[s, a]`` the per-step reward the agent never sees.
    Entering a state flagged in ``terminal`` ends the episode.
    """

    transition: np.ndarray
    hidden_reward: np.ndarray
    initial_dist: np.ndarray
    horizon: int
    terminal: np.ndarray | None = None
    name: str = "custom"

    def __post_init__(self):
        self.transition = np.asarray(self.transition, dtype=np.float64)
        self.hidden_reward = np.asarray(self.hidden_reward, dtype=np.float64)
        self.initial_dist = np.asarray(self.initial_dist, dtype=np.float64)
        S, A = self.hidden_reward.shape
        if self.transition.shape != (S, A, S):
            raise ValueError(f"transition must have shape {(S, A, S)}, got {self.transition.shape}")
        if self.initial_dist.shape != (S,):
            raise ValueError(f"initial_dist must have shape ({S},)")
        if np.any(self.transition < 0) or np.any(np.abs(self.transition.sum(-1) - 1.0) > ROW_TOL):
            raise ValueError("every transition row must be a probability vector")
        if np.any(self.initial_dist < 0) or abs(self.initial_dist.sum() - 1.0) > ROW_TOL:
            raise ValueError("initial_dist must be a probability vector")
        if int(self.horizon) < 1:
            raise ValueError("horizon must be a positive integer")
        self.horizon = int(self.horizon)
        if self.terminal is None:
            self.terminal = np.zeros(S, dtype=bool)
        self.terminal = np.asarray(self.terminal, dtype=bool)
        if self.terminal.shape != (S,):
            raise ValueError(f"terminal must have shape ({S},)")

    @property
    def n_states(self) -> int:
        return self.hidden_reward.shape[0]

    @property
    def n_actions(self) -> int:
        return self.hidden_reward.shape[1]

    def trajectory_return(self, traj: "Trajectory") -> float:
        total = 0.0
        for s, a in zip(traj.states[:-1], traj.actions):
            total += self.hidden_reward[s, a]
        return float(total)


@dataclass
class Trajectory:
    """States s_0..s_n (n+1 entries, last one is where the episode stopped),
    actions a_0..a_{n-1}, and the episodic return revealed at the end."""

    states: np.ndarray
    actions: np.ndarray
    episodic_return: float | None = None

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.int64)
        self.actions = np.asarray(self.actions, dtype=np.int64)
        if len(self.states) != len(self.actions) + 1:
            raise ValueError("need exactly one more state than actions")

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def complete(self) -> bool:
        return self.episodic_return is not None


@dataclass
class EnvInstance:
    """Episodic-reward interface over an :class:`EnumeratedMDP`.

    ``step`` returns only ``(next_state, done)``; the sum of hidden rewards is
    released by :meth:`finish_episode` once the episode is over.
    """

    mdp: EnumeratedMDP
    kind: str = "custom"
    seed: int = 0
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rng = np.random.default_rng(self.seed)
        P = self.mdp.transition
        self._cdf = np.cumsum(P, axis=-1)
        self._init_cdf = np.cumsum(self.mdp.initial_dist)
        # deterministic rows skip the random draw
        self._det_next = np.where(P.max(-1) == 1.0, P.argmax(-1), -1)
        self._state: int | None = None
        self._t = 0
        self._done = True
        self._finished = True
        self._states: list[int] = []
        self._actions: list[int] = []
        self._hidden_sum = 0.0

    @property
    def n_states(self) -> int:
        return self.mdp.n_states

    @property
    def n_actions(self) -> int:
        return self.mdp.n_actions

    @property
    def horizon(self) -> int:
        return self.mdp.horizon

    @property
    def state(self) -> int | None:
        return self._state

    @property
    def t(self) -> int:
        return self._t

    def reset(self, seed: int | None = None) -> int:
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self._state = self._draw(self._init_cdf)
        self._t = 0
        self._done = bool(self.mdp.terminal[self._state])
        self._finished = False
        self._states = [self._state]
        self._actions = []
        self._hidden_sum = 0.0
        return self._state

    def step(self, action: int) -> tuple[int, bool]:
        if self._done:
            raise EpisodeError("episode is over; call reset()")
        if not 0 <= int(action) < self.n_actions:
            raise ValueError(f"action {action} out of range [0, {self.n_actions})")
        s, a = self._state, int(action)
        self._hidden_sum += self.mdp.hidden_reward[s, a]
        nxt = int(self._det_next[s, a])
        if nxt < 0:
            nxt = self._draw(self._cdf[s, a])
        self._t += 1
        self._state = nxt
        self._states.append(nxt)
        self._actions.append(a)
        self._done = self._t >= self.horizon or bool(self.mdp.terminal[nxt])
        return nxt, self._done

    def _draw(self, cdf: np.ndarray) -> int:
        i = int(np.searchsorted(cdf, self.rng.random() * cdf[-1], side="right"))
        return min(i, len(cdf) - 1)

    @property
    def done(self) -> bool:
        return self._done

    def finish_episode(self) -> float:
        if self._state is None or not self._done:
            raise EpisodeError("finish_episode called before the episode ended")
        self._finished = True
        return float(self._hidden_sum)

    def trajectory(self) -> Trajectory:
        """The finished episode with its revealed return."""
        ret = self.finish_episode()
        return Trajectory(np.array(self._states), np.array(self._actions), ret)

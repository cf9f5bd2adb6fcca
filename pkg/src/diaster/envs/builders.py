"""Constructors for the environment roster.

All tasks compile down to an :class:`EnumeratedMDP` with deterministic hidden
rewards, so the enumeration and dynamic-programming oracles apply to every one
of them.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .mdp import EnumeratedMDP, EnvInstance

LEFT, RIGHT = 0, 1
# grid actions: up, right, down, left
MOVES = ((-1, 0), (0, 1), (1, 0), (0, -1))

UMAZE = (
    "S...",
    "###.",
    "G...",
)


def chain(
    length: int = 8,
    horizon: int | None = None,
    distractors: Iterable[Sequence[float]] = (),
) -> EnumeratedMDP:
    """Cells 0..length-1, start at 0; moving right off cell length-2 reaches the
    terminal right end and earns the only reward, 1.0.

    ``distractors`` are extra ``(state, action, reward)`` hidden rewards.
    """
    if length < 2:
        raise ValueError("chain needs at least two cells")
    horizon = length if horizon is None else horizon
    S, A = length, 2
    P = np.zeros((S, A, S))
    R = np.zeros((S, A))
    for s in range(S):
        P[s, LEFT, max(s - 1, 0)] = 1.0
        P[s, RIGHT, min(s + 1, S - 1)] = 1.0
    R[S - 2, RIGHT] = 1.0
    # the right end is absorbing and terminal
    P[S - 1] = 0.0
    P[S - 1, :, S - 1] = 1.0
    R[S - 1] = 0.0
    for s, a, r in distractors:
        R[int(s), int(a)] += float(r)
    rho0 = np.zeros(S)
    rho0[0] = 1.0
    terminal = np.zeros(S, dtype=bool)
    terminal[-1] = True
    return EnumeratedMDP(P, R, rho0, horizon, terminal, name="chain")


class GridLayout:
    """Index bookkeeping for a grid task with a small phase counter."""

    def __init__(self, rows: int, cols: int, walls: set[tuple[int, int]], n_phases: int):
        self.rows, self.cols, self.walls, self.n_phases = rows, cols, walls, n_phases

    @property
    def n_states(self) -> int:
        return self.rows * self.cols * self.n_phases

    def index(self, row: int, col: int, phase: int = 0) -> int:
        return (phase * self.rows + row) * self.cols + col

    def decode(self, s: int) -> tuple[int, int, int]:
        phase, rest = divmod(int(s), self.rows * self.cols)
        row, col = divmod(rest, self.cols)
        return row, col, phase

    def move(self, row: int, col: int, action: int) -> tuple[int, int]:
        dr, dc = MOVES[action]
        r, c = row + dr, col + dc
        if not (0 <= r < self.rows and 0 <= c < self.cols) or (r, c) in self.walls:
            return row, col
        return r, c


def key_door(
    size: int = 5,
    horizon: int = 30,
    start: tuple[int, int] = (0, 0),
    key: tuple[int, int] = (4, 0),
    door: tuple[int, int] = (0, 4),
    step_cost: float = 0.0,
    door_terminal: bool = False,
    reusable_key: bool = False,
) -> tuple[EnumeratedMDP, GridLayout]:
    """Open ``size`` x ``size`` grid; state = (cell, phase).

    Phase 0 has no key, phase 1 holds the key, phase 2 has opened the door.
    Entering the key cell in phase 0 picks the key up. The door cell is
    blocked until the key is held; entering it in phase 1 opens it and earns
    the reward 1.0. ``step_cost`` is charged on every step taken before the
    door opens. Unless ``door_terminal``, the episode continues in phase 2
    until the horizon.

    With ``reusable_key`` the door consumes the key instead: opening it
    returns the agent to phase 0 and a fresh key waits at the key cell, so
    the reward can be earned again. The return then counts openings, which
    the final state does not reveal. Phase 2 is unused and the step cost
    applies throughout.
    """
    start, key, door = tuple(start), tuple(key), tuple(door)
    if len({start, key, door}) != 3:
        raise ValueError("start, key and door must be distinct cells")
    if reusable_key and door_terminal:
        raise ValueError("reusable_key and door_terminal are mutually exclusive")
    grid = GridLayout(size, size, set(), 3)
    S, A = grid.n_states, 4
    P = np.zeros((S, A, S))
    R = np.zeros((S, A))
    terminal = np.zeros(S, dtype=bool)
    for phase in range(3):
        for row in range(size):
            for col in range(size):
                s = grid.index(row, col, phase)
                for a in range(A):
                    r, c = grid.move(row, col, a)
                    nphase = phase
                    if (r, c) == door and phase == 0:
                        r, c = row, col
                    elif (r, c) == door and phase == 1:
                        nphase = 0 if reusable_key else 2
                        R[s, a] += 1.0
                    elif (r, c) == key and phase == 0:
                        nphase = 1
                    if phase < 2:
                        R[s, a] -= step_cost
                    P[s, a, grid.index(r, c, nphase)] = 1.0
    if door_terminal:
        terminal[grid.index(*door, 2)] = True
    rho0 = np.zeros(S)
    rho0[grid.index(*start, 0)] = 1.0
    return EnumeratedMDP(P, R, rho0, horizon, terminal, name="key_door"), grid


def umaze(horizon: int = 20, step_cost: float = 0.0, layout: Sequence[str] = UMAZE) -> tuple[EnumeratedMDP, GridLayout]:
    """U-shaped corridor: start ``S``, goal ``G``, walls ``#``.

    Reaching the goal is terminal and pays 1.0.
    """
    rows, cols = len(layout), len(layout[0])
    walls = {(r, c) for r in range(rows) for c in range(cols) if layout[r][c] == "#"}
    find = {ch: (r, c) for r in range(rows) for c in range(cols) for ch in layout[r][c]}
    start, goal = find["S"], find["G"]
    grid = GridLayout(rows, cols, walls, 1)
    S, A = grid.n_states, 4
    P = np.zeros((S, A, S))
    R = np.zeros((S, A))
    for row in range(rows):
        for col in range(cols):
            s = grid.index(row, col)
            for a in range(A):
                if (row, col) == goal:
                    P[s, a, s] = 1.0
                    continue
                r, c = grid.move(row, col, a)
                P[s, a, grid.index(r, c)] = 1.0
                R[s, a] = (1.0 if (r, c) == goal else 0.0) - step_cost
    terminal = np.zeros(S, dtype=bool)
    terminal[grid.index(*goal)] = True
    rho0 = np.zeros(S)
    rho0[grid.index(*start)] = 1.0
    return EnumeratedMDP(P, R, rho0, horizon, terminal, name="umaze"), grid


def random_mdp(
    n_states: int,
    n_actions: int,
    horizon: int,
    rng: np.random.Generator,
    concentration: float = 1.0,
) -> EnumeratedMDP:
    """Dense random MDP (every transition and initial probability positive)."""
    P = rng.dirichlet(np.full(n_states, concentration), size=(n_states, n_actions))
    R = rng.normal(size=(n_states, n_actions))
    rho0 = rng.dirichlet(np.full(n_states, concentration))
    return EnumeratedMDP(P, R, rho0, horizon, name="random")


KIND_ALIASES = {"key_door": "key_door_grid", "umaze": "point_maze_grid"}


def make_env(kind: str, seed: int = 0, **params) -> EnvInstance:
    kind = KIND_ALIASES.get(kind, kind)
    if kind == "chain":
        mdp, info = chain(**params), {}
    elif kind == "key_door_grid":
        mdp, grid = key_door(**params)
        info = {"grid": grid}
    elif kind == "point_maze_grid":
        mdp, grid = umaze(**params)
        info = {"grid": grid}
    elif kind == "custom":
        mdp, info = EnumeratedMDP(**params), {}
    else:
        raise ValueError(f"unknown environment kind {kind!r}")
    return EnvInstance(mdp, kind=kind, seed=seed, info=info)

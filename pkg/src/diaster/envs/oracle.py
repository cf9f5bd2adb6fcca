"""Exact enumeration and dynamic programming over an :class:`EnumeratedMDP`.

Policies are arrays of action probabilities, either stationary ``(S, A)`` or
time-indexed ``(T, S, A)``. Trajectories that enter a terminal state stay in
it: later state columns repeat the terminal state and later actions are -1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdp import EnumeratedMDP

DEFAULT_CAP = 10**6


class EnumerationCapError(RuntimeError):
    def __init__(self, required: int, cap: int):
        super().__init__(f"enumeration needs cap >= {required}, configured cap is {cap}")
        self.required = required
        self.cap = cap


class UndefinedStateError(ValueError):
    """A conditional quantity was requested at a state with zero occupancy."""


def policy_at(policy: np.ndarray, t: int) -> np.ndarray:
    policy = np.asarray(policy, dtype=np.float64)
    return policy[t] if policy.ndim == 3 else policy


def uniform_policy(mdp: EnumeratedMDP) -> np.ndarray:
    return np.full((mdp.n_states, mdp.n_actions), 1.0 / mdp.n_actions)


def greedy_policy(q: np.ndarray) -> np.ndarray:
    """Deterministic policy picking the lowest-index maximiser of ``q``."""
    pi = np.zeros_like(q, dtype=np.float64)
    best = np.argmax(q, axis=-1)
    np.put_along_axis(pi, best[..., None], 1.0, axis=-1)
    return pi


@dataclass
class Enumeration:
    states: np.ndarray  # (N, upto) s_0..s_{upto-1}
    actions: np.ndarray  # (N, upto), -1 after termination
    lengths: np.ndarray  # (N,) number of actions actually taken
    probs: np.ndarray  # (N,)

    def __len__(self) -> int:
        return len(self.probs)

    def items(self):
        """Yield ``(states, actions, probability)``; ``states`` includes the
        terminal state when the trajectory ended early."""
        for i in range(len(self)):
            n = int(self.lengths[i])
            stop = min(n + 1, self.states.shape[1])
            yield self.states[i, :stop], self.actions[i, :n], float(self.probs[i])

    def returns(self, mdp: EnumeratedMDP) -> np.ndarray:
        """Episodic return of every entry under the hidden reward table."""
        valid = self.actions >= 0
        r = mdp.hidden_reward[self.states, np.where(valid, self.actions, 0)]
        return np.where(valid, r, 0.0).sum(axis=1)


def enumerate_trajectories(
    mdp: EnumeratedMDP,
    policy: np.ndarray,
    upto: int | None = None,
    cap: int | None = DEFAULT_CAP,
) -> Enumeration:
    """Every state-action sequence of ``upto`` steps with its exact probability.

    Zero-probability branches are dropped. Refuses when the worst-case size
    ``(S*A)**upto`` exceeds ``cap``.
    """
    S, A = mdp.n_states, mdp.n_actions
    upto = mdp.horizon if upto is None else int(upto)
    if upto < 0:
        raise ValueError("upto must be nonnegative")
    bound = (S * A) ** upto
    if cap is not None and bound > cap:
        raise EnumerationCapError(bound, cap)

    states = np.zeros((1, 0), dtype=np.int64)
    actions = np.zeros((1, 0), dtype=np.int64)
    probs = np.ones(1)
    alive = np.ones(1, dtype=bool)
    term = mdp.terminal
    for t in range(upto):
        pi = policy_at(policy, t)
        if t == 0:
            nxt = np.broadcast_to(mdp.initial_dist, (len(probs), S))
        else:
            nxt = mdp.transition[states[:, -1], np.maximum(actions[:, -1], 0)]

        # finished trajectories: carry the terminal state forward
        dead = np.flatnonzero(~alive)
        new_s = [states[dead, -1] if t else np.zeros(0, dtype=np.int64)]
        src = [dead]
        new_a = [np.full(len(dead), -1)]
        new_p = [probs[dead]]
        new_alive = [np.zeros(len(dead), dtype=bool)]

        live = np.flatnonzero(alive)
        w = probs[live, None] * nxt[live]  # (n, S)
        # entering a terminal state ends the trajectory without an action
        i, s = np.nonzero((w > 0) & term[None, :])
        src.append(live[i])
        new_s.append(s)
        new_a.append(np.full(len(s), -1))
        new_p.append(w[i, s])
        new_alive.append(np.zeros(len(s), dtype=bool))

        wa = w[:, :, None] * pi[None, :, :] * (~term)[None, :, None]
        i, s, a = np.nonzero(wa > 0)
        src.append(live[i])
        new_s.append(s)
        new_a.append(a)
        new_p.append(wa[i, s, a])
        new_alive.append(np.ones(len(s), dtype=bool))

        src = np.concatenate(src)
        order = np.argsort(src, kind="stable")
        src = src[order]
        states = np.column_stack([states[src], np.concatenate(new_s)[order]])
        actions = np.column_stack([actions[src], np.concatenate(new_a)[order]])
        probs = np.concatenate(new_p)[order]
        alive = np.concatenate(new_alive)[order]

    lengths = (actions >= 0).sum(axis=1)
    return Enumeration(states, actions, lengths, probs)


def state_occupancy(mdp: EnumeratedMDP, policy: np.ndarray, t: int) -> np.ndarray:
    """Exact distribution of s_t by forward propagation (terminals absorb)."""
    rho = mdp.initial_dist.copy()
    for k in range(int(t)):
        rho = _propagate(mdp, policy_at(policy, k), rho)
    return rho


def occupancies(mdp: EnumeratedMDP, policy: np.ndarray, steps: int | None = None) -> np.ndarray:
    """Rows rho_0 .. rho_{steps-1}; ``steps`` defaults to the horizon."""
    steps = mdp.horizon if steps is None else steps
    out = np.empty((steps, mdp.n_states))
    rho = mdp.initial_dist.copy()
    for k in range(steps):
        out[k] = rho
        rho = _propagate(mdp, policy_at(policy, k), rho)
    return out


def _propagate(mdp: EnumeratedMDP, pi: np.ndarray, rho: np.ndarray) -> np.ndarray:
    live = np.where(mdp.terminal, 0.0, rho)
    out = np.einsum("s,sa,sap->p", live, pi, mdp.transition)
    return out + np.where(mdp.terminal, rho, 0.0)


def optimal_q(mdp: EnumeratedMDP, reward: np.ndarray | None = None) -> np.ndarray:
    """Finite-horizon optimal action values Q*_t(s, a), shape (T, S, A)."""
    R = mdp.hidden_reward if reward is None else np.asarray(reward)
    T = mdp.horizon
    q = np.zeros((T, mdp.n_states, mdp.n_actions))
    v = np.zeros(mdp.n_states)
    for t in reversed(range(T)):
        q[t] = R + mdp.transition @ v
        q[t][mdp.terminal] = 0.0
        v = q[t].max(axis=1)
    return q


def optimal_return(mdp: EnumeratedMDP) -> float:
    """Largest expected episodic return, by backward induction on hidden rewards."""
    return float(mdp.initial_dist @ optimal_q(mdp)[0].max(axis=1))


def policy_q(mdp: EnumeratedMDP, policy: np.ndarray, reward: np.ndarray | None = None) -> np.ndarray:
    """Undiscounted Q^pi_t(s, a) = E[sum of rewards from t to T-1 | s_t, a_t]."""
    R = mdp.hidden_reward if reward is None else np.asarray(reward)
    T = mdp.horizon
    q = np.zeros((T, mdp.n_states, mdp.n_actions))
    v = np.zeros(mdp.n_states)
    for t in reversed(range(T)):
        q[t] = R + mdp.transition @ v
        q[t][mdp.terminal] = 0.0
        v = (policy_at(policy, t) * q[t]).sum(axis=1)
    return q


def expected_return(mdp: EnumeratedMDP, policy: np.ndarray) -> float:
    q0 = policy_q(mdp, policy)[0]
    return float(mdp.initial_dist @ (policy_at(policy, 0) * q0).sum(axis=1))


def discounted_q(
    mdp: EnumeratedMDP, reward: np.ndarray, gamma: float, tol: float = 1e-13, max_iter: int = 100_000
) -> np.ndarray:
    """Fixed point of the discounted Bellman optimality operator (no time index),
    with terminal states contributing no future value."""
    cont = np.where(mdp.terminal, 0.0, 1.0)
    q = np.zeros((mdp.n_states, mdp.n_actions))
    for _ in range(max_iter):
        new = reward + gamma * mdp.transition @ (cont * q.max(axis=1))
        if np.max(np.abs(new - q)) < tol:
            return new
        q = new
    return q

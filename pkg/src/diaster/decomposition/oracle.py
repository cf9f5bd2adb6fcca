"""Exact expectation-form step reward on enumerable MDPs.

For a prefix scorer psi, the step reward at (s, a, t) is the difference
psi(prefix + (s, a)) - psi(prefix) averaged over length-t prefixes, each
weighted by its probability times the chance of landing in s next
(normalised over all prefixes that reach s at step t).
"""

from __future__ import annotations

import numpy as np

from ..envs import EnumeratedMDP, UndefinedStateError, enumerate_trajectories
from ..envs.oracle import DEFAULT_CAP


def _prefix_weights(mdp: EnumeratedMDP, policy, t: int, cap: int | None):
    """Live length-t prefixes and, for each, the weight of reaching every state next."""
    if t == 0:
        empty = np.zeros((1, 0), dtype=np.int64)
        return empty, empty, mdp.initial_dist[None, :].copy()
    e = enumerate_trajectories(mdp, policy, upto=t, cap=cap)
    live = e.lengths == t
    states, actions, probs = e.states[live], e.actions[live], e.probs[live]
    w = probs[:, None] * mdp.transition[states[:, -1], actions[:, -1]]
    return states, actions, w


def _extended_differences(psi, states, actions, s, a) -> np.ndarray:
    """psi(prefix + (s, a)) - psi(prefix) for every prefix row."""
    n, t = states.shape
    ext_s = np.column_stack([states, np.full(n, s)])
    ext_a = np.column_stack([actions, np.full(n, a)])
    pv = psi.prefix_values(ext_s, ext_a, np.full(n, t + 1))
    return pv[:, t + 1] - pv[:, t]


def exact_step_reward_oracle(
    mdp: EnumeratedMDP, policy, psi, s: int, a: int, t: int, cap: int | None = DEFAULT_CAP
) -> float:
    if mdp.terminal[s]:
        raise UndefinedStateError(f"state {s} is terminal; no action is taken there")
    states, actions, w = _prefix_weights(mdp, policy, t, cap)
    weights = w[:, s]
    total = weights.sum()
    if total <= 0.0:
        raise UndefinedStateError(f"state {s} is unreachable at step {t}")
    diffs = _extended_differences(psi, states, actions, s, a)
    return float(weights @ diffs / total)


def step_reward_table(
    mdp: EnumeratedMDP, policy, psi, cap: int | None = DEFAULT_CAP
) -> tuple[np.ndarray, np.ndarray]:
    """The oracle for all (t, s, a) at once.

    Returns ``(rhat, reach)``: ``rhat`` has shape (T, S, A) with NaN where the
    reward is undefined, ``reach[t, s]`` is the probability of standing in a
    live (non-terminated) state s at step t.
    """
    T, S, A = mdp.horizon, mdp.n_states, mdp.n_actions
    rhat = np.full((T, S, A), np.nan)
    reach = np.zeros((T, S))
    for t in range(T):
        states, actions, w = _prefix_weights(mdp, policy, t, cap)
        n = len(states)
        if n == 0:
            continue
        totals = w.sum(axis=0)
        totals[mdp.terminal] = 0.0
        reach[t] = totals
        ok = np.flatnonzero(totals > 0)
        if len(ok) == 0:
            continue
        # every prefix extended by every reachable (s, a), evaluated in one batch
        ss = np.repeat(ok, A)
        aa = np.tile(np.arange(A), len(ok))
        k = len(ss)
        ext_s = np.column_stack([np.tile(states, (k, 1)), np.repeat(ss, n)])
        ext_a = np.column_stack([np.tile(actions, (k, 1)), np.repeat(aa, n)])
        pv = psi.prefix_values(ext_s, ext_a, np.full(k * n, t + 1))
        diffs = (pv[:, t + 1] - pv[:, t]).reshape(k, n)
        wk = w[:, ss].T  # (k, n)
        rhat[t, ss, aa] = (wk * diffs).sum(axis=1) / totals[ss]
    return rhat, reach


def stationary_proxy_reward(mdp: EnumeratedMDP, policy, psi, cap: int | None = DEFAULT_CAP) -> np.ndarray:
    """Time-averaged oracle reward per (s, a), weighting step t by the chance of
    being in s then. This is what a Markovian regressor fitted on uniformly
    drawn steps converges to. Unvisited states get 0."""
    rhat, reach = step_reward_table(mdp, policy, psi, cap)
    num = np.nansum(reach[:, :, None] * np.nan_to_num(rhat), axis=0)
    den = reach.sum(axis=0)[:, None]
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)

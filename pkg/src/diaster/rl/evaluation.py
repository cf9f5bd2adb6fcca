from __future__ import annotations

from typing import Callable

import numpy as np

from ..envs import EnvInstance

Policy = Callable[[int, np.random.Generator], int]


def as_policy(policy) -> Policy:
    """Accept an agent with ``greedy``, an (S, A) probability table, or a callable."""
    if hasattr(policy, "greedy"):
        return policy.greedy
    if isinstance(policy, np.ndarray):
        table = policy

        def sample(state, rng):
            return int(rng.choice(table.shape[1], p=table[state]))

        return sample
    return policy


def rollout_returns(env: EnvInstance, policy, n_episodes: int = 10, seed: int = 0) -> np.ndarray:
    """True episodic returns of ``n_episodes`` rollouts; episode i resets the
    env with seed ``seed + i`` and the policy draws from its own stream."""
    if n_episodes < 1:
        raise ValueError("n_episodes must be at least 1")
    act = as_policy(policy)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))
    out = np.empty(n_episodes)
    for i in range(n_episodes):
        s = env.reset(seed + i)
        while not env.done:
            s, _ = env.step(act(s, rng))
        out[i] = env.finish_episode()
    return out


def evaluate_policy(env: EnvInstance, policy, n_episodes: int = 10, seed: int = 0) -> float:
    """Mean true episodic return over rollouts; proxy rewards play no part."""
    return float(rollout_returns(env, policy, n_episodes, seed).mean())

"""Collect an episode, train the redistribution model and the agent on
relabelled transitions, evaluate on a fixed env-step grid."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from ..config import ExperimentConfig
from ..decomposition import Redistribution, make_method
from .buffer import ReplayBuffer, TransitionSample
from .dqn import NeuralQAgent
from .evaluation import evaluate_policy
from .tabular import EpsilonSchedule, QTable

METRICS_SCHEMA = "diaster.metrics/1"


@dataclass
class TrainState:
    """Everything a finished (or interrupted) run leaves behind."""

    method: Redistribution
    agent: object
    buffer: ReplayBuffer
    env_step: int = 0
    wall_step: int = 0
    episode: int = 0
    records: list[dict] = field(default_factory=list)


def _mean_or_none(values: list[float]) -> float | None:
    finite = [v for v in values if math.isfinite(v)]
    return float(np.mean(finite)) if finite else None


def relabel_sample(method: Redistribution, buffer: ReplayBuffer, sample: TransitionSample) -> np.ndarray:
    """Proxy rewards for sampled transitions, computed with the current models."""
    if method.markovian:
        return method.pair_rewards(sample.states, sample.actions, sample.steps)
    ids, rows = np.unique(sample.traj_ids, return_inverse=True)
    return method.transition_rewards(buffer.batch(ids), rows, sample.steps, buffer.stats)


def bootstrap_stops(sample: TransitionSample, terminal: np.ndarray, through_timeouts: bool) -> np.ndarray:
    """Where the TD target drops the bootstrap term. A horizon cut is not a
    terminal state, so with ``through_timeouts`` only entering a terminal
    state stops it; otherwise every episode end does."""
    return terminal[sample.next_states] if through_timeouts else sample.dones


def make_agent(cfg: ExperimentConfig, n_states: int, n_actions: int, rng: np.random.Generator):
    if cfg.agent == "tabular":
        return QTable(n_states, n_actions, lr=cfg.q_lr, gamma=cfg.gamma)
    return NeuralQAgent(n_states, n_actions, cfg.q_hidden, cfg.gamma, cfg.lr, cfg.tau, rng)


def train_loop(cfg: ExperimentConfig, seed: int, state: TrainState | None = None) -> Iterator[dict]:
    """Yield one metrics record per evaluation point.

    Evaluation point k happens after the first episode that brings the env
    step count to at least ``k * eval_interval`` (point 0 before training).
    Each record averages the losses of the updates since the previous one.
    Pass a ``TrainState`` to inspect models and buffer afterwards.
    """
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(4)]
    explore_rng, init_rng, update_rng, _ = streams
    env_seed = int(np.random.SeedSequence(seed, spawn_key=(3,)).generate_state(1)[0])
    env = cfg.make_env(env_seed)
    eval_env = cfg.make_env(seed)
    S, A, T = env.n_states, env.n_actions, env.horizon
    terminal = env.mdp.terminal

    method = make_method(cfg.method, S, A, T, cfg.method_params(), init_rng)
    agent = make_agent(cfg, S, A, init_rng)
    buffer = ReplayBuffer(cfg.buffer_capacity)
    if state is None:
        state = TrainState(method, agent, buffer)
    else:
        state.method, state.agent, state.buffer = method, agent, buffer
    schedule = EpsilonSchedule(cfg.n_episodes, cfg.eps_start, cfg.eps_end, cfg.eps_fraction)
    traj_batch = cfg.traj_batch_size or cfg.batch_size
    losses: dict[str, list[float]] = {"decomp_loss": [], "step_loss": [], "td_loss": []}
    eval_point = 0

    def record() -> dict:
        eval_seed = int(np.random.SeedSequence(seed, spawn_key=(2, eval_point)).generate_state(1)[0])
        rec = {
            "schema": METRICS_SCHEMA,
            "method": cfg.method,
            "seed": seed,
            "eval_point": eval_point,
            "env_step": state.env_step,
            "wall_step": state.wall_step,
            "episode": state.episode,
            "mean_return": evaluate_policy(eval_env, agent, cfg.eval_episodes, eval_seed),
            **{k: _mean_or_none(v) for k, v in losses.items()},
        }
        for v in losses.values():
            v.clear()
        state.records.append(rec)
        return rec

    yield record()
    eval_point += 1
    for episode in range(cfg.n_episodes):
        eps = schedule(episode)
        s = env.reset()
        while not env.done:
            s, _ = env.step(agent.act(s, eps, explore_rng))
        traj = env.trajectory()
        buffer.push(traj)
        state.env_step += len(traj)
        state.episode = episode + 1

        for _ in range(cfg.batches_per_episode):
            ids = buffer.sample_trajectories(traj_batch, update_rng)
            out = method.update(buffer.batch(ids), update_rng)
            losses["decomp_loss"].append(out["decomp_loss"])
            losses["step_loss"].append(out["step_loss"])
            sample = buffer.sample_transitions(cfg.batch_size, update_rng)
            rewards = relabel_sample(method, buffer, sample)
            dones = bootstrap_stops(sample, terminal, cfg.timeout_bootstrap)
            td = agent.update(sample.states, sample.actions, rewards, sample.next_states, dones)
            losses["td_loss"].append(td)
            state.wall_step += 1

        if state.env_step >= eval_point * cfg.eval_interval:
            # an episode longer than the interval skips grid points
            eval_point = state.env_step // cfg.eval_interval
            yield record()
            eval_point += 1

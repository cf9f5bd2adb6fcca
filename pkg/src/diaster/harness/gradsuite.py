"""Finite-difference checks of every training loss on small random problems."""

from __future__ import annotations

import numpy as np

from ..decomposition import (
    StepRewardModel,
    SubTrajRewardModel,
    TrajectoryBatch,
    cut_loss,
    rrd_loss,
    rudder_loss,
    sample_cut_sets,
    sample_subsequences,
    step_loss,
)
from ..nn import grad_check
from ..rl import NeuralQAgent

LOSSES = ("diaster_return", "diaster_step", "rrd", "rudder_lite", "td")


def random_batch(rng: np.random.Generator, n_states: int = 4, n_actions: int = 2, n: int = 5,
                 max_len: int = 6) -> TrajectoryBatch:
    lengths = rng.integers(1, max_len + 1, size=n)
    width = int(lengths.max())
    valid = np.arange(width)[None, :] < lengths[:, None]
    states = np.where(valid, rng.integers(0, n_states, size=(n, width)), -1)
    actions = np.where(valid, rng.integers(0, n_actions, size=(n, width)), -1)
    return TrajectoryBatch(states, actions, lengths, rng.normal(size=n))


def loss_closure(name: str, seed: int):
    """Return (loss_fn, params) for one named loss on a seeded random problem."""
    rng = np.random.default_rng(seed)
    S, A = 4, 2
    batch = random_batch(rng, S, A)
    if name == "diaster_return":
        psi = SubTrajRewardModel.create(S, A, 6, rng)
        cuts = sample_cut_sets(batch.lengths, 2, rng, low=0)
        return (lambda: cut_loss(psi, batch, cuts)), psi.parameters()
    if name == "diaster_step":
        psi = SubTrajRewardModel.create(S, A, 6, rng)
        phi = StepRewardModel.create(S, A, (8, 8), rng)
        steps = rng.integers(0, batch.lengths)
        return (lambda: step_loss(phi, psi, batch, steps)), phi.parameters()
    if name == "rrd":
        phi = StepRewardModel.create(S, A, (8, 8), rng)
        idx, valid = sample_subsequences(batch.lengths, 3, rng)
        return (lambda: rrd_loss(phi, batch, idx, valid)), phi.parameters()
    if name == "rudder_lite":
        g = SubTrajRewardModel.create(S, A, 6, rng)
        return (lambda: rudder_loss(g, batch)), g.parameters()
    if name == "td":
        agent = NeuralQAgent(S, A, (8, 8), gamma=0.9, rng=rng)
        # move the online net away from the target so the loss is not trivial
        for p in agent.online.parameters().values():
            p.data = p.data + 0.1 * rng.normal(size=p.data.shape)
        n = 16
        s, a = rng.integers(0, S, n), rng.integers(0, A, n)
        r, s2, d = rng.normal(size=n), rng.integers(0, S, n), rng.random(n) < 0.3
        return (lambda: agent.td_loss(s, a, r, s2, d)), agent.online.parameters()
    raise ValueError(f"unknown loss {name!r}; choose from {', '.join(LOSSES)}")


def gradient_suite(seeds=range(10), losses=LOSSES) -> dict[str, list[float]]:
    """Max relative tape-vs-finite-difference error per loss, one entry per seed."""
    return {name: [grad_check(*loss_closure(name, int(seed))) for seed in seeds] for name in losses}

"""Regression losses for the decomposition models.

Batch versions take a :class:`TrajectoryBatch` and return a scalar Tensor
(mean over trajectories). The single-trajectory functions wrap them.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..envs import Trajectory
from ..nn import Tensor
from .batch import TrajectoryBatch
from .cuts import validate_cuts
from .models import StepRewardModel, SubTrajRewardModel


def _single(traj: Trajectory | TrajectoryBatch) -> TrajectoryBatch:
    if isinstance(traj, TrajectoryBatch):
        return traj
    if traj.episodic_return is None:
        raise ValueError("trajectory has no revealed return")
    return TrajectoryBatch.from_trajectories([traj])


def pack_segments(batch: TrajectoryBatch, cut_sets: Sequence[Sequence[int]]):
    """Split every row at its cuts. Returns padded segment arrays and the row
    each segment came from. Empty segments are kept (they score 0)."""
    starts, stops, owner = [], [], []
    for i, cuts in enumerate(cut_sets):
        bounds = [0, *[int(c) for c in cuts], int(batch.lengths[i])]
        for a, b in zip(bounds[:-1], bounds[1:]):
            starts.append(a)
            stops.append(b)
            owner.append(i)
    starts, stops, owner = np.array(starts), np.array(stops), np.array(owner)
    seg_len = stops - starts
    W = int(seg_len.max(initial=0))
    cols = np.minimum(starts[:, None] + np.arange(W)[None, :], max(batch.width - 1, 0))
    valid = np.arange(W)[None, :] < seg_len[:, None]
    seg_s = np.where(valid, batch.states[owner[:, None], cols], -1)
    seg_a = np.where(valid, batch.actions[owner[:, None], cols], -1)
    return seg_s, seg_a, seg_len, owner


def segment_sums(psi: SubTrajRewardModel, batch: TrajectoryBatch, cut_sets) -> Tensor:
    """Per row, the sum of R_sub over its segments; each segment is encoded
    from a fresh zero hidden state."""
    seg_s, seg_a, seg_len, owner = pack_segments(batch, cut_sets)
    scores = psi.segment_scores(seg_s, seg_a, seg_len)
    indicator = np.zeros((len(owner), len(batch)))
    indicator[np.arange(len(owner)), owner] = 1.0
    return (scores.reshape(1, -1) @ Tensor(indicator)).reshape(-1)


def cut_loss(psi: SubTrajRewardModel, batch: TrajectoryBatch, cut_sets) -> Tensor:
    """Mean squared residual between summed segment rewards and R_ep."""
    residual = segment_sums(psi, batch, cut_sets) - batch.returns
    return (residual * residual).mean()


def diaster_return_loss(psi: SubTrajRewardModel, traj, c: int) -> Tensor:
    """(R_sub(tau_{0:c}) + R_sub(tau_{c:T}) - R_ep)^2 for one trajectory, 0 <= c <= T."""
    batch = _single(traj)
    T = int(batch.lengths[0])
    if not 0 <= int(c) <= T:
        raise ValueError(f"cut {c} outside [0, {T}]")
    return cut_loss(psi, batch, [[int(c)]])


def multicut_return_loss(psi: SubTrajRewardModel, traj, cuts) -> Tensor:
    """Residual of the m+1 segment rewards against R_ep; cuts strictly inside (0, T)."""
    batch = _single(traj)
    cuts = validate_cuts(cuts, int(batch.lengths[0]))
    return cut_loss(psi, batch, [cuts.tolist()])


def step_targets(psi, batch: TrajectoryBatch) -> np.ndarray:
    """R_sub(tau_{0:t+1}) - R_sub(tau_{0:t}) for every step, zero past the length."""
    pv = psi.prefix_values(batch.states, batch.actions, batch.lengths)
    return np.where(batch.mask, np.diff(pv, axis=1), 0.0)


def step_loss(phi: StepRewardModel, psi, batch: TrajectoryBatch, steps: np.ndarray | None = None) -> Tensor:
    """Mean of (r(s_t, a_t) - [R_sub(tau_{0:t+1}) - R_sub(tau_{0:t})])^2.

    ``steps`` gives one step index per row; ``None`` averages over every
    valid step of every row instead. The psi side is a constant target.
    """
    targets = step_targets(psi, batch)
    if steps is None:
        rows, steps = np.nonzero(batch.mask)
    else:
        steps = np.asarray(steps, dtype=np.int64)
        if np.any(steps < 0) or np.any(steps >= batch.lengths):
            raise ValueError("step index outside the trajectory")
        rows = np.arange(len(batch))
    pred = phi(batch.states[rows, steps], batch.actions[rows, steps], steps)
    residual = pred - targets[rows, steps]
    return (residual * residual).mean()


def diaster_step_loss(phi: StepRewardModel, psi, traj, t: int) -> Tensor:
    # only the prefix up to t+1 matters, so the return may still be hidden
    batch = traj if isinstance(traj, TrajectoryBatch) else TrajectoryBatch.from_trajectories([traj])
    return step_loss(phi, psi, batch, np.array([int(t)]))


def sample_subsequences(lengths: np.ndarray, k: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Per row, min(k, length) distinct step indices (padded with 0) and a validity mask."""
    idx = np.zeros((len(lengths), k), dtype=np.int64)
    valid = np.zeros((len(lengths), k), dtype=bool)
    for i, n in enumerate(lengths):
        j = min(k, int(n))
        idx[i, :j] = rng.choice(int(n), size=j, replace=False)
        valid[i, :j] = True
    return idx, valid


def rrd_loss(phi: StepRewardModel, batch: TrajectoryBatch, idx: np.ndarray, valid: np.ndarray) -> Tensor:
    """Least squares between the mean predicted reward on sampled steps and R_ep / T."""
    rows = np.repeat(np.arange(len(batch)), idx.shape[1]).reshape(idx.shape)
    pred = phi(batch.states[rows, idx], batch.actions[rows, idx], idx).reshape(idx.shape[0], idx.shape[1])
    weights = valid / np.maximum(valid.sum(axis=1, keepdims=True), 1)
    mean_pred = (pred * weights).sum(axis=1)
    residual = mean_pred - batch.returns / np.maximum(batch.lengths, 1)
    return (residual * residual).mean()


def rudder_loss(g: SubTrajRewardModel, batch: TrajectoryBatch) -> Tensor:
    """Mean over all valid steps of (g(tau_{0:t+1}) - R_ep)^2."""
    scores = g.prefix_scores(batch.states, batch.actions, batch.lengths)[:, 1:]
    mask = batch.mask.astype(float)
    residual = (scores - batch.returns[:, None]) * mask
    return (residual * residual).sum() * (1.0 / max(mask.sum(), 1.0))

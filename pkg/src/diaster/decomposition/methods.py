"""Reward redistribution methods behind one interface.

Each method trains on batches of complete trajectories (``update``) and turns
trajectories into per-step proxy rewards (``relabel``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..nn import Adam, NonFiniteGradientError, Tensor, grad
from .batch import TrajectoryBatch
from .cuts import sample_cut_sets
from .losses import cut_loss, rrd_loss, rudder_loss, sample_subsequences, step_loss, step_targets
from .models import StepRewardModel, SubTrajRewardModel

METHOD_TAGS = ("diaster", "diaster_no_step", "rudder_lite", "ircr", "rrd", "episodic")


@dataclass
class ReturnStats:
    """Smallest and largest episodic return ever stored."""

    low: float = math.inf
    high: float = -math.inf

    def update(self, value: float) -> None:
        self.low = min(self.low, float(value))
        self.high = max(self.high, float(value))

    def normalize(self, returns: np.ndarray) -> np.ndarray:
        returns = np.asarray(returns, dtype=np.float64)
        if not (math.isfinite(self.low) and self.high > self.low):
            return np.zeros_like(returns)
        return (returns - self.low) / (self.high - self.low)


@dataclass
class MethodParams:
    m: int = 1  # cut points per trajectory
    k: int = 4  # rrd subsequence length
    psi_hidden: int = 64
    phi_hidden: tuple[int, ...] = (64, 64)
    lr: float = 3e-4
    cut_low: int = 1
    state_only: bool = False
    time_feature: bool = False
    step_sampling: str = "one"  # "one" step per trajectory, or "all" steps


def _nan_losses() -> dict[str, float]:
    return {"decomp_loss": math.nan, "step_loss": math.nan}


def _optimize(opt: Adam, loss: Tensor) -> float:
    value = loss.item()
    if not math.isfinite(value):
        raise NonFiniteGradientError("non-finite loss")
    opt.step(grad(loss, opt.params))
    return value


class Redistribution:
    tag = "base"
    markovian = False

    def __init__(self, n_states: int, n_actions: int, horizon: int, params: MethodParams | None = None,
                 rng: np.random.Generator | None = None):
        self.n_states, self.n_actions, self.horizon = n_states, n_actions, horizon
        self.params = params or MethodParams()
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.skipped_updates = 0

    def parameters(self) -> dict[str, Tensor]:
        return {}

    def update(self, batch: TrajectoryBatch, rng: np.random.Generator) -> dict[str, float]:
        return _nan_losses()

    def relabel(self, batch: TrajectoryBatch, stats: ReturnStats | None = None) -> np.ndarray:
        raise NotImplementedError

    def transition_rewards(self, batch: TrajectoryBatch, rows, steps, stats: ReturnStats | None = None) -> np.ndarray:
        """Proxy rewards of the selected (row, step) transitions."""
        return self.relabel(batch, stats)[np.asarray(rows), np.asarray(steps)]

    def _guarded(self, fn) -> float:
        try:
            return fn()
        except NonFiniteGradientError:
            self.skipped_updates += 1
            return math.nan


class Diaster(Redistribution):
    """Sub-trajectory model psi fitted on cut trajectories, plus a Markovian
    step model phi distilled from psi's prefix differences."""

    tag = "diaster"
    markovian = True

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        p = self.params
        self.psi = SubTrajRewardModel.create(self.n_states, self.n_actions, p.psi_hidden, self.rng, p.state_only)
        self.phi = StepRewardModel.create(self.n_states, self.n_actions, p.phi_hidden, self.rng,
                                          p.time_feature, self.horizon)
        self.psi_opt = Adam(self.psi.parameters("psi."), lr=p.lr)
        self.phi_opt = Adam(self.phi.parameters("phi."), lr=p.lr)

    def parameters(self) -> dict[str, Tensor]:
        return {**self.psi_opt.params, **self.phi_opt.params}

    def sample_cuts(self, lengths, rng) -> list[np.ndarray]:
        return sample_cut_sets(lengths, self.params.m, rng, self.params.cut_low)

    def update_psi(self, batch: TrajectoryBatch, rng) -> float:
        cut_sets = self.sample_cuts(batch.lengths, rng)
        return self._guarded(lambda: _optimize(self.psi_opt, cut_loss(self.psi, batch, cut_sets)))

    def update_phi(self, batch: TrajectoryBatch, rng) -> float:
        steps = rng.integers(0, batch.lengths) if self.params.step_sampling == "one" else None
        return self._guarded(lambda: _optimize(self.phi_opt, step_loss(self.phi, self.psi, batch, steps)))

    def update(self, batch, rng):
        batch = batch.select(np.flatnonzero(batch.lengths > 0))
        if len(batch) == 0:
            return _nan_losses()
        return {"decomp_loss": self.update_psi(batch, rng), "step_loss": self.update_phi(batch, rng)}

    def relabel(self, batch, stats=None):
        steps = np.broadcast_to(np.arange(batch.width), batch.states.shape)
        r = self.phi.predict(np.maximum(batch.states, 0), np.maximum(batch.actions, 0), steps)
        return np.where(batch.mask, r, 0.0)

    def transition_rewards(self, batch, rows, steps, stats=None):
        rows, steps = np.asarray(rows), np.asarray(steps)
        return self.pair_rewards(batch.states[rows, steps], batch.actions[rows, steps], steps)

    def pair_rewards(self, states, actions, steps=None) -> np.ndarray:
        """Markovian proxy reward of individual (s, a) pairs."""
        return self.phi.predict(states, actions, steps)


class DiasterNoStep(Diaster):
    """Ablation: relabel with psi's raw prefix differences, no step model."""

    tag = "diaster_no_step"
    markovian = False

    def update(self, batch, rng):
        batch = batch.select(np.flatnonzero(batch.lengths > 0))
        if len(batch) == 0:
            return _nan_losses()
        return {"decomp_loss": self.update_psi(batch, rng), "step_loss": math.nan}

    def relabel(self, batch, stats=None):
        return step_targets(self.psi, batch)

    def transition_rewards(self, batch, rows, steps, stats=None):
        return Redistribution.transition_rewards(self, batch, rows, steps, stats)


class RudderLite(Redistribution):
    """Recurrent return predictor g trained to output R_ep after every prefix;
    step rewards are consecutive differences with g(empty) = 0."""

    tag = "rudder_lite"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        p = self.params
        self.g = SubTrajRewardModel.create(self.n_states, self.n_actions, p.psi_hidden, self.rng, p.state_only)
        self.opt = Adam(self.g.parameters("g."), lr=p.lr)

    def parameters(self):
        return dict(self.opt.params)

    def update(self, batch, rng):
        batch = batch.select(np.flatnonzero(batch.lengths > 0))
        if len(batch) == 0:
            return _nan_losses()
        value = self._guarded(lambda: _optimize(self.opt, rudder_loss(self.g, batch)))
        return {"decomp_loss": value, "step_loss": math.nan}

    def relabel(self, batch, stats=None):
        return step_targets(self.g, batch)


class Ircr(Redistribution):
    """Every step receives the min-max normalised episodic return."""

    tag = "ircr"
    markovian = False

    def relabel(self, batch, stats=None):
        stats = stats or ReturnStats()
        return np.where(batch.mask, stats.normalize(batch.returns)[:, None], 0.0)


class Rrd(Redistribution):
    """Markovian r(s, a) fitted so the mean over random subsequences predicts R_ep / T."""

    tag = "rrd"
    markovian = True

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        p = self.params
        self.phi = StepRewardModel.create(self.n_states, self.n_actions, p.phi_hidden, self.rng,
                                          p.time_feature, self.horizon)
        self.opt = Adam(self.phi.parameters("phi."), lr=p.lr)

    def parameters(self):
        return dict(self.opt.params)

    def update(self, batch, rng):
        batch = batch.select(np.flatnonzero(batch.lengths > 0))
        if len(batch) == 0:
            return _nan_losses()
        idx, valid = sample_subsequences(batch.lengths, self.params.k, rng)
        value = self._guarded(lambda: _optimize(self.opt, rrd_loss(self.phi, batch, idx, valid)))
        return {"decomp_loss": value, "step_loss": math.nan}

    relabel = Diaster.relabel
    transition_rewards = Diaster.transition_rewards
    pair_rewards = Diaster.pair_rewards


class Episodic(Redistribution):
    """No redistribution: R_ep on the final step, 0 elsewhere."""

    tag = "episodic"

    def relabel(self, batch, stats=None):
        out = np.zeros(batch.states.shape)
        rows = np.flatnonzero(batch.lengths > 0)
        out[rows, batch.lengths[rows] - 1] = batch.returns[rows]
        return out


_REGISTRY = {cls.tag: cls for cls in (Diaster, DiasterNoStep, RudderLite, Ircr, Rrd, Episodic)}


def make_method(tag: str, n_states: int, n_actions: int, horizon: int, params: MethodParams | None = None,
                rng: np.random.Generator | None = None) -> Redistribution:
    if tag not in _REGISTRY:
        raise ValueError(f"unknown method {tag!r}; choose from {', '.join(METHOD_TAGS)}")
    return _REGISTRY[tag](n_states, n_actions, horizon, params, rng)

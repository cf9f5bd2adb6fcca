"""Randomised battery of exact checks over small enumerable MDPs."""

from __future__ import annotations

import json
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterator

import numpy as np

from ..decomposition import SubTrajRewardModel
from ..envs import EnumeratedMDP, random_mdp
from .checks import ExactInstance, TheoremReport, check_lemma_argmax, check_lemma_policy_gradient, softmax_policy

MAX_STATES, MAX_ACTIONS, MAX_HORIZON = 6, 3, 6
# bound on (S * A) ** T so the whole battery stays fast
ENUMERATION_BUDGET = 200_000


@dataclass
class RandomInstance:
    seed: int
    exact: ExactInstance
    theta: np.ndarray

    @property
    def mdp(self) -> EnumeratedMDP:
        return self.exact.mdp


def random_instance(seed: int, hidden_dim: int = 8, budget: int = ENUMERATION_BUDGET) -> RandomInstance:
    """Random dense MDP, softmax policy and untrained recurrent prefix scorer.

    A third of the instances get one absorbing terminal state (never initial)
    so early episode ends are exercised too.
    """
    rng = np.random.default_rng(seed)
    while True:
        S = int(rng.integers(2, MAX_STATES + 1))
        A = int(rng.integers(2, MAX_ACTIONS + 1))
        T = int(rng.integers(2, MAX_HORIZON + 1))
        if (S * A) ** T <= budget:
            break
    mdp = random_mdp(S, A, T, rng)
    if rng.random() < 1 / 3:
        term = int(rng.integers(S))
        rho0 = mdp.initial_dist.copy()
        rho0[term] = 0.0
        mdp = EnumeratedMDP(mdp.transition, mdp.hidden_reward, rho0 / rho0.sum(), T,
                            np.arange(S) == term, name="random_terminal")
    theta = rng.normal(size=(S, A))
    psi = SubTrajRewardModel.create(S, A, hidden_dim, rng)
    desc = {"seed": seed, "n_states": S, "n_actions": A, "horizon": T, "terminal": bool(mdp.terminal.any())}
    return RandomInstance(seed, ExactInstance(mdp, softmax_policy(theta), psi, description=desc), theta)


def instance_reports(inst: RandomInstance, tol: float = 1e-8) -> Iterator[tuple[TheoremReport, bool]]:
    """(report, expected_to_pass) for every check on one instance."""
    ex, mdp = inst.exact, inst.mdp
    T, S, A = mdp.horizon, mdp.n_states, mdp.n_actions
    rng = np.random.default_rng([inst.seed, 1])
    desc = ex.description

    for h in range(1, T + 1):
        for t in range(T - h + 1):
            yield ex.theorem1(t, h, tol), True
    for t in range(T):
        for s in range(S):
            if mdp.terminal[s] or ex.reach[t, s] <= 0.0:
                continue
            for a in range(A):
                yield ex.theorem3(s, a, t, tol), True

    q = ex.q
    delta = rng.normal(size=(T, S))
    same = [check_lemma_argmax(q[t, s], delta[t, s]) for t in range(T) for s in range(S)]
    yield _argmax_report(desc, same, control=False), True
    bumped = q.copy()
    bumped[..., 0] -= 2.0 * (np.abs(q).max() + 1.0)  # action 0 can never be greedy in q + offset
    offset = np.zeros_like(q)
    offset[..., 0] = 4.0 * (np.abs(q).max() + 1.0)
    same = [check_lemma_argmax(bumped[t, s], offset[t, s]) for t in range(T) for s in range(S)]
    yield _argmax_report(desc, same, control=True), False

    rep = check_lemma_policy_gradient(mdp, inst.theta, q, delta, tol)
    rep.instance = dict(desc)
    yield rep, True
    yield ex.qhat_offset(tol, return_corrected=True), True
    ctl = ex.qhat_offset(tol, return_corrected=False)
    ctl.tag = "qhat_offset_control"
    yield ctl, False


def _argmax_report(desc: dict, same: list[bool], control: bool) -> TheoremReport:
    kept = sum(same)
    tag = "lemma_argmax_control" if control else "lemma_argmax"
    return TheoremReport(tag, dict(desc), float(kept), float(len(same)), float(len(same) - kept), 0.0,
                         note="lhs = states whose greedy set is unchanged, rhs = states checked")


@dataclass
class BatterySummary:
    instances: int = 0
    seconds: float = 0.0
    passed: Counter = field(default_factory=Counter)
    total: Counter = field(default_factory=Counter)
    worst_gap: dict = field(default_factory=dict)
    unexpected: list = field(default_factory=list)

    def add(self, rep: TheoremReport, expected: bool) -> None:
        self.total[rep.tag] += 1
        self.passed[rep.tag] += rep.passed
        self.worst_gap[rep.tag] = max(self.worst_gap.get(rep.tag, 0.0), rep.gap)
        if rep.passed != expected:
            self.unexpected.append(rep)

    @property
    def ok(self) -> bool:
        return not self.unexpected

    def lines(self) -> list[str]:
        out = []
        for tag in sorted(self.total):
            out.append(f"{tag:24s} passed {self.passed[tag]:6d}/{self.total[tag]:<6d} worst gap {self.worst_gap[tag]:.3g}")
        out.append(f"{self.instances} instances in {self.seconds:.1f}s; {len(self.unexpected)} unexpected outcomes")
        return out


def run_battery(n_instances: int = 100, seed: int = 0, tol: float = 1e-8, out: str | Path | IO | None = None,
                budget: int = ENUMERATION_BUDGET) -> BatterySummary:
    """Run every check on ``n_instances`` random instances.

    Instance i uses seed ``seed + i``. Controls are expected to fail; a
    summary entry in ``unexpected`` means a positive check failed or a
    control passed. With ``out`` each report is written as one JSON line.
    """
    summary = BatterySummary()
    fh, close = _open(out)
    start = time.perf_counter()
    try:
        for i in range(n_instances):
            inst = random_instance(seed + i, budget=budget)
            for rep, expected in instance_reports(inst, tol):
                summary.add(rep, expected)
                if fh is not None:
                    rec = {**rep.to_dict(), "seed": inst.seed, "expected_pass": expected}
                    fh.write(json.dumps(rec, sort_keys=True, allow_nan=True) + "\n")
            summary.instances += 1
    finally:
        if close:
            fh.close()
    summary.seconds = time.perf_counter() - start
    return summary


def _open(out):
    if out is None:
        return None, False
    if hasattr(out, "write"):
        return out, False
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w"), True

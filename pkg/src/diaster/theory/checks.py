"""Exact numerical checks of the decomposition identities on enumerable MDPs.

Every expectation is computed by full trajectory enumeration; nothing is
sampled. ``ExactInstance`` caches the enumeration, the oracle step rewards
and the true action values so a battery can run many checks per instance.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np

from ..decomposition.oracle import step_reward_table
from ..envs import EnumeratedMDP, UndefinedStateError, enumerate_trajectories, policy_at, policy_q
from ..envs.oracle import DEFAULT_CAP


@dataclass
class TheoremReport:
    tag: str
    instance: dict
    lhs: float
    rhs: float
    gap: float
    tol: float
    passed: bool = field(init=False)
    note: str = ""

    def __post_init__(self):
        self.gap = float(self.gap)
        # NaN gaps never pass
        self.passed = bool(self.gap <= self.tol)

    def to_dict(self) -> dict:
        return asdict(self)


class ExactInstance:
    """An MDP, a Markov policy and a prefix scorer, with cached exact quantities."""

    def __init__(self, mdp: EnumeratedMDP, policy: np.ndarray, psi, cap: int | None = DEFAULT_CAP,
                 description: dict | None = None):
        self.mdp, self.policy, self.psi, self.cap = mdp, np.asarray(policy, dtype=np.float64), psi, cap
        self.description = dict(description or {})

    @cached_property
    def enumeration(self):
        return enumerate_trajectories(self.mdp, self.policy, cap=self.cap)

    @cached_property
    def prefix_values(self) -> np.ndarray:
        e = self.enumeration
        return self.psi.prefix_values(np.maximum(e.states, 0), e.actions, e.lengths)

    @cached_property
    def returns(self) -> np.ndarray:
        return self.enumeration.returns(self.mdp)

    @cached_property
    def _rhat_reach(self):
        return step_reward_table(self.mdp, self.policy, self.psi, self.cap)

    @property
    def rhat(self) -> np.ndarray:
        return self._rhat_reach[0]

    @property
    def reach(self) -> np.ndarray:
        return self._rhat_reach[1]

    @cached_property
    def q(self) -> np.ndarray:
        return policy_q(self.mdp, self.policy)

    def pi(self, t: int) -> np.ndarray:
        return policy_at(self.policy, t)

    @cached_property
    def path_rhat(self) -> np.ndarray:
        """Oracle step reward along every enumerated trajectory, 0 past its end."""
        e = self.enumeration
        n, T = e.states.shape
        live = np.arange(T)[None, :] < e.lengths[:, None]
        t_idx = np.broadcast_to(np.arange(T), (n, T))
        vals = self.rhat[t_idx, np.maximum(e.states, 0), np.maximum(e.actions, 0)]
        return np.where(live, vals, 0.0)

    def _conditional(self, t: int, s: int, a: int):
        e = self.enumeration
        if t >= e.states.shape[1]:
            return None
        sel = (e.lengths > t) & (e.states[:, t] == s) & (e.actions[:, t] == a)
        w = e.probs[sel]
        if w.sum() <= 0.0:
            return None
        return sel, w / w.sum()

    # -- identities ---------------------------------------------------------------
    def theorem1(self, t: int, h: int, tol: float = 1e-8) -> TheoremReport:
        """Expected oracle reward over steps t..t+h-1 against the expected
        prefix-score increase from length t to t + h."""
        T = self.mdp.horizon
        if not (1 <= h <= T and 0 <= t <= T - h):
            raise ValueError(f"need 1 <= h <= T and 0 <= t <= T - h, got t={t}, h={h}, T={T}")
        lhs = 0.0
        for i in range(t, t + h):
            mass = self.reach[i][:, None] * self.pi(i)
            lhs += float(np.sum(mass * np.nan_to_num(self.rhat[i])))
        pv, p = self.prefix_values, self.enumeration.probs
        rhs = float(p @ (pv[:, t + h] - pv[:, t]))
        note = "extension: h = 1" if h == 1 else ""
        return TheoremReport("theorem1", {**self.description, "t": t, "h": h}, lhs, rhs, abs(lhs - rhs), tol,
                             note=note)

    def theorem3(self, s: int, a: int, t: int, tol: float = 1e-8) -> TheoremReport:
        """Conditional form: future oracle rewards after (s_t, a_t) against the
        conditional expected prefix-score increase from t + 1 to the end."""
        if self.mdp.terminal[s]:
            raise UndefinedStateError(f"state {s} is terminal")
        cond = self._conditional(t, s, a)
        if cond is None:
            raise UndefinedStateError(f"(s={s}, a={a}) has zero probability at step {t}")
        sel, w = cond
        future = self.path_rhat[sel, t + 1:].sum(axis=1)
        lhs = float(w @ future)
        e, pv = self.enumeration, self.prefix_values[sel]
        full = pv[np.arange(len(pv)), e.lengths[sel]]
        rhs = float(w @ (full - pv[:, t + 1]))
        return TheoremReport("theorem3", {**self.description, "s": s, "a": a, "t": t}, lhs, rhs,
                             abs(lhs - rhs), tol)

    def theorem3_averaged(self, t: int, tol: float = 1e-8) -> TheoremReport:
        """The conditional identity averaged over (s_t, a_t) under the policy."""
        e = self.enumeration
        live = e.lengths > t
        p = e.probs[live]
        lhs = float(p @ self.path_rhat[live, t + 1:].sum(axis=1))
        pv = self.prefix_values[live]
        full = pv[np.arange(len(pv)), e.lengths[live]]
        rhs = float(p @ (full - pv[:, t + 1]))
        return TheoremReport("theorem3_averaged", {**self.description, "t": t}, lhs, rhs, abs(lhs - rhs), tol)

    def qhat_table(self, return_corrected: bool = True) -> np.ndarray:
        """Q-hat(t, s, a) = r-hat(t, s, a) + E[score(full) - score(prefix to t+1) | s_t, a_t].

        With ``return_corrected`` the full-trajectory score is replaced by the
        true episodic return. NaN where (s, a) never occurs at step t.
        """
        T, S, A = self.mdp.horizon, self.mdp.n_states, self.mdp.n_actions
        e, pv = self.enumeration, self.prefix_values
        full = self.returns if return_corrected else pv[np.arange(len(pv)), e.lengths]
        out = np.full((T, S, A), np.nan)
        for t in range(T):
            live = e.lengths > t
            tail = full[live] - pv[live, t + 1]
            key = e.states[live, t] * A + e.actions[live, t]
            w = e.probs[live]
            den = np.bincount(key, weights=w, minlength=S * A)
            num = np.bincount(key, weights=w * tail, minlength=S * A)
            ok = den > 0
            cond = np.full(S * A, np.nan)
            cond[ok] = num[ok] / den[ok]
            out[t] = self.rhat[t] + cond.reshape(S, A)
        return out

    def qhat_offset(self, tol: float = 1e-8, return_corrected: bool = True) -> TheoremReport:
        """Q-hat minus the true Q must not depend on the action at any visited (t, s).

        Reports the worst (t, s): ``lhs``/``rhs`` are the largest and smallest
        difference over actions, ``gap`` their spread.
        """
        diff = self.qhat_table(return_corrected) - self.q
        worst, where, skipped = -1.0, None, 0
        hi_lo = (math.nan, math.nan)
        T, S = diff.shape[:2]
        for t in range(T):
            for s in range(S):
                d = diff[t, s]
                d = d[np.isfinite(d)]
                if len(d) == 0:
                    skipped += 1
                    continue
                spread = float(d.max() - d.min())
                if spread > worst:
                    worst, where, hi_lo = spread, (t, s), (float(d.max()), float(d.min()))
        if where is None:
            return TheoremReport("qhat_offset", dict(self.description), math.nan, math.nan, math.nan, tol,
                                 note="no visited state")
        note = f"worst at t={where[0]}, s={where[1]}; {skipped} unvisited (t, s) skipped"
        return TheoremReport("qhat_offset", {**self.description, "return_corrected": return_corrected},
                             hi_lo[0], hi_lo[1], worst, tol, note=note)


# -- module-level entry points ------------------------------------------------------
def check_theorem1(mdp, policy, psi, t: int, h: int, tol: float = 1e-8, cap: int | None = DEFAULT_CAP) -> TheoremReport:
    return ExactInstance(mdp, policy, psi, cap).theorem1(t, h, tol)


def check_theorem3(mdp, policy, psi, s: int, a: int, t: int, tol: float = 1e-8,
                   cap: int | None = DEFAULT_CAP) -> TheoremReport:
    return ExactInstance(mdp, policy, psi, cap).theorem3(s, a, t, tol)


def check_qhat_offset(mdp, policy, psi, tol: float = 1e-8, return_corrected: bool = True,
                      cap: int | None = DEFAULT_CAP) -> TheoremReport:
    return ExactInstance(mdp, policy, psi, cap).qhat_offset(tol, return_corrected)


def _offset(q: np.ndarray, delta) -> np.ndarray:
    """Broadcast an offset against ``q`` (shape (S, A) or (T, S, A)).

    A scalar is a constant offset. Other shapes are tried in order: ``q.shape[:-1]`` or (S,) is a state offset
    repeated over actions; ``q.shape`` or (S, A) is an action-dependent
    offset. Pass a full ``q.shape`` array when T == S == A makes (S, A) and
    (T, S) indistinguishable.
    """
    delta = np.asarray(delta, dtype=np.float64)
    if delta.ndim == 0:
        return np.broadcast_to(delta, q.shape)
    if delta.shape in (q.shape[:-1], q.shape[-2:-1]):
        return np.broadcast_to(delta[..., None], q.shape)
    if delta.shape in (q.shape, q.shape[-2:]):
        return np.broadcast_to(delta, q.shape)
    raise ValueError(f"offset of shape {delta.shape} does not fit values of shape {q.shape}")


def argmax_sets(values: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Boolean mask of maximising actions along the last axis.

    Values within ``rtol`` (relative to the row's scale) of the maximum count
    as ties, so that rounding in an added offset cannot split a tie.
    """
    values = np.asarray(values, dtype=np.float64)
    top = values.max(axis=-1, keepdims=True)
    scale = 1.0 + np.abs(values).max(axis=-1, keepdims=True)
    return values >= top - rtol * scale


def check_lemma_argmax(q: np.ndarray, delta) -> bool:
    """True iff every state keeps the same set of greedy actions after adding ``delta``."""
    q = np.asarray(q, dtype=np.float64)
    return bool(np.array_equal(argmax_sets(q), argmax_sets(q + _offset(q, delta))))


def softmax_policy(theta: np.ndarray) -> np.ndarray:
    z = np.asarray(theta, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    p = np.exp(z)
    return p / p.sum(axis=-1, keepdims=True)


def score_weighted_gradient(mdp: EnumeratedMDP, theta: np.ndarray, q: np.ndarray) -> np.ndarray:
    """sum_t sum_s rho_t(s) sum_a pi(a|s) grad_theta log pi(a|s) q_t(s, a) for a
    tabular softmax policy; ``q`` is (S, A) or (T, S, A)."""
    from ..envs import occupancies

    pi = softmax_policy(theta)
    S, A = pi.shape
    T = mdp.horizon
    q = np.asarray(q, dtype=np.float64)
    qt = np.broadcast_to(q, (T, S, A)) if q.ndim == 2 else q
    rho = occupancies(mdp, pi, T)[:T]
    rho = rho * ~mdp.terminal[None, :]
    # d log pi(a|s) / d theta[s', b] = [s = s'] ([a = b] - pi(b|s))
    eye = np.eye(A)
    score = eye[None, :, :] - pi[:, None, :]  # (S, a, b)
    g = np.einsum("ts,sa,sab,tsa->sb", rho, pi, score, qt)
    return g


def check_lemma_policy_gradient(mdp: EnumeratedMDP, theta: np.ndarray, q: np.ndarray, delta,
                                tol: float = 1e-8) -> TheoremReport:
    """Policy gradient with Q against Q + delta, max-norm gap of the two vectors."""
    q = np.asarray(q, dtype=np.float64)
    g_true = score_weighted_gradient(mdp, theta, q)
    g_proxy = score_weighted_gradient(mdp, theta, q + _offset(q, delta))
    gap = float(np.max(np.abs(g_true - g_proxy)))
    return TheoremReport("lemma_policy_gradient", {"name": mdp.name}, float(np.max(np.abs(g_proxy))),
                         float(np.max(np.abs(g_true))), gap, tol)

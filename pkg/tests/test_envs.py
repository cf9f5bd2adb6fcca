import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diaster.envs import (
    LEFT,
    RIGHT,
    EnumeratedMDP,
    EnumerationCapError,
    EnvSpecError,
    EpisodeError,
    chain,
    dump_env_spec,
    enumerate_trajectories,
    env_from_spec,
    expected_return,
    key_door,
    make_env,
    occupancies,
    optimal_q,
    optimal_return,
    policy_q,
    random_mdp,
    state_occupancy,
    uniform_policy,
)


def within_3_sigma(count, n, p):
    return abs(count - n * p) <= 3 * math.sqrt(n * p * (1 - p))


def two_state_mdp():
    P = np.array([[[0.7, 0.3], [0.2, 0.8]], [[0.5, 0.5], [1.0, 0.0]]])
    R = np.array([[1.0, 0.0], [0.0, 2.0]])
    return EnumeratedMDP(P, R, [0.6, 0.4], horizon=2)


# --- construction ------------------------------------------------------------


def test_rows_must_sum_to_one():
    P = np.full((2, 1, 2), 0.5)
    P[0, 0] = [0.5, 0.5 + 1e-9]
    with pytest.raises(ValueError):
        EnumeratedMDP(P, np.zeros((2, 1)), [1.0, 0.0], 3)
    with pytest.raises(ValueError):
        EnumeratedMDP(np.full((2, 1, 2), 0.5), np.zeros((2, 1)), [0.5, 0.6], 3)


# --- reset / step / finish ---------------------------------------------------


def test_point_mass_start():
    env = make_env("chain", seed=3, length=6)
    for seed in range(20):
        assert env.reset(seed) == 0


def test_uniform_start_frequencies():
    P = np.full((4, 1, 4), 0.25)
    env = make_env("custom", seed=0, transition=P, hidden_reward=np.zeros((4, 1)),
                   initial_dist=np.full(4, 0.25), horizon=1)
    counts = np.bincount([env.reset() for _ in range(10_000)], minlength=4)
    assert all(within_3_sigma(c, 10_000, 0.25) for c in counts)


def test_stochastic_row_frequencies():
    P = np.zeros((2, 1, 2))
    P[0, 0] = [0.7, 0.3]
    P[1, 0] = [0.0, 1.0]
    env = make_env("custom", seed=5, transition=P, hidden_reward=np.zeros((2, 1)),
                   initial_dist=[1.0, 0.0], horizon=1)
    hits = 0
    for _ in range(10_000):
        env.reset()
        s, done = env.step(0)
        hits += s == 0
        assert done
    assert within_3_sigma(hits, 10_000, 0.7)


def test_chain_right_moves_one_cell():
    env = make_env("chain", length=6)
    env.reset()
    for k in range(4):
        s, done = env.step(RIGHT)
        assert s == k + 1 and not done


def test_done_exactly_at_horizon():
    env = make_env("chain", length=6, horizon=4)
    env.reset()
    flags = [env.step(LEFT)[1] for _ in range(4)]
    assert flags == [False, False, False, True]
    with pytest.raises(EpisodeError):
        env.step(LEFT)


def test_action_range_and_early_finish_rejected():
    env = make_env("chain", length=4)
    env.reset()
    with pytest.raises(ValueError):
        env.step(2)
    with pytest.raises(EpisodeError):
        env.finish_episode()


def test_step_never_exposes_reward():
    env = make_env("key_door_grid", seed=1)
    env.reset()
    rng = np.random.default_rng(0)
    done = False
    while not done:
        out = env.step(int(rng.integers(4)))
        assert len(out) == 2
        done = out[1]


def test_chain_optimal_episode_returns_one():
    env = make_env("chain", length=5)
    env.reset()
    done = False
    while not done:
        _, done = env.step(RIGHT)
    assert env.finish_episode() == 1.0
    assert env.t == 4


def test_zero_rewards_return_zero():
    mdp = random_mdp(3, 2, 5, np.random.default_rng(0))
    mdp.hidden_reward[:] = 0.0
    env = make_env("custom", transition=mdp.transition, hidden_reward=mdp.hidden_reward,
                   initial_dist=mdp.initial_dist, horizon=5)
    env.reset()
    while not env.done:
        env.step(0)
    assert env.finish_episode() == 0.0


def test_key_door_without_key_pays_nothing():
    env = make_env("key_door_grid")
    grid = env.info["grid"]
    env.reset()
    # walk along the top row into the door cell and keep bumping it
    while not env.done:
        env.step(1)
    assert env.finish_episode() == 0.0
    assert grid.decode(env.state) == (0, 3, 0)


def test_key_door_key_then_door_pays_one():
    env = make_env("key_door_grid")
    env.reset()
    for a in [2] * 4 + [0] * 4 + [1] * 4:
        env.step(a)
    while not env.done:
        env.step(3)
    assert env.finish_episode() == 1.0


def test_reusable_key_pays_every_opening():
    env = make_env("key_door_grid", key=(2, 2), door=(0, 4), reusable_key=True)
    grid = env.info["grid"]
    env.reset()
    to_key, to_door, back = [2, 2, 1, 1], [0, 0, 1, 1], [3, 3, 2, 2]
    for a in to_key + to_door:
        env.step(a)
    # the door consumed the key: back in phase 0, standing on the door cell
    assert grid.decode(env.state) == (0, 4, 0)
    for _ in range(2):
        for a in back + to_door:
            env.step(a)
    while not env.done:
        env.step(0)
    assert env.finish_episode() == 3.0
    mdp = key_door(key=(2, 2), door=(0, 4), reusable_key=True)[0]
    assert optimal_return(mdp) == 3.0
    with pytest.raises(ValueError):
        key_door(reusable_key=True, door_terminal=True)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_finish_equals_hidden_sum(seed):
    rng = np.random.default_rng(seed)
    mdp = random_mdp(4, 3, 6, rng)
    env = make_env("custom", seed=seed, transition=mdp.transition,
                   hidden_reward=mdp.hidden_reward, initial_dist=mdp.initial_dist, horizon=6)
    env.reset()
    while not env.done:
        env.step(int(rng.integers(3)))
    traj = env.trajectory()
    assert traj.episodic_return == mdp.trajectory_return(traj)


# --- enumeration -------------------------------------------------------------


def test_single_state_single_action():
    mdp = EnumeratedMDP(np.ones((1, 1, 1)), np.zeros((1, 1)), [1.0], 3)
    e = enumerate_trajectories(mdp, np.ones((1, 1)))
    assert len(e) == 1 and e.probs[0] == 1.0
    assert e.states.tolist() == [[0, 0, 0]] and e.actions.tolist() == [[0, 0, 0]]


def test_two_state_hand_enumeration():
    mdp = two_state_mdp()
    pi = np.array([[0.25, 0.75], [0.5, 0.5]])
    e = enumerate_trajectories(mdp, pi)
    # 16 combinations, two of them through the zero entry P[1, 1, 1]
    assert len(e) == 14
    rho0, P = [0.6, 0.4], mdp.transition.tolist()
    got = {(tuple(s), tuple(a)): p for s, a, p in zip(e.states.tolist(), e.actions.tolist(), e.probs)}
    for s0, a0, s1, a1 in itertools.product(range(2), repeat=4):
        hand = rho0[s0] * pi[s0][a0] * P[s0][a0][s1] * pi[s1][a1]
        key = ((s0, s1), (a0, a1))
        if hand == 0:
            assert key not in got
        else:
            assert got[key] == pytest.approx(hand, abs=1e-15)
    assert e.probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_enumeration_cap_refusal():
    mdp = random_mdp(4, 3, 6, np.random.default_rng(0))
    with pytest.raises(EnumerationCapError) as info:
        enumerate_trajectories(mdp, uniform_policy(mdp), cap=1000)
    assert info.value.required == 12**6


def test_terminal_padding():
    mdp = chain(3, horizon=4)
    e = enumerate_trajectories(mdp, uniform_policy(mdp))
    row = [i for i, (a) in enumerate(e.actions.tolist()) if a[:2] == [RIGHT, RIGHT]][0]
    assert e.states[row].tolist() == [0, 1, 2, 2]
    assert e.actions[row].tolist() == [RIGHT, RIGHT, -1, -1]
    assert e.lengths[row] == 2


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4), st.integers(1, 3), st.integers(1, 4), st.integers(0, 10_000), st.booleans())
def test_enumeration_marginals_match_propagation(S, A, T, seed, with_terminal):
    rng = np.random.default_rng(seed)
    mdp = random_mdp(S, A, T, rng)
    if with_terminal:
        mdp.terminal[rng.integers(S)] = True
    policy = rng.dirichlet(np.ones(A), size=(T, S))
    e = enumerate_trajectories(mdp, policy)
    assert np.all(e.probs >= 0)
    assert abs(e.probs.sum() - 1.0) < 1e-9
    rho = occupancies(mdp, policy)
    for t in range(T):
        marginal = np.bincount(e.states[:, t], weights=e.probs, minlength=S)
        np.testing.assert_allclose(marginal, rho[t], atol=1e-9)
        np.testing.assert_allclose(state_occupancy(mdp, policy, t), rho[t], atol=1e-12)
    assert (e.probs * e.returns(mdp)).sum() == pytest.approx(expected_return(mdp, policy), abs=1e-9)


def test_occupancy_base_and_deterministic():
    mdp = chain(6)
    right = np.zeros((6, 2))
    right[:, RIGHT] = 1.0
    np.testing.assert_array_equal(state_occupancy(mdp, right, 0), mdp.initial_dist)
    np.testing.assert_array_equal(state_occupancy(mdp, right, 3), np.eye(6)[3])


# --- dynamic programming -----------------------------------------------------


def test_optimal_return_values():
    mdp = random_mdp(3, 2, 4, np.random.default_rng(1))
    mdp.hidden_reward[:] = 0.0
    assert optimal_return(mdp) == 0.0
    assert optimal_return(chain(5)) == 1.0
    assert optimal_return(key_door()[0]) == 1.0
    # too short to fetch the key (4 steps) and reach the door (8 more)
    assert optimal_return(key_door(horizon=11)[0]) == 0.0
    assert optimal_return(key_door(horizon=12)[0]) == 1.0
    assert optimal_return(key_door(step_cost=0.01)[0]) == pytest.approx(1.0 - 0.12)


def test_optimal_matches_best_deterministic_policy_by_enumeration():
    mdp = random_mdp(2, 2, 3, np.random.default_rng(2))
    best = -np.inf
    for choice in itertools.product(range(2), repeat=2 * 3):
        pi = np.zeros((3, 2, 2))
        pi[np.repeat(np.arange(3), 2), np.tile(np.arange(2), 3), choice] = 1.0
        e = enumerate_trajectories(mdp, pi)
        best = max(best, float((e.probs * e.returns(mdp)).sum()))
    assert optimal_return(mdp) == pytest.approx(best, abs=1e-12)
    assert optimal_q(mdp).shape == (3, 2, 2)


def test_policy_q_terminal_rows_are_zero():
    mdp = chain(4)
    q = policy_q(mdp, uniform_policy(mdp))
    assert np.all(q[:, 3] == 0.0)
    assert q[-1, 2, RIGHT] == 1.0


# --- spec files --------------------------------------------------------------


def test_spec_roundtrip(tmp_path):
    path = tmp_path / "env.yaml"
    dump_env_spec({"kind": "chain", "length": 5, "horizon": 7, "seed": 4}, path)
    env = env_from_spec(path)
    assert env.kind == "chain" and env.horizon == 7 and env.n_states == 5 and env.seed == 4


def test_spec_custom_tables(tmp_path):
    mdp = two_state_mdp()
    spec = {"kind": "custom", "transition": mdp.transition.tolist(),
            "hidden_reward": mdp.hidden_reward.tolist(), "initial_dist": [0.6, 0.4], "horizon": 2}
    path = tmp_path / "custom.yaml"
    dump_env_spec(spec, path)
    env = env_from_spec(path, seed=1)
    np.testing.assert_array_equal(env.mdp.transition, mdp.transition)


def test_spec_rejects_unknown_keys():
    with pytest.raises(EnvSpecError, match="lenght"):
        env_from_spec({"kind": "chain", "lenght": 5})
    with pytest.raises(EnvSpecError):
        env_from_spec({"kind": "mujoco"})
    with pytest.raises(EnvSpecError):
        env_from_spec({"kind": "chain", "schema": "other/2"})

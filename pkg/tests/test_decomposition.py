import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diaster.decomposition import (
    ConstantPsi,
    MethodParams,
    ReturnStats,
    StepRewardModel,
    SubTrajRewardModel,
    TrajectoryBatch,
    cut_loss,
    diaster_return_loss,
    diaster_step_loss,
    exact_step_reward_oracle,
    make_method,
    multicut_return_loss,
    rrd_loss,
    rudder_loss,
    sample_cut_points,
    sample_cut_sets,
    sample_subsequences,
    step_loss,
    step_reward_table,
    step_targets,
    validate_cuts,
)
from diaster.envs import EnumeratedMDP, Trajectory, UndefinedStateError
from diaster.nn import Adam, GruCell, grad, parameter

S, A = 4, 3


def random_traj(rng, T=None, S=S, A=A, ret=None):
    T = int(rng.integers(1, 9)) if T is None else T
    states = rng.integers(0, S, T + 1)
    actions = rng.integers(0, A, T)
    return Trajectory(states, actions, float(rng.normal()) if ret is None else ret)


def single(traj):
    return TrajectoryBatch.from_trajectories([traj])


def zero_psi(bias=0.0):
    cell = GruCell.zeros(S + A, 4)
    return SubTrajRewardModel(cell, parameter(np.zeros((4, 1))), parameter(np.full(1, bias)), S, A)


# -- sub-trajectory reward ------------------------------------------------------
@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_empty_segment_scores_zero(seed):
    rng = np.random.default_rng(seed)
    psi = SubTrajRewardModel.create(S, A, 5, rng)
    psi.head_b.data[:] = rng.normal()
    assert psi.segment_scores(np.zeros((2, 0), int), np.zeros((2, 0), int), [0, 0]).data.tolist() == [0.0, 0.0]
    states = rng.integers(0, S, (3, 4))
    actions = rng.integers(0, A, (3, 4))
    assert psi.segment_scores(states, actions, [0, 2, 4]).data[0] == 0.0
    pv = psi.prefix_values(states, actions, [0, 2, 4])
    assert np.all(pv[:, 0] == 0.0)
    assert np.all(pv[0] == 0.0)


def test_zero_parameter_model_outputs_bias():
    rng = np.random.default_rng(0)
    traj = random_traj(rng, T=5)
    assert zero_psi(0.0)(traj.states[:-1], traj.actions) == 0.0
    assert zero_psi(0.7)(traj.states[:-1], traj.actions) == pytest.approx(0.7)


def test_overfit_full_trajectory_scores():
    rng = np.random.default_rng(3)
    trajs = [random_traj(rng, T=6, ret=float(r)) for r in (0.0, 1.0, 2.0, -1.0, 0.5)]
    batch = TrajectoryBatch.from_trajectories(trajs)
    psi = SubTrajRewardModel.create(S, A, 16, rng)
    opt = Adam(psi.parameters(), lr=1e-2)
    no_cut = [np.zeros(0, int)] * len(batch)
    for _ in range(1500):
        opt.step(grad(cut_loss(psi, batch, no_cut), opt.params))
    scores = psi.segment_scores(batch.states, batch.actions, batch.lengths).data
    assert np.max(np.abs(scores - batch.returns)) < 1e-2


# -- return decomposition losses --------------------------------------------------
def test_zero_model_loss_is_return_squared():
    traj = random_traj(np.random.default_rng(1), T=5, ret=2.0)
    for c in range(6):
        assert diaster_return_loss(zero_psi(), traj, c).item() == 4.0


def test_boundary_cuts_drop_the_empty_segment():
    rng = np.random.default_rng(2)
    psi = SubTrajRewardModel.create(S, A, 6, rng)
    traj = random_traj(rng, T=5)
    full = psi(traj.states[:-1], traj.actions)
    expected = (full - traj.episodic_return) ** 2
    assert diaster_return_loss(psi, traj, 0).item() == pytest.approx(expected, abs=1e-14)
    assert diaster_return_loss(psi, traj, 5).item() == pytest.approx(expected, abs=1e-14)
    assert multicut_return_loss(psi, traj, []).item() == pytest.approx(expected, abs=1e-14)


def test_cut_out_of_range_rejected():
    psi = zero_psi()
    traj = random_traj(np.random.default_rng(0), T=4)
    with pytest.raises(ValueError):
        diaster_return_loss(psi, traj, 5)
    with pytest.raises(ValueError):
        multicut_return_loss(psi, traj, [3, 2])
    with pytest.raises(ValueError):
        multicut_return_loss(psi, traj, [0])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_single_cut_multicut_is_bitwise_identical(seed):
    rng = np.random.default_rng(seed)
    psi = SubTrajRewardModel.create(S, A, 5, rng)
    traj = random_traj(rng, T=int(rng.integers(2, 9)))
    c = int(rng.integers(1, len(traj)))
    assert multicut_return_loss(psi, traj, [c]).item() == diaster_return_loss(psi, traj, c).item()


def test_every_step_cut_matches_hand_sum():
    rng = np.random.default_rng(4)
    psi = SubTrajRewardModel.create(S, A, 6, rng)
    traj = random_traj(rng, T=3)
    per_step = [psi(traj.states[t:t + 1], traj.actions[t:t + 1]) for t in range(3)]
    hand = (sum(per_step) - traj.episodic_return) ** 2
    assert multicut_return_loss(psi, traj, [1, 2]).item() == pytest.approx(hand, rel=1e-12)


def test_segments_start_from_a_fresh_hidden_state():
    rng = np.random.default_rng(5)
    psi = SubTrajRewardModel.create(S, A, 6, rng)
    traj = random_traj(rng, T=6)
    s, a = traj.states[:-1], traj.actions
    hand = (psi(s[:2], a[:2]) + psi(s[2:5], a[2:5]) + psi(s[5:], a[5:]) - traj.episodic_return) ** 2
    assert multicut_return_loss(psi, traj, [2, 5]).item() == pytest.approx(hand, rel=1e-12)


def test_memorised_trajectory_reaches_small_loss():
    rng = np.random.default_rng(6)
    traj = random_traj(rng, T=6, ret=1.5)
    psi = SubTrajRewardModel.create(S, A, 8, rng)
    opt = Adam(psi.parameters(), lr=1e-2)
    batch = single(traj)
    for _ in range(600):
        cuts = sample_cut_sets(batch.lengths, 1, rng)
        opt.step(grad(cut_loss(psi, batch, cuts), opt.params))
    losses = [diaster_return_loss(psi, traj, c).item() for c in range(1, 6)]
    assert max(losses) < 1e-4


# -- step-wise losses -------------------------------------------------------------
@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_step_targets_telescope_to_full_score(seed):
    rng = np.random.default_rng(seed)
    psi = SubTrajRewardModel.create(S, A, 5, rng)
    batch = TrajectoryBatch.from_trajectories([random_traj(rng) for _ in range(4)])
    full = psi.segment_scores(batch.states, batch.actions, batch.lengths).data
    assert np.allclose(step_targets(psi, batch).sum(axis=1), full, atol=1e-9, rtol=0)


def test_first_step_target_is_first_pair_score():
    rng = np.random.default_rng(7)
    psi = SubTrajRewardModel.create(S, A, 5, rng)
    traj = random_traj(rng, T=4)
    assert step_targets(psi, single(traj))[0, 0] == pytest.approx(psi(traj.states[:1], traj.actions[:1]), abs=1e-14)


def test_step_loss_zero_when_phi_matches_target():
    rng = np.random.default_rng(8)
    traj = random_traj(rng, T=4)
    target = step_targets(ConstantPsi(0.3), single(traj))[0, 2]
    assert target == 0.0
    phi = StepRewardModel.create(S, A, (4,), rng)
    for w in phi.net.layer_weights + phi.net.layer_biases:
        w.data[:] = 0.0
    assert diaster_step_loss(phi, ConstantPsi(0.3), traj, 2).item() == 0.0
    assert diaster_step_loss(phi, ConstantPsi(0.3), traj, 0).item() == pytest.approx(0.09)


def test_step_loss_does_not_reach_psi():
    rng = np.random.default_rng(9)
    psi = SubTrajRewardModel.create(S, A, 5, rng)
    phi = StepRewardModel.create(S, A, (6,), rng)
    batch = TrajectoryBatch.from_trajectories([random_traj(rng, T=5) for _ in range(3)])
    loss = step_loss(phi, psi, batch, np.array([0, 2, 4]))
    g = grad(loss, {**psi.parameters("psi."), **phi.parameters("phi.")})
    assert all(np.all(v == 0.0) for k, v in g.items() if k.startswith("psi."))
    assert any(np.any(v != 0.0) for k, v in g.items() if k.startswith("phi."))


def test_all_step_loss_averages_single_step_losses():
    rng = np.random.default_rng(10)
    psi = SubTrajRewardModel.create(S, A, 5, rng)
    phi = StepRewardModel.create(S, A, (6,), rng)
    traj = random_traj(rng, T=5)
    each = [diaster_step_loss(phi, psi, traj, t).item() for t in range(5)]
    assert step_loss(phi, psi, single(traj)).item() == pytest.approx(np.mean(each), rel=1e-12)


def test_step_index_outside_rejected():
    traj = random_traj(np.random.default_rng(0), T=3)
    phi = StepRewardModel.create(S, A, (4,), np.random.default_rng(0))
    with pytest.raises(ValueError):
        diaster_step_loss(phi, ConstantPsi(), traj, 3)


# -- baselines ----------------------------------------------------------------------
def test_rrd_full_length_subsequence_is_mean_regression():
    rng = np.random.default_rng(11)
    phi = StepRewardModel.create(S, A, (6,), rng)
    traj = random_traj(rng, T=5)
    batch = single(traj)
    idx, valid = sample_subsequences(batch.lengths, 5, rng)
    assert sorted(idx[0].tolist()) == [0, 1, 2, 3, 4]
    pred = phi.predict(traj.states[:-1], traj.actions, np.arange(5))
    expected = (pred.mean() - traj.episodic_return / 5) ** 2
    assert rrd_loss(phi, batch, idx, valid).item() == pytest.approx(expected, rel=1e-12)


def test_rudder_constant_predictor():
    traj = random_traj(np.random.default_rng(12), T=4)
    r = step_targets(ConstantPsi(0.6), single(traj))[0]
    assert r.tolist() == [0.6, 0.0, 0.0, 0.0]


def test_rudder_loss_hand_value():
    batch = single(random_traj(np.random.default_rng(13), T=3, ret=1.0))
    g = zero_psi(0.25)
    assert rudder_loss(g, batch).item() == pytest.approx(0.75**2)


def test_ircr_minmax_normalisation():
    stats = ReturnStats()
    for r in (0.0, 1.0):
        stats.update(r)
    method = make_method("ircr", S, A, 5)
    batch = TrajectoryBatch.from_trajectories([random_traj(np.random.default_rng(14), T=4, ret=1.0)])
    assert method.relabel(batch, stats)[0].tolist() == [1.0] * 4
    assert np.all(method.relabel(batch, ReturnStats()) == 0.0)
    flat = ReturnStats()
    flat.update(1.0)
    assert np.all(method.relabel(batch, flat) == 0.0)


def test_episodic_puts_return_on_last_step():
    method = make_method("episodic", S, A, 5)
    batch = TrajectoryBatch.from_trajectories(
        [random_traj(np.random.default_rng(15), T=3, ret=2.0), random_traj(np.random.default_rng(16), T=1, ret=-1.0)]
    )
    assert method.relabel(batch).tolist() == [[0.0, 0.0, 2.0], [-1.0, 0.0, 0.0]]


def test_no_step_rewards_sum_to_full_score():
    rng = np.random.default_rng(17)
    method = make_method("diaster_no_step", S, A, 8, MethodParams(psi_hidden=6), rng)
    batch = TrajectoryBatch.from_trajectories([random_traj(rng) for _ in range(5)])
    full = method.psi.segment_scores(batch.states, batch.actions, batch.lengths).data
    assert np.allclose(method.relabel(batch).sum(axis=1), full, atol=1e-9, rtol=0)


@pytest.mark.parametrize("tag", ["diaster", "diaster_no_step", "rudder_lite", "ircr", "rrd", "episodic"])
def test_every_method_updates_and_relabels(tag):
    rng = np.random.default_rng(18)
    method = make_method(tag, S, A, 8, MethodParams(psi_hidden=6, phi_hidden=(8,)), rng)
    batch = TrajectoryBatch.from_trajectories([random_traj(rng) for _ in range(6)])
    out = method.update(batch, rng)
    assert set(out) == {"decomp_loss", "step_loss"}
    stats = ReturnStats()
    for r in batch.returns:
        stats.update(r)
    r = method.relabel(batch, stats)
    assert r.shape == batch.states.shape
    assert np.all(r[~batch.mask] == 0.0)
    rows, steps = np.array([0, 3]), np.array([0, 0])
    assert np.allclose(method.transition_rewards(batch, rows, steps, stats), r[rows, steps])


def test_unknown_method_rejected():
    with pytest.raises(ValueError, match="unknown method"):
        make_method("nope", S, A, 5)


def test_diaster_step_sampling_modes_both_train():
    rng = np.random.default_rng(19)
    batch = TrajectoryBatch.from_trajectories([random_traj(rng, T=5) for _ in range(6)])
    for mode in ("one", "all"):
        method = make_method("diaster", S, A, 5, MethodParams(psi_hidden=6, phi_hidden=(8,), step_sampling=mode),
                             np.random.default_rng(0))
        out = method.update(batch, np.random.default_rng(1))
        assert np.isfinite(out["decomp_loss"]) and np.isfinite(out["step_loss"])


# -- cut sampling -------------------------------------------------------------------
def test_cut_point_edge_cases():
    rng = np.random.default_rng(0)
    assert sample_cut_points(10, 0, rng).tolist() == []
    assert sample_cut_points(10, 9, rng).tolist() == list(range(1, 10))
    assert sample_cut_points(10, 10, rng, low=0).tolist() == list(range(10))
    with pytest.raises(ValueError):
        sample_cut_points(10, 10, rng)
    with pytest.raises(ValueError):
        validate_cuts([2, 2], 5)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 12), st.integers(0, 11), st.integers(0, 2**31 - 1))
def test_sampled_cuts_strictly_inside(T, m, seed):
    m = min(m, T - 1)
    cuts = sample_cut_points(T, m, np.random.default_rng(seed))
    assert len(cuts) == m
    validate_cuts(cuts, T)


def test_single_cut_uniformity():
    rng = np.random.default_rng(1)
    n, T = 10_000, 10
    draws = np.array([sample_cut_points(T, 1, rng)[0] for _ in range(n)])
    p = 1 / 9
    sigma = np.sqrt(n * p * (1 - p))
    counts = np.bincount(draws, minlength=T)[1:]
    assert np.all(np.abs(counts - n * p) < 3 * sigma)


def test_batched_cut_sets_uniform_and_capped():
    rng = np.random.default_rng(2)
    lengths = np.full(10_000, 10)
    sets = sample_cut_sets(lengths, 1, rng)
    counts = np.bincount(np.concatenate(sets), minlength=10)[1:]
    sigma = np.sqrt(10_000 * (1 / 9) * (8 / 9))
    assert np.all(np.abs(counts - 10_000 / 9) < 3 * sigma)
    short = sample_cut_sets(np.array([1, 2, 5]), 3, rng)
    assert [len(c) for c in short] == [0, 1, 3]


# -- exact oracle ----------------------------------------------------------------------
def fork_mdp():
    """State 0 forks to 1 (p=0.25) or 2 (p=0.75); both lead back to 0."""
    P = np.zeros((3, 2, 3))
    P[0, :, 1], P[0, :, 2] = 0.25, 0.75
    P[1, :, 0] = P[2, :, 0] = 1.0
    return EnumeratedMDP(P, np.zeros((3, 2)), np.array([1.0, 0.0, 0.0]), 3)


def test_oracle_two_prefix_hand_case():
    rng = np.random.default_rng(20)
    psi = SubTrajRewardModel.create(3, 2, 5, rng)
    mdp = fork_mdp()
    policy = np.tile([1.0, 0.0], (3, 1))
    a = 1

    def diff(prefix_s):
        n = len(prefix_s)
        s = np.array([prefix_s + [0]])
        acts = np.zeros((1, n + 1), int)
        acts[0, -1] = a
        pv = psi.prefix_values(s, acts, [n + 1])[0]
        return pv[n + 1] - pv[n]

    hand = 0.25 * diff([0, 1]) + 0.75 * diff([0, 2])
    assert exact_step_reward_oracle(mdp, policy, psi, 0, a, 2) == pytest.approx(hand, abs=1e-12)


def test_oracle_point_mass_and_first_step():
    rng = np.random.default_rng(21)
    psi = SubTrajRewardModel.create(3, 2, 5, rng)
    mdp = fork_mdp()
    policy = np.tile([1.0, 0.0], (3, 1))
    assert exact_step_reward_oracle(mdp, policy, psi, 0, 1, 0) == pytest.approx(psi([0], [1]), abs=1e-14)
    # only one prefix (0, 0) reaches state 1 at step 1
    pv = psi.prefix_values(np.array([[0, 1]]), np.array([[0, 1]]), [2])[0]
    assert exact_step_reward_oracle(mdp, policy, psi, 1, 1, 1) == pytest.approx(pv[2] - pv[1], abs=1e-14)


def test_oracle_undefined_for_unreachable_state():
    psi = ConstantPsi(1.0)
    with pytest.raises(UndefinedStateError):
        exact_step_reward_oracle(fork_mdp(), np.full((3, 2), 0.5), psi, 1, 0, 0)


def test_oracle_table_matches_scalar_oracle():
    rng = np.random.default_rng(22)
    from diaster.envs import random_mdp

    mdp = random_mdp(3, 2, 4, rng)
    policy = rng.dirichlet(np.ones(2), size=3)
    psi = SubTrajRewardModel.create(3, 2, 5, rng)
    table, reach = step_reward_table(mdp, policy, psi)
    for t in range(4):
        for s in range(3):
            for a in range(2):
                assert table[t, s, a] == pytest.approx(exact_step_reward_oracle(mdp, policy, psi, s, a, t), abs=1e-12)
    assert np.allclose(reach.sum(axis=1), 1.0)

import math

import numpy as np
import pytest

from taskalloc.dpbrag import (
    ConstantRewards,
    ConstantSchedule,
    DampedCosineRewards,
    TwoPhaseSchedule,
    derive_constant_params,
    dpbrag_round,
    initial_state,
    run_dpbrag,
    sigma_sw,
)
from taskalloc.graph import DirectedGraph, GraphError
from taskalloc.instances import EXAMPLE1, TABLE1, TABLE1_OPTIMUM, generate_random_instance, scaled_profile
from taskalloc.model import ModelError, RewardMatrix, translated_support
from taskalloc.nash import is_ne_partition_game
from taskalloc.pbrag import two_step_step_size, run_pbrag

import oracles

RING4 = DirectedGraph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])


@pytest.mark.parametrize("t, expected", [(4, 9), (5, 3), (0, 9), (8, 9), (7, 3)])
def test_sigma_sw(t, expected):
    assert sigma_sw(3, 9, t, 4) == expected


def test_sigma_sw_bad_period():
    with pytest.raises(ValueError):
        sigma_sw(1, 2, 0, 0)


def test_damped_cosine_seeded_and_convergent():
    a = DampedCosineRewards.from_seed(TABLE1, 3)
    b = DampedCosineRewards.from_seed(TABLE1, 3)
    assert np.array_equal(a.sample(7), b.sample(7))
    assert np.all(a.a <= TABLE1.values) and np.all(a.a >= 0)
    assert np.all((a.b >= 0) & (a.b <= 10)) and np.all((a.c >= 0) & (a.c <= 1))
    assert np.array_equal(a.sample(0), TABLE1.values + a.a)
    assert np.allclose(a.sample(2000), TABLE1.values, atol=1e-12)


def test_damped_cosine_rejects_negative_decay():
    with pytest.raises(ModelError):
        DampedCosineRewards(EXAMPLE1, 0.1, 1.0, -0.5)


def test_two_phase_schedule():
    s = TwoPhaseSchedule(T=8, d=3, alpha0=2.0, beta0=0.5)
    assert [float(s.at(t)) for t in (0, 5, 6, 7, 8, 14)] == [2.0, 2.0, 0.5, 0.5, 1.0, 1.0]
    assert float(s.at(16)) == pytest.approx(2 / 3)
    with pytest.raises(ModelError):
        TwoPhaseSchedule(T=7, d=3)


def test_constant_schedule_validation():
    with pytest.raises(ModelError):
        ConstantSchedule(0.0)


def test_derive_params_fixed4x8():
    p = derive_constant_params(TABLE1, d=3, eps=0.9, nu=0.1)
    v = TABLE1.values
    top2 = np.sort(v, axis=0)[-2:]
    spread = v.max(axis=0) - v.min(axis=0)
    alpha_min = 0.9 / (2 * 3 * spread.max())
    mu = 0.9 * float(np.min((top2[1] - top2[0]) / 2))
    bound = 6 + 1 / (alpha_min * mu) + 1
    assert p.alpha_min == pytest.approx(alpha_min)
    assert p.mu == pytest.approx(mu)
    assert p.T > bound and p.T - 1 <= bound
    assert np.allclose(p.alpha[0], 0.9 / (6 * spread))


def test_period_grows_as_eps_shrinks():
    Ts = [derive_constant_params(TABLE1, 3, eps, 0.1).T for eps in (0.9, 0.5, 0.1)]
    assert Ts == sorted(Ts) and Ts[0] < Ts[-1]


def test_derive_params_errors():
    with pytest.raises(ModelError):
        derive_constant_params(EXAMPLE1, 1, 0.5, 0.1)
    with pytest.raises(ModelError):
        derive_constant_params(TABLE1, 3, 0.5, 1 - 1e-12, T_cap=10**7)
    for eps, nu, d in ((0, 0.1, 1), (0.5, 1.0, 1), (0.5, 0.1, 0)):
        with pytest.raises(ModelError):
            derive_constant_params(TABLE1, d, eps, nu)


def test_initial_state_injects_z0():
    seq = DampedCosineRewards.from_seed(TABLE1, 0)
    st = initial_state(np.zeros(TABLE1.shape), seq)
    z0 = seq.sample(0)
    assert all(np.array_equal(x, z0) for x in (st.M, st.S, st.e, st.z))


def test_single_agent_frozen_state():
    f = RewardMatrix([[0.4, 0.2]])
    run = run_dpbrag(np.zeros((1, 2)), f, DirectedGraph(1), ConstantRewards(f), ConstantSchedule(1.0), 5, 30, d=1)
    # M = S = z, so the drift z - (M+S)/2 is zero and weights never move
    assert np.all(run.w == 0.0)
    assert np.all(run.M == f.values) and np.all(run.S == f.values)


def test_injection_overwrites_registers():
    seq = DampedCosineRewards.from_seed(TABLE1, 5)
    T = 8
    run = run_dpbrag(np.zeros(TABLE1.shape), TABLE1, RING4, seq, TwoPhaseSchedule(T, 3), T, 40)
    for t in range(0, 41, T):
        z = seq.sample(t)
        assert np.array_equal(run.e[t], z) and np.array_equal(run.M[t], z) and np.array_equal(run.S[t], z)
    # e is held between injections
    assert np.array_equal(run.e[9], run.e[15])


def test_registers_agree_within_period():
    seq = ConstantRewards(TABLE1)
    T = 12
    run = run_dpbrag(np.zeros(TABLE1.shape), TABLE1, RING4, seq, TwoPhaseSchedule(T, 3), T, 36)
    v = TABLE1.values
    top = v.max(axis=0)
    sub = np.array([oracles.true_submax(v[:, q].tolist()) for q in range(v.shape[1])])
    for k in range(3):
        assert np.all(run.M[k * T + 3] == top)
        assert np.all(run.S[k * T + 2 * 3 + 1] == sub)


def test_round_matches_hand_computation():
    f = EXAMPLE1
    g = DirectedGraph.complete(2)
    st = initial_state(np.zeros((2, 2)), ConstantRewards(f))
    nxt = dpbrag_round(st, g, ConstantRewards(f), ConstantSchedule(1.0), 10)
    # first round: M = S = z so weights stay at 0, registers agree on max and submax
    assert np.all(nxt.w == 0)
    assert nxt.M.tolist() == [[0.5, 0.7], [0.5, 0.7]]
    assert nxt.S.tolist() == [[0.5, 0.3], [0.5, 0.3]]
    nxt2 = dpbrag_round(nxt, g, ConstantRewards(f), ConstantSchedule(1.0), 10)
    assert np.allclose(nxt2.w, [[0.0, 0.2], [0.0, 0.0]])


def test_run_validation():
    f = TABLE1
    seq = ConstantRewards(f)
    with pytest.raises(GraphError):
        run_dpbrag(np.zeros(f.shape), f, DirectedGraph(4, [(0, 1)]), seq, ConstantSchedule(1.0), 8, 5)
    with pytest.raises(GraphError):
        run_dpbrag(np.zeros(f.shape), f, DirectedGraph.cycle(3), seq, ConstantSchedule(1.0), 8, 5)
    with pytest.raises(ModelError):
        run_dpbrag(np.zeros(f.shape), f, RING4, seq, ConstantSchedule(1.0), 1, 5)


def test_run_is_deterministic():
    def go():
        seq = DampedCosineRewards.from_seed(TABLE1, 0)
        return run_dpbrag(np.zeros(TABLE1.shape), TABLE1, RING4, seq, TwoPhaseSchedule(8, 3), 8, 200)

    a, b = go(), go()
    for k in ("w", "M", "S", "e", "z"):
        assert np.array_equal(getattr(a, k), getattr(b, k))


def test_message_accounting():
    seq = ConstantRewards(TABLE1)
    run = run_dpbrag(np.zeros(TABLE1.shape), TABLE1, RING4, seq, TwoPhaseSchedule(8, 3), 8, 10)
    assert run.messages_per_round == 4
    assert run.values_per_round == 2 * 8 * 4
    assert run.total_messages == 40


def test_outside_hypotheses_noted():
    g = DirectedGraph.complete(2)
    run = run_dpbrag(np.zeros((2, 2)), EXAMPLE1, g, ConstantRewards(EXAMPLE1), TwoPhaseSchedule(4, 1), 4, 20)
    assert not run.within_hypotheses and run.notes


def test_fixed4x8_reaches_optimum():
    seq = DampedCosineRewards.from_seed(TABLE1, 0)
    run = run_dpbrag(np.zeros(TABLE1.shape), TABLE1, RING4, seq, TwoPhaseSchedule(8, 3), 8, 1000)
    assert run.allocation() == TABLE1_OPTIMUM
    assert run.allocation_stable_from() <= 1000 - 8


def test_constant_rewards_match_centralised_limit():
    for seed in range(15):
        f = generate_random_instance(seed, 4, 5)
        ref = run_pbrag(np.zeros(f.shape), f, two_step_step_size(f)).final
        run = run_dpbrag(np.zeros(f.shape), f, RING4, ConstantRewards(f), TwoPhaseSchedule(8, 3), 8, 1200)
        assert run.allocation() == translated_support(ref)
        assert is_ne_partition_game(run.allocation(), f).is_ne


def test_scaled_profile_first_hits():
    f = scaled_profile(4)
    results = {}
    for eps in (0.9, 0.3):
        p = derive_constant_params(f, 3, eps, 0.1)
        seq = DampedCosineRewards.from_seed(f, 1)
        run = run_dpbrag(np.zeros(f.shape), f, RING4, seq, p.schedule(), p.T, 4 * p.T)
        results[eps] = run.first_hit(0, 0)
        assert run.tau(eps) is not None
    assert results[0.9] < results[0.3]


def test_tau_and_stability_helpers():
    f = EXAMPLE1
    run = run_dpbrag(np.zeros((2, 2)), f, DirectedGraph.complete(2), ConstantRewards(f), TwoPhaseSchedule(4, 1), 4, 5)
    run.w[:] = 0.0
    run.w[3:, 0, 1] = 1.0
    assert run.allocation_stable_from() == 3
    assert run.first_hit(0, 1) == 3 and run.first_hit(1, 1) is None
    assert run.peak_non_dominating() == 0.0
    # task a is tied so both agents dominate it; neither is at 1
    assert run.tau(0.5) is None
    run.w[4:, :, 0] = 1.0
    assert run.tau(0.5) == 4
    assert math.isclose(run.peak_non_dominating(), 0.0)

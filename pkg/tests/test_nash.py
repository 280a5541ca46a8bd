import numpy as np
import pytest

from taskalloc.instances import EXAMPLE1, TABLE1, TABLE1_OPTIMUM, generate_random_instance
from taskalloc.model import RewardMatrix, check_assumptions, objective, translated_support
from taskalloc.nash import (
    HELD_BY_DOMINATING,
    NOT_HELD_BY_OTHERS,
    EnumerationTooLarge,
    OptimalSet,
    enumerate_optimal_partitions,
    is_ne_partition_game,
    is_ne_weight_game,
    unique_ne,
    verify_inclusion,
)
from taskalloc.pbrag import is_equilibrium_weight

import oracles

A, B = 0, 1
P = lambda *sets: tuple(frozenset(s) for s in sets)  # noqa: E731


def tied_instance(rng, n, m):
    """Values on a coarse grid so ties are common; resampled until no task is all-tied."""
    while True:
        f = RewardMatrix(rng.integers(0, 4, (n, m)) / 4)
        if check_assumptions(f).ok:
            return f


def test_tied_pair_partition_ne():
    assert is_ne_partition_game(P({A, B}, {A}), EXAMPLE1).is_ne
    rep = is_ne_partition_game(P({B}, set()), EXAMPLE1)
    assert not rep.is_ne and rep.violations[0].prop == HELD_BY_DOMINATING and rep.violations[0].task == A
    rep = is_ne_partition_game(P({A, B}, {B}), EXAMPLE1)
    assert [(v.agent, v.task, v.prop) for v in rep.violations] == [(1, B, NOT_HELD_BY_OTHERS)]


def test_tied_pair_weight_ne():
    assert is_ne_weight_game([[1, 1], [0.6, 0]], EXAMPLE1).is_ne
    assert not is_ne_weight_game([[0.9, 1], [0.9, 0]], EXAMPLE1).is_ne
    rep = is_ne_weight_game([[1, 1], [0, 0.2]], EXAMPLE1)
    assert [(v.agent, v.task) for v in rep.violations] == [(1, B)]


def test_weight_ne_tolerance():
    w = [[1 - 1e-8, 1], [0, 1e-8]]
    assert not is_ne_weight_game(w, EXAMPLE1).is_ne
    assert is_ne_weight_game(w, EXAMPLE1, tol=1e-6).is_ne
    with pytest.raises(ValueError):
        is_ne_weight_game(w, EXAMPLE1, tol=-1)


def test_tied_pair_weight_families():
    for lam in np.linspace(0, 0.99, 12):
        for w in ([[1, 1], [lam, 0]], [[1, 1], [1, 0]], [[lam, 1], [1, 0]]):
            assert is_ne_weight_game(w, EXAMPLE1).is_ne
            assert is_equilibrium_weight(w, EXAMPLE1, 1.0)


def test_enumerate_tied_pair():
    opt = enumerate_optimal_partitions(EXAMPLE1)
    assert opt.as_set() == {P({A, B}, set()), P({B}, {A})}
    assert opt.optimal_value == pytest.approx(1.2)


def test_enumerate_fixed4x8_unique():
    opt = enumerate_optimal_partitions(TABLE1)
    assert opt.partitions == (TABLE1_OPTIMUM,)


def test_enumerate_single_agent():
    opt = enumerate_optimal_partitions(RewardMatrix([[0.2, 0.0, 0.5]]))
    assert opt.partitions == (P({0, 1, 2}),)


def test_enumerate_cap():
    with pytest.raises(EnumerationTooLarge):
        enumerate_optimal_partitions(TABLE1, cap=1000)


def test_optimal_set_rejects_duplicates():
    with pytest.raises(ValueError):
        OptimalSet((P({0}), P({0})), 1.0)


def test_enumerate_matches_brute_force():
    rng = np.random.default_rng(5)
    for k in range(60):
        f = tied_instance(rng, 3, 3) if k % 2 else RewardMatrix(rng.random((3, 3)))
        value, winners = oracles.brute_force_optimum(f.values)
        opt = enumerate_optimal_partitions(f)
        assert opt.optimal_value == pytest.approx(value)
        assert opt.as_set() == set(winners)
        for p in opt.partitions:
            assert objective(p, f) == pytest.approx(value)


def test_verify_inclusion():
    assert verify_inclusion(EXAMPLE1)
    assert verify_inclusion(TABLE1)
    for seed in range(100):
        assert verify_inclusion(generate_random_instance(seed, 3, 4))


def test_unique_ne():
    w = unique_ne(TABLE1)
    assert translated_support(w) == TABLE1_OPTIMUM
    assert is_ne_weight_game(w, TABLE1, tol=0).is_ne
    assert unique_ne(EXAMPLE1) is None
    assert unique_ne(RewardMatrix([[0.3, 0.1], [0.3, 0.2]])) is None


def test_unique_ne_support_is_the_optimum():
    for seed in range(40):
        f = generate_random_instance(seed, 3, 3)
        w = unique_ne(f)
        assert w is not None
        assert enumerate_optimal_partitions(f).partitions == (translated_support(w),)


def test_partition_checker_agrees_with_deviation_search():
    rng = np.random.default_rng(17)
    for _ in range(25):
        n, m = int(rng.integers(1, 4)), int(rng.integers(1, 3))
        f = tied_instance(rng, n, m) if n > 1 else RewardMatrix(rng.random((1, m)) + 0.1)
        fl = f.values.tolist()
        for prof in oracles.all_profiles(n, m):
            assert is_ne_partition_game(prof, f).is_ne == oracles.partition_ne_by_deviation(prof, fl)


def test_weight_checker_agrees_with_grid_search():
    rng = np.random.default_rng(23)
    levels = np.array(oracles.GRID)
    for _ in range(60):
        n, m = int(rng.integers(2, 4)), int(rng.integers(1, 3))
        f = tied_instance(rng, n, m)
        dom = f.values == f.values.max(axis=0)
        # half the samples are biased towards the equilibrium structure
        w = levels[rng.integers(0, 5, (n, m))]
        if rng.random() < 0.5:
            w = np.where(dom, np.maximum(w, rng.random((n, m)) < 0.5), 0.0)
        assert is_ne_weight_game(w, f).is_ne == oracles.weight_ne_by_grid(w, f.values.tolist())


def test_cross_game_equivalence_on_binary_weights():
    rng = np.random.default_rng(29)
    for _ in range(200):
        f = tied_instance(rng, 3, 3)
        w = (rng.random((3, 3)) < 0.5).astype(float)
        assert is_ne_weight_game(w, f).is_ne == is_ne_partition_game(translated_support(w), f).is_ne


def test_reassigning_to_non_dominating_agent_loses_value():
    rng = np.random.default_rng(31)
    for _ in range(30):
        f = tied_instance(rng, 3, 4)
        opt = enumerate_optimal_partitions(f)
        dom = f.values == f.values.max(axis=0)
        best = opt.partitions[0]
        owner = {q: i for i, s in enumerate(best) for q in s}
        for q in range(4):
            for j in np.flatnonzero(~dom[:, q]):
                moved = [set(s) for s in best]
                moved[owner[q]].discard(q)
                moved[j].add(q)
                assert objective(moved, f) < opt.optimal_value

"""Nash-equilibrium membership checks and optimal-partition enumeration.

The checkers use the O(nm) characterizations of both games (a task must be
held at full weight by some dominating agent, and never by a non-dominating
one).  Exhaustive deviation search lives in the test oracles only.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .model import (
    AllocationProfile,
    ModelError,
    as_rewards,
    check_assumptions,
    check_weights,
    dominating_mask,
    make_profile,
    objective,
)

HELD_BY_DOMINATING = "held-by-dominating"
NOT_HELD_BY_OTHERS = "not-held-by-non-dominating"


class EnumerationTooLarge(RuntimeError):
    pass


@dataclass(frozen=True)
class Violation:
    agent: int | None  # None when the property concerns the task as a whole
    task: int
    prop: str


@dataclass(frozen=True)
class NeReport:
    violations: tuple[Violation, ...] = ()

    @property
    def is_ne(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.is_ne


def _ne_report(held_full: np.ndarray, held_any: np.ndarray, dom: np.ndarray) -> NeReport:
    violations: list[Violation] = []
    n, m = dom.shape
    for q in range(m):
        if not np.any(held_full[:, q] & dom[:, q]):
            violations.append(Violation(None, q, HELD_BY_DOMINATING))
        for j in range(n):
            if held_any[j, q] and not dom[j, q]:
                violations.append(Violation(j, q, NOT_HELD_BY_OTHERS))
    return NeReport(tuple(violations))


def is_ne_partition_game(profile: Sequence[Iterable[int]], f) -> NeReport:
    f = as_rewards(f)
    profile = make_profile(profile, f.m)
    if len(profile) != f.n:
        raise ModelError(f"profile has {len(profile)} subsets, expected {f.n}")
    held = np.zeros(f.shape, dtype=bool)
    for i, s in enumerate(profile):
        held[i, list(s)] = True
    return _ne_report(held, held, dominating_mask(f))


def is_ne_weight_game(w, f, tol: float = 0.0) -> NeReport:
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    f = as_rewards(f)
    w = check_weights(w, f.shape)
    return _ne_report(np.abs(w - 1.0) <= tol, np.abs(w) > tol, dominating_mask(f))


def _canonical(profile: AllocationProfile) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(sorted(s)) for s in profile)


@dataclass(frozen=True)
class OptimalSet:
    partitions: tuple[AllocationProfile, ...]
    optimal_value: float
    _keys: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        keys = [_canonical(p) for p in self.partitions]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate partitions in optimal set")
        object.__setattr__(self, "_keys", frozenset(keys))

    def __contains__(self, profile) -> bool:
        return _canonical(make_profile(profile)) in self._keys

    def __len__(self) -> int:
        return len(self.partitions)

    def as_set(self) -> frozenset[AllocationProfile]:
        return frozenset(self.partitions)


def enumerate_optimal_partitions(f, cap: int = 10**7) -> OptimalSet:
    """All maximizers of the total value over partitions.

    Tasks decouple, so the maximizers are the Cartesian product of the
    per-task argmax sets.  ``cap`` bounds ``n**m``, the size of the full
    search space, so callers get the same guard as a brute-force search.
    """
    f = as_rewards(f)
    if f.n**f.m > cap:
        raise EnumerationTooLarge(f"n**m = {f.n}**{f.m} exceeds cap {cap}")
    dom = dominating_mask(f)
    choices = [np.flatnonzero(dom[:, q]).tolist() for q in range(f.m)]
    partitions = []
    for owners in itertools.product(*choices):
        subsets: list[set[int]] = [set() for _ in range(f.n)]
        for q, i in enumerate(owners):
            subsets[i].add(q)
        partitions.append(make_profile(subsets))
    value = objective(partitions[0], f)
    partitions.sort(key=_canonical)
    return OptimalSet(tuple(partitions), value)


def verify_inclusion(f, cap: int = 10**7) -> bool:
    """Every optimal partition is a partition-game equilibrium."""
    opt = enumerate_optimal_partitions(f, cap)
    return all(is_ne_partition_game(p, f).is_ne for p in opt.partitions)


def unique_ne(f) -> np.ndarray | None:
    """The single weight-game equilibrium when every task has a unique dominating agent."""
    f = as_rewards(f)
    if not check_assumptions(f).all_unique:
        return None
    return dominating_mask(f).astype(float)

"""Problem data and the two utility functions of the task-allocation games.

Indices are 0-based throughout the library: agents ``0..n-1`` and tasks
``0..m-1``.  Human-facing output (CSV files, reports) shifts to 1-based ids.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

AllocationProfile = tuple[frozenset[int], ...]


class ModelError(ValueError):
    """Raised for malformed problem data or out-of-range indices."""


@dataclass(frozen=True, eq=False)
class RewardMatrix:
    """Nonnegative ``n x m`` matrix of task values ``f[i, q]``.

    Optionally built from reward and importance factors, in which case
    ``f = r * phi`` is formed once at construction.
    """

    values: np.ndarray
    rewards: np.ndarray | None = field(default=None, repr=False)
    importance: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        f = np.array(self.values, dtype=float, copy=True)
        if f.ndim != 2 or f.shape[0] < 1 or f.shape[1] < 1:
            raise ModelError(f"reward matrix must be 2-D with n, m >= 1, got shape {f.shape}")
        if not np.all(np.isfinite(f)):
            raise ModelError("reward matrix has non-finite entries")
        if np.any(f < 0):
            raise ModelError("reward matrix has negative entries")
        f.setflags(write=False)
        object.__setattr__(self, "values", f)
        for name in ("rewards", "importance"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.array(arr, dtype=float, copy=True)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    @classmethod
    def from_factors(cls, rewards, importance) -> RewardMatrix:
        r = np.asarray(rewards, dtype=float)
        phi = np.asarray(importance, dtype=float)
        if r.shape != phi.shape:
            raise ModelError(f"factor shapes differ: {r.shape} vs {phi.shape}")
        if np.any(r < 0) or np.any(phi < 0):
            raise ModelError("reward factors must be nonnegative")
        return cls(r * phi, rewards=r, importance=phi)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def as_rewards(f) -> RewardMatrix:
    return f if isinstance(f, RewardMatrix) else RewardMatrix(f)


def check_weights(w, shape: tuple[int, int] | None = None) -> np.ndarray:
    """Validate a weight matrix and return it as a float array."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 2:
        raise ModelError(f"weight matrix must be 2-D, got shape {w.shape}")
    if shape is not None and w.shape != tuple(shape):
        raise ModelError(f"weight matrix shape {w.shape} does not match {tuple(shape)}")
    if not np.all(np.isfinite(w)) or np.any(w < 0) or np.any(w > 1):
        raise ModelError("weights must lie in [0, 1]")
    return w


def _check_agent(i: int, n: int) -> None:
    if not 0 <= i < n:
        raise ModelError(f"agent index {i} out of range for n={n}")


def _check_task(q: int, m: int) -> None:
    if not 0 <= q < m:
        raise ModelError(f"task index {q} out of range for m={m}")


def make_profile(subsets: Iterable[Iterable[int]], m: int | None = None) -> AllocationProfile:
    profile = tuple(frozenset(int(q) for q in s) for s in subsets)
    if m is not None:
        for s in profile:
            for q in s:
                _check_task(q, m)
    return profile


def is_partition(profile: Sequence[Iterable[int]], m: int) -> bool:
    """True when every task is held by exactly one agent."""
    seen: list[int] = []
    for s in profile:
        seen.extend(s)
    return sorted(seen) == list(range(m))


def _check_profile(profile: Sequence[frozenset[int]], f: RewardMatrix) -> None:
    if len(profile) != f.n:
        raise ModelError(f"profile has {len(profile)} subsets, expected {f.n}")
    for s in profile:
        for q in s:
            _check_task(q, f.m)


def objective(partition: Sequence[Iterable[int]], f) -> float:
    """Total value ``J`` of a partition: sum of ``f[i, q]`` over assigned pairs."""
    f = as_rewards(f)
    partition = make_profile(partition)
    _check_profile(partition, f)
    if not is_partition(partition, f.m):
        raise ModelError("profile is not a partition of the task set")
    return float(sum(f.values[i, q] for i, s in enumerate(partition) for q in s))


def partition_utility(i: int, profile: Sequence[Iterable[int]], f) -> float:
    """Utility of agent ``i`` in the partition game.

    Each held task pays ``f[i, q]`` minus the best competing holder's value;
    an uncontested task pays ``f[i, q]`` in full.
    """
    f = as_rewards(f)
    profile = make_profile(profile)
    _check_agent(i, f.n)
    _check_profile(profile, f)
    total = 0.0
    for q in profile[i]:
        rivals = [f.values[j, q] for j in range(f.n) if j != i and q in profile[j]]
        total += f.values[i, q] - (max(rivals) if rivals else 0.0)
    return float(total)


def competitor_max(w: np.ndarray, f: np.ndarray) -> np.ndarray:
    """``out[i, q] = max_{j != i} f[j, q] * w[j, q]`` (0 when ``n == 1``).

    Uses the top-two trick so the whole matrix costs O(nm).
    """
    fw = f * w
    n = fw.shape[0]
    if n == 1:
        return np.zeros_like(fw)
    order = np.argsort(-fw, axis=0, kind="stable")
    top = np.take_along_axis(fw, order[:1], axis=0)[0]
    second = np.take_along_axis(fw, order[1:2], axis=0)[0]
    out = np.broadcast_to(top, fw.shape).copy()
    cols = np.arange(fw.shape[1])
    out[order[0], cols] = second
    return out


def weight_utility(i: int, w, f) -> float:
    """Utility of agent ``i`` in the weight game."""
    f = as_rewards(f)
    _check_agent(i, f.n)
    w = check_weights(w, f.shape)
    rival = competitor_max(w, f.values)[i]
    return float(np.sum(f.values[i] * w[i] - rival * w[i]))


def gradients(w, f) -> np.ndarray:
    """All partial derivatives ``dU_i/dw[i, q]`` at once, shape ``(n, m)``."""
    f = as_rewards(f)
    w = check_weights(w, f.shape)
    return f.values - competitor_max(w, f.values)


def gradient(i: int, q: int, w, f) -> float:
    f = as_rewards(f)
    _check_agent(i, f.n)
    _check_task(q, f.m)
    w = check_weights(w, f.shape)
    rivals = [f.values[j, q] * w[j, q] for j in range(f.n) if j != i]
    return float(f.values[i, q] - (max(rivals) if rivals else 0.0))


def dominating_agents(q: int, f) -> frozenset[int]:
    """Agents whose value for task ``q`` is maximal.  Ties are kept."""
    f = as_rewards(f)
    _check_task(q, f.m)
    col = f.values[:, q]
    return frozenset(int(i) for i in np.flatnonzero(col == col.max()))


def dominating_mask(f) -> np.ndarray:
    """Boolean ``(n, m)`` mask of dominating (agent, task) pairs."""
    vals = as_rewards(f).values
    return vals == vals.max(axis=0, keepdims=True)


def translated_support(w, tol: float = 0.0) -> AllocationProfile:
    """Per agent, the tasks whose weight equals 1 (within ``tol``)."""
    w = check_weights(w)
    return tuple(frozenset(int(q) for q in np.flatnonzero(np.abs(row - 1.0) <= tol)) for row in w)


def profile_to_weights(profile: Sequence[Iterable[int]], m: int) -> np.ndarray:
    w = np.zeros((len(profile), m))
    for i, s in enumerate(profile):
        for q in s:
            w[i, q] = 1.0
    return w


def _submax(values: np.ndarray) -> float:
    top = values.max()
    lower = values[values < top]
    return float(lower.max()) if lower.size else float(top)


@dataclass(frozen=True)
class TaskAssumptionReport:
    task: int
    dominating: frozenset[int]
    all_dominating: bool  # violates the non-trivial-assignment assumption
    unique: bool
    spread: float  # max - min over agents
    half_gap: float  # (max - submax) / 2; zero under ties
    margin: float  # max - best non-identical rival; 0 when not unique


@dataclass(frozen=True)
class AssumptionReport:
    tasks: tuple[TaskAssumptionReport, ...]

    @property
    def violations(self) -> list[int]:
        return [t.task for t in self.tasks if t.all_dominating]

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def all_unique(self) -> bool:
        return all(t.unique for t in self.tasks)

    @property
    def delta(self) -> float:
        """Smallest dominance margin over tasks (0 if any task is tied)."""
        return min(t.margin for t in self.tasks)


def check_assumptions(f) -> AssumptionReport:
    """Per-task report on dominance structure and gap quantities."""
    f = as_rewards(f)
    rows = []
    for q in range(f.m):
        col = f.values[:, q]
        dom = dominating_agents(q, f)
        unique = len(dom) == 1
        if f.n == 1:
            margin = float(col[0])
        elif unique:
            margin = float(col.max() - np.delete(col, next(iter(dom))).max())
        else:
            margin = 0.0
        rows.append(
            TaskAssumptionReport(
                task=q,
                dominating=dom,
                all_dominating=len(dom) == f.n,
                unique=unique,
                spread=float(col.max() - col.min()),
                half_gap=0.5 * (float(col.max()) - _submax(col)),
                margin=margin,
            )
        )
    return AssumptionReport(tuple(rows))

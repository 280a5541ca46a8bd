"""Directed communication graphs and max/submax agreement."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class DirectedGraph:
    """Graph on nodes ``0..n-1``; arc ``(j, i)`` means ``j`` sends to ``i``."""

    n: int
    arcs: frozenset[tuple[int, int]]

    def __init__(self, n: int, arcs: Iterable[tuple[int, int]] = ()):
        if n < 1:
            raise GraphError("graph needs at least one node")
        clean = set()
        for j, i in arcs:
            j, i = int(j), int(i)
            if not (0 <= j < n and 0 <= i < n):
                raise GraphError(f"arc ({j}, {i}) references a node outside 0..{n - 1}")
            if i != j:
                clean.add((j, i))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "arcs", frozenset(clean))

    @classmethod
    def cycle(cls, n: int) -> DirectedGraph:
        return cls(n, [(i, (i + 1) % n) for i in range(n)])

    @classmethod
    def complete(cls, n: int) -> DirectedGraph:
        return cls(n, [(j, i) for j in range(n) for i in range(n) if i != j])

    @classmethod
    def line(cls, n: int) -> DirectedGraph:
        """Bidirectional path ``0 - 1 - ... - n-1``."""
        arcs = [(i, i + 1) for i in range(n - 1)]
        return cls(n, arcs + [(i + 1, i) for i in range(n - 1)])

    def in_neighbors(self, i: int, closed: bool = False) -> frozenset[int]:
        self._check(i)
        nbrs = {j for j, k in self.arcs if k == i}
        if closed:
            nbrs.add(i)
        return frozenset(nbrs)

    def out_neighbors(self, i: int) -> frozenset[int]:
        self._check(i)
        return frozenset(k for j, k in self.arcs if j == i)

    def closed_adjacency(self) -> np.ndarray:
        """``A[i, j]`` is True when ``j`` is in the closed in-neighborhood of ``i``."""
        a = np.eye(self.n, dtype=bool)
        for j, i in self.arcs:
            a[i, j] = True
        return a

    def _check(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise GraphError(f"node {i} outside 0..{self.n - 1}")

    def _distances_from(self, s: int) -> list[int | None]:
        dist: list[int | None] = [None] * self.n
        dist[s] = 0
        out = {i: [] for i in range(self.n)}
        for j, i in self.arcs:
            out[j].append(i)
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in out[u]:
                if dist[v] is None:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist

    def is_strongly_connected(self) -> bool:
        return all(d is not None for s in range(self.n) for d in self._distances_from(s))

    def diameter(self) -> int:
        best = 0
        for s in range(self.n):
            dist = self._distances_from(s)
            if any(d is None for d in dist):
                raise GraphError("diameter is undefined: graph is not strongly connected")
            best = max(best, max(dist))
        return best


def submax(values: Iterable[float]) -> float:
    """Largest value strictly below the maximum; the maximum itself if all are equal."""
    vals = list(values)
    if not vals:
        raise ValueError("submax of an empty collection")
    top = max(vals)
    lower = [v for v in vals if v < top]
    return max(lower) if lower else top


def neighborhood_max(adj: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Row-wise max over closed in-neighborhoods; ``x`` has shape ``(n, m)``."""
    return np.where(adj[:, :, None], x[None, :, :], -np.inf).max(axis=1)


def neighborhood_submax(adj: np.ndarray, s: np.ndarray, *own: np.ndarray) -> np.ndarray:
    """Submax of ``{s_j : j in closed nbhd of i}`` plus the node's ``own`` values."""
    pool = np.where(adj[:, :, None], s[None, :, :], -np.inf)
    if own:
        pool = np.concatenate([pool, np.stack(own, axis=1)], axis=1)
    top = pool.max(axis=1, keepdims=True)
    below = np.where(pool < top, pool, -np.inf).max(axis=1)
    return np.where(np.isneginf(below), top[:, 0, :], below)


@dataclass(frozen=True)
class AgreementState:
    M: np.ndarray
    S: np.ndarray
    round: int = 0

    @classmethod
    def initial(cls, v) -> AgreementState:
        v = np.asarray(v, dtype=float)
        return cls(v.copy(), v.copy(), 0)


def _as_columns(x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    return (x[:, None], True) if x.ndim == 1 else (x, False)


def agreement_round(g: DirectedGraph, state: AgreementState, v) -> AgreementState:
    """One synchronous max/submax round.

    ``M_i <- max_{j in N_i+} M_j`` and ``S_i <- submax({S_j}_{N_i+} + {M_i, v_i})``.
    Values may be per-node vectors (shape ``(n,)``) or ``(n, m)`` for m
    independent agreements.
    """
    M, flat = _as_columns(state.M)
    S, _ = _as_columns(state.S)
    vv, _ = _as_columns(v)
    if not (M.shape == S.shape == vv.shape) or M.shape[0] != g.n:
        raise GraphError(f"state/value shapes {M.shape}, {S.shape}, {vv.shape} do not match n={g.n}")
    adj = g.closed_adjacency()
    M2 = neighborhood_max(adj, M)
    S2 = neighborhood_submax(adj, S, M, vv)
    if flat:
        M2, S2 = M2[:, 0], S2[:, 0]
    return AgreementState(M2, S2, state.round + 1)


def run_agreement(g: DirectedGraph, v, rounds: int) -> list[AgreementState]:
    """History of agreement states ``[state(0), ..., state(rounds)]``."""
    if not g.is_strongly_connected():
        raise GraphError("agreement requires a strongly connected graph")
    state = AgreementState.initial(v)
    history = [state]
    for _ in range(rounds):
        state = agreement_round(g, state, v)
        history.append(state)
    return history


def agreement_deadlines_hold(g: DirectedGraph, history: Sequence[AgreementState], v) -> tuple[bool, bool]:
    """Check max agreement from round ``diam`` and submax agreement from ``2 * diam``."""
    d = g.diameter()
    vv = np.asarray(v, dtype=float)
    top = vv.max(axis=0)
    second = np.apply_along_axis(submax, 0, vv) if vv.ndim > 1 else submax(vv)
    max_ok = all(np.all(st.M == top) for st in history[d:])
    sub_ok = all(np.all(st.S == second) for st in history[2 * d :])
    return max_ok, sub_ok

"""Distributed PBRAG with max/submax agreement and periodic reward injection.

Each agent keeps, per task, a weight ``w``, agreement registers ``M`` and
``S`` and an injected sample ``e``.  Every ``T`` rounds the registers are
overwritten with the agent's latest reward sample and the agreement restarts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .graph import DirectedGraph, GraphError, neighborhood_max, neighborhood_submax
from .model import ModelError, RewardMatrix, as_rewards, check_assumptions, check_weights, dominating_mask, translated_support


def sigma_sw(m, z, t: int, T: int):
    """``z`` on injection rounds (``t mod T == 0``), otherwise ``m``."""
    if T < 1:
        raise ValueError("period T must be >= 1")
    return z if t % T == 0 else m


# -- reward sequences -------------------------------------------------------


class RewardSequence(Protocol):
    shape: tuple[int, int]

    def sample(self, t: int) -> np.ndarray: ...


@dataclass(frozen=True)
class ConstantRewards:
    f: RewardMatrix

    @property
    def shape(self) -> tuple[int, int]:
        return self.f.shape

    def sample(self, t: int) -> np.ndarray:
        return self.f.values


@dataclass(frozen=True)
class DampedCosineRewards:
    """``z(t) = f + a * cos(b * t) * exp(-c * t)``, converging to ``f``."""

    f: RewardMatrix
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self) -> None:
        for name in ("a", "b", "c"):
            arr = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), self.f.shape).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(self.c < 0):
            raise ModelError("decay rates must be nonnegative")

    @classmethod
    def from_seed(cls, f, seed: int, b_max: float = 10.0, c_max: float = 1.0) -> DampedCosineRewards:
        """Amplitudes ``a ~ U[0, f]``, frequencies ``b ~ U[0, b_max]``, decays ``c ~ U[0, c_max]``."""
        f = as_rewards(f)
        rng = np.random.default_rng(seed)
        a = rng.uniform(0.0, 1.0, f.shape) * f.values
        b = rng.uniform(0.0, b_max, f.shape)
        c = rng.uniform(0.0, c_max, f.shape)
        return cls(f, a, b, c)

    @property
    def shape(self) -> tuple[int, int]:
        return self.f.shape

    def sample(self, t: int) -> np.ndarray:
        return self.f.values + self.a * np.cos(self.b * t) * np.exp(-self.c * t)


# -- step-size schedules ----------------------------------------------------


class StepSchedule(Protocol):
    def at(self, t: int) -> np.ndarray: ...


@dataclass(frozen=True)
class ConstantSchedule:
    alpha: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.alpha, dtype=float)
        if not np.all(np.isfinite(a)) or np.any(a <= 0):
            raise ModelError("constant step sizes must be finite and positive")
        object.__setattr__(self, "alpha", a)

    def at(self, t: int) -> np.ndarray:
        return self.alpha


@dataclass(frozen=True)
class TwoPhaseSchedule:
    """Small steps ``alpha0/(k+1)`` while agreement settles, then ``beta0*(k+1)``.

    Period ``k = t // T``.  The first ``2 * d`` rounds of each period use the
    shrinking step, the remaining ``T - 2d`` rounds the growing one.
    """

    T: int
    d: int
    alpha0: float | np.ndarray = 1.0
    beta0: float | np.ndarray = 1.0

    def __post_init__(self) -> None:
        if self.T <= 2 * self.d + 1:
            raise ModelError(f"two-phase schedule needs T > 2d + 1 (T={self.T}, d={self.d})")
        if np.any(np.asarray(self.alpha0) <= 0) or np.any(np.asarray(self.beta0) <= 0):
            raise ModelError("alpha0 and beta0 must be positive")

    def in_agreement_phase(self, t: int) -> bool:
        return t % self.T < 2 * self.d

    def at(self, t: int) -> np.ndarray:
        k = t // self.T
        if self.in_agreement_phase(t):
            return np.asarray(self.alpha0, dtype=float) / (k + 1)
        return np.asarray(self.beta0, dtype=float) * (k + 1)


# -- parameter derivation ---------------------------------------------------


@dataclass(frozen=True)
class DpbragParams:
    T: int
    eps: float
    nu: float
    d: int
    alpha: np.ndarray  # maximal admissible constant step per (agent, task)
    spread: np.ndarray  # max - min per task
    half_gap: np.ndarray  # (max - submax) / 2 per task
    mu: float

    @property
    def alpha_min(self) -> float:
        return float(self.alpha.min())

    def schedule(self) -> ConstantSchedule:
        return ConstantSchedule(self.alpha)


def derive_constant_params(f, d: int, eps: float, nu: float, T_cap: int = 10**7) -> DpbragParams:
    """Largest admissible constant steps and the smallest admissible period.

    ``alpha[i, q] = eps / (2 d spread_q)`` and ``T`` is the least integer with
    ``T > 2d + 1/(alpha_min * mu) + 1`` where
    ``mu = (1 - nu) * min_q half_gap_q``.
    """
    if not 0 < eps < 1:
        raise ModelError("eps must lie in (0, 1)")
    if not 0 < nu < 1:
        raise ModelError("nu must lie in (0, 1)")
    if d < 1:
        raise ModelError("diameter surrogate d must be >= 1")
    f = as_rewards(f)
    report = check_assumptions(f)
    spread = np.array([t.spread for t in report.tasks])
    half_gap = np.array([t.half_gap for t in report.tasks])
    flat = [int(q) for q in np.flatnonzero(spread <= 0)]
    if flat:
        raise ModelError(f"all agents tie on tasks {flat}: spread and half-gap are zero")
    alpha = np.broadcast_to(eps / (2 * d * spread), f.shape).copy()
    mu = (1 - nu) * float(half_gap.min())
    bound = 2 * d + 1.0 / (float(alpha.min()) * mu) + 1
    T = math.floor(bound) + 1
    if T > T_cap:
        raise ModelError(f"required period {T} exceeds cap {T_cap}")
    return DpbragParams(T=T, eps=eps, nu=nu, d=d, alpha=alpha, spread=spread, half_gap=half_gap, mu=mu)


# -- dynamics ---------------------------------------------------------------


@dataclass(frozen=True)
class DpbragState:
    t: int
    w: np.ndarray
    M: np.ndarray
    S: np.ndarray
    e: np.ndarray
    z: np.ndarray  # reward sample z(t)


def initial_state(w0, seq: RewardSequence) -> DpbragState:
    """Round 0 is an injection round, so ``M = S = e = z(0)``."""
    w = check_weights(w0, seq.shape).copy()
    z = np.array(seq.sample(0), dtype=float)
    return DpbragState(0, w, z.copy(), z.copy(), z.copy(), z)


def dpbrag_round(
    state: DpbragState,
    graph: DirectedGraph,
    seq: RewardSequence,
    schedule: StepSchedule,
    T: int,
    adj: np.ndarray | None = None,
) -> DpbragState:
    """Advance every agent by one synchronous round using the round-``t`` snapshot."""
    if T < 1:
        raise ValueError("period T must be >= 1")
    if state.w.shape != seq.shape or state.w.shape[0] != graph.n:
        raise GraphError(f"state shape {state.w.shape} does not match graph n={graph.n} / rewards {seq.shape}")
    if adj is None:
        adj = graph.closed_adjacency()
    t = state.t
    gamma = schedule.at(t)
    w = np.clip(state.w + gamma * (state.z - 0.5 * (state.M + state.S)), 0.0, 1.0)
    z_next = np.array(seq.sample(t + 1), dtype=float)
    if (t + 1) % T == 0:
        e = z_next.copy()
        M = e.copy()
        S = e.copy()
    else:
        e = state.e
        M = neighborhood_max(adj, state.M)
        S = neighborhood_submax(adj, state.S, state.M, state.e)
    return DpbragState(t + 1, w, M, S, e, z_next)


@dataclass
class DpbragRun:
    f: RewardMatrix
    T: int
    d: int
    t: np.ndarray
    w: np.ndarray  # (rounds + 1, n, m)
    M: np.ndarray
    S: np.ndarray
    e: np.ndarray
    z: np.ndarray
    messages_per_round: int
    values_per_round: int
    within_hypotheses: bool
    notes: list[str] = field(default_factory=list)

    @property
    def rounds(self) -> int:
        return len(self.t) - 1

    @property
    def final(self) -> np.ndarray:
        return self.w[-1]

    @property
    def total_messages(self) -> int:
        return self.messages_per_round * self.rounds

    def allocation(self, t: int = -1, tol: float = 0.0):
        return translated_support(self.w[t], tol)

    def allocation_stable_from(self, tol: float = 0.0) -> int:
        """First round from which ``C(W(t))`` no longer changes until the end of the run."""
        full = np.abs(self.w - 1.0) <= tol
        changed = np.any(full[1:] != full[:-1], axis=(1, 2))
        idx = np.flatnonzero(changed)
        return 0 if idx.size == 0 else int(idx[-1]) + 1

    def tau(self, eps: float) -> int | None:
        """First round after which dominating weights are exactly 1 and all others are ``<= eps``.

        ``None`` when the final round itself violates either property.
        """
        dom = dominating_mask(self.f)
        ok = np.all(np.where(dom, self.w == 1.0, self.w <= eps), axis=(1, 2))
        if not ok[-1]:
            return None
        bad = np.flatnonzero(~ok)
        return 0 if bad.size == 0 else int(bad[-1]) + 1

    def first_hit(self, agent: int, task: int, value: float = 1.0) -> int | None:
        hits = np.flatnonzero(self.w[:, agent, task] >= value)
        return int(hits[0]) if hits.size else None

    def peak_non_dominating(self) -> float:
        dom = dominating_mask(self.f)
        return float(np.max(np.where(dom, 0.0, self.w)))


def run_dpbrag(
    w0,
    f,
    graph: DirectedGraph,
    seq: RewardSequence,
    schedule: StepSchedule,
    T: int,
    max_rounds: int,
    d: int | None = None,
) -> DpbragRun:
    """Simulate ``max_rounds`` rounds and keep the full per-round log.

    The run is never cut short: whether the allocation has settled is read
    off the log afterwards (:meth:`DpbragRun.allocation_stable_from`,
    :meth:`DpbragRun.tau`).
    """
    f = as_rewards(f)
    if not graph.is_strongly_connected():
        raise GraphError("d-PBRAG requires a strongly connected communication graph")
    if graph.n != f.n or seq.shape != f.shape:
        raise GraphError("graph, reward sequence and reward matrix sizes disagree")
    if T < 2:
        raise ModelError("period T must be >= 2")
    if d is None:
        d = graph.diameter()

    notes = []
    within = check_assumptions(f).ok
    if not within:
        notes.append("some task has all agents tied; outside the convergence hypotheses")
    if isinstance(schedule, TwoPhaseSchedule) and schedule.d != d:
        notes.append(f"schedule uses d={schedule.d}, run uses d={d}")

    adj = graph.closed_adjacency()
    state = initial_state(w0, seq)
    n, m = f.shape
    shape = (max_rounds + 1, n, m)
    log = {k: np.empty(shape) for k in ("w", "M", "S", "e", "z")}
    for r in range(max_rounds + 1):
        for k in log:
            log[k][r] = getattr(state, k)
        if r < max_rounds:
            state = dpbrag_round(state, graph, seq, schedule, T, adj)

    return DpbragRun(
        f=f,
        T=T,
        d=d,
        t=np.arange(max_rounds + 1),
        messages_per_round=len(graph.arcs),
        values_per_round=2 * m * len(graph.arcs),
        within_hypotheses=within,
        notes=notes,
        **log,
    )

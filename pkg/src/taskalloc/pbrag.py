"""Centralized projected best-response gradient ascent on the weight game."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelError, as_rewards, check_assumptions, check_weights, competitor_max


def clamp01(x):
    """Project onto ``[0, 1]``.  Works elementwise on arrays."""
    if not np.all(np.isfinite(x)):
        raise ValueError("clamp01 requires finite input")
    if np.ndim(x) == 0:
        return float(max(0.0, min(float(x), 1.0)))
    return np.clip(x, 0.0, 1.0)


def as_step_sizes(gamma, shape: tuple[int, int]) -> np.ndarray:
    """Broadcast a scalar or matrix step size to ``shape`` and validate it."""
    g = np.broadcast_to(np.asarray(gamma, dtype=float), shape).copy()
    if not np.all(np.isfinite(g)) or np.any(g <= 0):
        raise ModelError("step sizes must be finite and strictly positive")
    return g


def pbrag_step(w, f, gamma) -> np.ndarray:
    """One synchronous update; every gradient is read from the input state."""
    f = as_rewards(f)
    w = check_weights(w, f.shape)
    g = as_step_sizes(gamma, f.shape)
    grad = f.values - competitor_max(w, f.values)
    return np.clip(w + g * grad, 0.0, 1.0)


def is_equilibrium_weight(w, f, gamma, tol: float = 0.0) -> bool:
    w = check_weights(w)
    return float(np.max(np.abs(pbrag_step(w, f, gamma) - w))) <= tol


@dataclass
class Trajectory:
    states: list[np.ndarray]
    converged_at: int | None

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def rounds(self) -> int:
        return len(self.states) - 1


def run_pbrag(
    w0,
    f,
    gamma,
    max_rounds: int = 10_000,
    change_tol: float = 1e-12,
) -> Trajectory:
    """Iterate :func:`pbrag_step` from ``w0``.

    ``converged_at`` is the first round ``t`` with ``W(t+1) == W(t)`` exactly.
    A run whose per-round change drops to ``change_tol`` without an exact
    repeat stops early with ``converged_at=None``; asymptotic convergence is
    what happens when a task has tied dominating agents.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    f = as_rewards(f)
    g = as_step_sizes(gamma, f.shape)
    w = check_weights(w0, f.shape).copy()
    states = [w]
    for t in range(max_rounds):
        nxt = np.clip(w + g * (f.values - competitor_max(w, f.values)), 0.0, 1.0)
        if np.array_equal(nxt, w):
            return Trajectory(states, t)
        states.append(nxt)
        if float(np.max(np.abs(nxt - w))) <= change_tol:
            break
        w = nxt
    return Trajectory(states, None)


def finite_time_bound(f, gamma) -> int:
    """Round after which the dynamics are frozen, ``2 * ceil(1 / (gamma_min * delta))``.

    Only defined when every task has a unique dominating agent.
    """
    f = as_rewards(f)
    report = check_assumptions(f)
    tied = [t.task for t in report.tasks if not t.unique]
    if tied:
        raise ModelError(f"tasks without a unique dominating agent: {tied}")
    delta = report.delta
    if delta <= 0:
        raise ModelError("dominance margin must be positive")
    g = as_step_sizes(gamma, f.shape)
    ratio = 1.0 / (float(g.min()) * delta)
    # absorb rounding so that gamma = 1/delta gives exactly 1
    return 2 * math.ceil(ratio * (1.0 - 1e-12))


def two_step_step_size(f) -> float:
    """Step size ``2 / delta``, large enough for the two-round bound."""
    f = as_rewards(f)
    delta = check_assumptions(f).delta
    if delta <= 0:
        raise ModelError("two-step preset needs a unique dominating agent per task")
    return 2.0 / delta

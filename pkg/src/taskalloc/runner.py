"""Execute scenarios, write trajectory CSV and JSON reports, replay verdicts."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .dpbrag import DpbragRun, run_dpbrag
from .model import AllocationProfile, RewardMatrix, check_assumptions, translated_support
from .nash import EnumerationTooLarge, enumerate_optimal_partitions, is_ne_partition_game, is_ne_weight_game
from .pbrag import Trajectory, finite_time_bound, run_pbrag
from .scenario import Scenario, ScenarioError

log = logging.getLogger(__name__)

CSV_HEADER = ["t", "agent", "task", "w", "M", "S", "e", "z"]
NE_WEIGHT_TOL = 1e-6

EXIT_OK = 0
EXIT_BUDGET = 1
EXIT_INVALID = 2


def fmt(x: float) -> str:
    return f"{x:.17g}"


def profile_to_json(profile: AllocationProfile) -> list[list[int]]:
    """1-based sorted task lists per agent."""
    return [sorted(q + 1 for q in s) for s in profile]


@dataclass
class RunReport:
    scenario: str
    algorithm: str
    n: int
    m: int
    rounds: int
    final_allocation: list[list[int]]
    ne_partition_game: bool
    ne_weight_game: bool
    converged: bool
    converged_at: int | None = None
    finite_time_bound: int | None = None
    tau: int | None = None
    eps: float | None = None
    allocation_stable_from: int | None = None
    dominating_first_hit: dict[str, int | None] = field(default_factory=dict)
    peak_non_dominating: float | None = None
    period: int | None = None
    diameter: int | None = None
    derived_params: dict[str, Any] | None = None
    messages_per_round: int | None = None
    values_per_round: int | None = None
    total_messages: int | None = None
    within_hypotheses: bool = True
    assumption_violations: list[int] = field(default_factory=list)
    optimal_partitions: list[list[list[int]]] | None = None
    optimal_value: float | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.converged else EXIT_BUDGET

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _common(scn: Scenario, f: RewardMatrix, final: np.ndarray) -> dict[str, Any]:
    tol = scn.tolerance
    alloc = translated_support(final, tol)
    out: dict[str, Any] = {
        "scenario": scn.name,
        "algorithm": scn.algorithm,
        "n": f.n,
        "m": f.m,
        "final_allocation": profile_to_json(alloc),
        "ne_partition_game": is_ne_partition_game(alloc, f).is_ne,
        "ne_weight_game": is_ne_weight_game(final, f, NE_WEIGHT_TOL).is_ne,
        "assumption_violations": [q + 1 for q in check_assumptions(f).violations],
    }
    try:
        opt = enumerate_optimal_partitions(f)
        out["optimal_partitions"] = [profile_to_json(p) for p in opt.partitions]
        out["optimal_value"] = opt.optimal_value
    except EnumerationTooLarge:
        pass
    return out


def _run_pbrag(scn: Scenario, f: RewardMatrix) -> tuple[RunReport, Trajectory]:
    gamma = scn.step_sizes(f)
    traj = run_pbrag(scn.initial_weights(f.shape), f, gamma, scn.max_rounds)
    common = _common(scn, f, traj.final)
    bound = None
    if check_assumptions(f).all_unique:
        bound = finite_time_bound(f, gamma)
    report = RunReport(
        rounds=traj.rounds,
        converged=traj.converged_at is not None or common["ne_weight_game"],
        converged_at=traj.converged_at,
        finite_time_bound=bound,
        within_hypotheses=not common["assumption_violations"],
        **common,
    )
    return report, traj


def _run_dpbrag(scn: Scenario, f: RewardMatrix) -> tuple[RunReport, DpbragRun]:
    g = scn.graph(f.n)
    d = scn.diameter_surrogate(g)
    schedule, T, params = scn.schedule(f, d)
    seq = scn.reward_sequence(f)
    run = run_dpbrag(scn.initial_weights(f.shape), f, g, seq, schedule, T, scn.max_rounds, d=d)
    common = _common(scn, f, run.final)
    eps = scn.raw.get("eps", params.eps if params else None)
    tau = run.tau(eps) if eps is not None else None
    stable = run.allocation_stable_from(scn.tolerance)
    dom = check_assumptions(f)
    hits = {}
    for t in dom.tasks:
        for i in sorted(t.dominating):
            hits[f"{i + 1},{t.task + 1}"] = run.first_hit(i, t.task)
    derived = None
    if params is not None:
        derived = {
            "T": params.T,
            "eps": params.eps,
            "nu": params.nu,
            "d": params.d,
            "alpha_min": params.alpha_min,
            "mu": params.mu,
            "spread": params.spread.tolist(),
            "half_gap": params.half_gap.tolist(),
        }
    converged = common["ne_partition_game"] and stable <= run.rounds - T
    if eps is not None:
        converged = converged and tau is not None
    report = RunReport(
        rounds=run.rounds,
        converged=converged,
        tau=tau,
        eps=eps,
        allocation_stable_from=stable,
        dominating_first_hit=hits,
        peak_non_dominating=run.peak_non_dominating(),
        period=T,
        diameter=d,
        derived_params=derived,
        messages_per_round=run.messages_per_round,
        values_per_round=run.values_per_round,
        total_messages=run.total_messages,
        within_hypotheses=run.within_hypotheses,
        notes=run.notes,
        **common,
    )
    return report, run


def execute(scn: Scenario) -> tuple[RunReport, Trajectory | DpbragRun]:
    """Run a scenario in memory.  Raises :class:`ScenarioError` on bad input."""
    f = scn.rewards()
    if scn.algorithm == "pbrag":
        return _run_pbrag(scn, f)
    return _run_dpbrag(scn, f)


def write_trajectory_csv(path: Path, result: Trajectory | DpbragRun) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        if isinstance(result, Trajectory):
            for t, w in enumerate(result.states):
                for (i, q), x in np.ndenumerate(w):
                    writer.writerow([t, i + 1, q + 1, fmt(x), "", "", "", ""])
            return
        for t in result.t:
            for (i, q), x in np.ndenumerate(result.w[t]):
                writer.writerow(
                    [t, i + 1, q + 1, fmt(x)]
                    + [fmt(getattr(result, k)[t, i, q]) for k in ("M", "S", "e", "z")]
                )


def read_trajectory_csv(path: Path) -> dict[str, np.ndarray]:
    """Load a trajectory CSV into arrays of shape ``(rounds + 1, n, m)``; centralized runs get NaN registers."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: empty trajectory")
    T = max(int(r["t"]) for r in rows) + 1
    n = max(int(r["agent"]) for r in rows)
    m = max(int(r["task"]) for r in rows)
    out = {k: np.full((T, n, m), np.nan) for k in ("w", "M", "S", "e", "z")}
    for r in rows:
        t, i, q = int(r["t"]), int(r["agent"]) - 1, int(r["task"]) - 1
        for k in out:
            if r[k] != "":
                out[k][t, i, q] = float(r[k])
    return out


def replay_verdicts(csv_path: Path, f: RewardMatrix, tolerance: float) -> dict[str, Any]:
    """Recompute the report's verdicts from a trajectory CSV alone."""
    w = read_trajectory_csv(csv_path)["w"]
    final = w[-1]
    alloc = translated_support(final, tolerance)
    return {
        "final_allocation": profile_to_json(alloc),
        "ne_partition_game": is_ne_partition_game(alloc, f).is_ne,
        "ne_weight_game": is_ne_weight_game(final, f, NE_WEIGHT_TOL).is_ne,
        "rounds": w.shape[0] - 1,
    }


def run_scenario(scn: Scenario, out_dir: str | Path | None = None) -> RunReport:
    """Run, then write ``<name>.csv`` and ``<name>.json`` under ``out_dir`` if given."""
    report, result = execute(scn)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_trajectory_csv(out / f"{scn.name}.csv", result)
        (out / f"{scn.name}.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
        log.info("wrote %s.csv and %s.json to %s", scn.name, scn.name, out)
    return report


__all__ = ["RunReport", "ScenarioError", "execute", "run_scenario", "replay_verdicts", "read_trajectory_csv"]

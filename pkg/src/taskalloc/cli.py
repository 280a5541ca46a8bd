"""Command-line entry point: ``taskalloc <verb> ...``.

Exit codes: 0 converged or verified, 1 round budget exhausted or check
failed, 2 invalid input or assumption violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import scenario as scenario_mod
from .dpbrag import derive_constant_params
from .graph import DirectedGraph
from .model import ModelError, RewardMatrix, check_weights, translated_support
from .nash import EnumerationTooLarge, enumerate_optimal_partitions, is_ne_partition_game, is_ne_weight_game
from .pbrag import finite_time_bound
from .runner import EXIT_BUDGET, EXIT_INVALID, EXIT_OK, profile_to_json, run_scenario
from .scenario import ScenarioError

log = logging.getLogger("taskalloc")


def _load_matrix(path: str) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def _rewards(args) -> RewardMatrix:
    if args.rewards:
        return RewardMatrix(_load_matrix(args.rewards))
    if args.scenario:
        return scenario_mod.load(args.scenario).rewards()
    if args.builtin:
        return scenario_mod.builtin(args.builtin).rewards()
    raise ScenarioError("give --rewards, --scenario or --builtin")


def _emit(payload) -> None:
    print(json.dumps(payload, indent=2))


def cmd_run(args) -> int:
    if not args.scenario:
        raise ScenarioError("run needs --scenario")
    scn = scenario_mod.load(args.scenario).with_overrides(args.seed, args.max_rounds, args.tolerance)
    return _run(scn, args.out)


def cmd_replicate(args) -> int:
    scn = scenario_mod.builtin(args.name).with_overrides(args.seed, args.max_rounds, args.tolerance)
    return _run(scn, args.out)


def _run(scn, out) -> int:
    report = run_scenario(scn, out)
    _emit(report.to_dict())
    return report.exit_code


def cmd_verify_ne(args) -> int:
    f = _rewards(args)
    w = check_weights(_load_matrix(args.weights), f.shape)
    tol = 0.0 if args.tolerance is None else args.tolerance
    alloc = translated_support(w, tol)
    weight = is_ne_weight_game(w, f, tol)
    part = is_ne_partition_game(alloc, f)
    _emit(
        {
            "allocation": profile_to_json(alloc),
            "ne_weight_game": weight.is_ne,
            "ne_partition_game": part.is_ne,
            "violations": [
                {"agent": None if v.agent is None else v.agent + 1, "task": v.task + 1, "property": v.prop}
                for v in weight.violations
            ],
        }
    )
    return EXIT_OK if weight.is_ne and part.is_ne else EXIT_BUDGET


def cmd_enumerate(args) -> int:
    opt = enumerate_optimal_partitions(_rewards(args))
    _emit({"optimal_value": opt.optimal_value, "partitions": [profile_to_json(p) for p in opt.partitions]})
    return EXIT_OK


def cmd_bound(args) -> int:
    f = _rewards(args)
    _emit({"gamma": args.gamma, "bound": finite_time_bound(f, args.gamma)})
    return EXIT_OK


def cmd_derive_params(args) -> int:
    f = _rewards(args)
    d = args.d if args.d is not None else DirectedGraph.cycle(f.n).diameter()
    p = derive_constant_params(f, max(d, 1), args.eps, args.nu)
    _emit({"T": p.T, "d": p.d, "alpha_min": p.alpha_min, "mu": p.mu, "alpha": p.alpha.tolist()})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="taskalloc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, source=True):
        p.add_argument("--scenario", help="scenario YAML file")
        p.add_argument("--out", help="output directory for CSV and JSON")
        p.add_argument("--seed", type=int, help="override the scenario's random seeds")
        p.add_argument("--max-rounds", type=int)
        p.add_argument("--tolerance", type=float)
        if source:
            p.add_argument("--rewards", help="CSV matrix of f values (rows = agents)")
            p.add_argument("--builtin", help="take rewards from a builtin scenario")

    p = sub.add_parser("run", help="run a scenario file")
    common(p, source=False)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("replicate", help="run a builtin scenario")
    p.add_argument("name", choices=scenario_mod.builtin_names())
    common(p, source=False)
    p.set_defaults(func=cmd_replicate)

    p = sub.add_parser("verify-ne", help="check a weight matrix against both games")
    p.add_argument("weights", help="CSV weight matrix")
    common(p)
    p.set_defaults(func=cmd_verify_ne)

    p = sub.add_parser("enumerate", help="list all optimal partitions")
    common(p)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("bound", help="finite-time round bound for PBRAG")
    p.add_argument("--gamma", type=float, required=True)
    common(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("derive-params", help="constant step sizes and period for d-PBRAG")
    p.add_argument("--eps", type=float, default=0.9)
    p.add_argument("--nu", type=float, default=0.1)
    p.add_argument("--d", type=int, help="diameter surrogate (default: directed n-cycle)")
    common(p)
    p.set_defaults(func=cmd_derive_params)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, ModelError, EnumerationTooLarge, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

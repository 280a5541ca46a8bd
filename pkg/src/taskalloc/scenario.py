"""Scenario files: a YAML tree describing one experiment.

Agent and task ids in scenario files are 1-based, like the reports.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np
import yaml

from . import instances
from .dpbrag import ConstantRewards, ConstantSchedule, DampedCosineRewards, TwoPhaseSchedule, derive_constant_params
from .graph import DirectedGraph
from .model import ModelError, RewardMatrix
from .pbrag import as_step_sizes, two_step_step_size


class ScenarioError(ValueError):
    """Invalid scenario file or an assumption violation detected before running."""


_matrix = {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": {"type": "number"}}}
_seed = {"type": "integer", "minimum": 0}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["name", "problem", "algorithm"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "algorithm": {"enum": ["pbrag", "dpbrag"]},
        "problem": {
            "type": "object",
            "required": ["source"],
            "additionalProperties": False,
            "properties": {
                "source": {"enum": ["explicit", "random", "factored", "example1", "table1", "scaled"]},
                "values": _matrix,
                "rewards": _matrix,
                "importance": _matrix,
                "seed": _seed,
                "n": {"type": "integer", "minimum": 1},
                "m": {"type": "integer", "minimum": 1},
                "scale": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "initial_weights": {"oneOf": [{"enum": ["zeros", "ones"]}, _matrix]},
        "step_size": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "preset": {"enum": ["remark1", "two-step"]},
                "value": {"type": "number", "exclusiveMinimum": 0},
                "matrix": _matrix,
            },
        },
        "graph": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "preset": {"enum": ["cycle", "complete", "line"]},
                "arcs": {"type": "array", "items": {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "integer", "minimum": 1}}},
                "use_n_for_d": {"type": "boolean"},
            },
        },
        "schedule": {
            "type": "object",
            "required": ["type"],
            "additionalProperties": False,
            "properties": {
                "type": {"enum": ["constant", "two-phase"]},
                "eps": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "nu": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "T": {"type": "integer", "minimum": 2},
                "alpha0": {"type": "number", "exclusiveMinimum": 0},
                "beta0": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "reward_sequence": {
            "type": "object",
            "required": ["type"],
            "additionalProperties": False,
            "properties": {
                "type": {"enum": ["constant", "damped-cosine"]},
                "seed": _seed,
                "a": _matrix,
                "b": _matrix,
                "c": _matrix,
            },
        },
        "max_rounds": {"type": "integer", "minimum": 1},
        "tolerance": {"type": "number", "minimum": 0},
        "eps": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    },
}


@dataclass
class Scenario:
    raw: dict[str, Any]

    @property
    def name(self) -> str:
        return self.raw["name"]

    @property
    def algorithm(self) -> str:
        return self.raw["algorithm"]

    @property
    def max_rounds(self) -> int:
        return int(self.raw.get("max_rounds", 1000))

    @property
    def tolerance(self) -> float:
        return float(self.raw.get("tolerance", 1e-9))

    def with_overrides(self, seed: int | None = None, max_rounds: int | None = None, tolerance: float | None = None) -> Scenario:
        raw = copy.deepcopy(self.raw)
        if seed is not None:
            if raw["problem"]["source"] == "random":
                raw["problem"]["seed"] = seed
            seq = raw.get("reward_sequence")
            if seq and seq["type"] == "damped-cosine" and "a" not in seq:
                seq["seed"] = seed
        if max_rounds is not None:
            raw["max_rounds"] = max_rounds
        if tolerance is not None:
            raw["tolerance"] = tolerance
        return validate(raw)

    # -- builders ---------------------------------------------------------

    def rewards(self) -> RewardMatrix:
        p = self.raw["problem"]
        src = p["source"]
        if src == "explicit":
            return RewardMatrix(p["values"])
        if src == "factored":
            return RewardMatrix.from_factors(p["rewards"], p["importance"])
        if src == "random":
            return instances.generate_random_instance(p["seed"], p["n"], p["m"])
        if src == "example1":
            return instances.EXAMPLE1
        if src == "table1":
            return instances.TABLE1
        return instances.scaled_profile(p["n"], p.get("scale", 1000.0))

    def initial_weights(self, shape: tuple[int, int]) -> np.ndarray:
        spec = self.raw.get("initial_weights", "zeros")
        if spec == "zeros":
            return np.zeros(shape)
        if spec == "ones":
            return np.ones(shape)
        w = np.asarray(spec, dtype=float)
        if w.shape != shape:
            raise ScenarioError(f"initial_weights shape {w.shape} does not match {shape}")
        return w

    def step_sizes(self, f: RewardMatrix) -> np.ndarray:
        spec = self.raw.get("step_size", {"preset": "remark1"})
        try:
            if "matrix" in spec:
                return as_step_sizes(spec["matrix"], f.shape)
            if "value" in spec:
                return as_step_sizes(spec["value"], f.shape)
            return as_step_sizes(two_step_step_size(f), f.shape)
        except ModelError as exc:
            raise ScenarioError(str(exc)) from exc

    def graph(self, n: int) -> DirectedGraph:
        spec = self.raw.get("graph", {"preset": "cycle"})
        if "arcs" in spec:
            arcs = [(j - 1, i - 1) for j, i in spec["arcs"]]
            if any(max(a) >= n for a in arcs):
                raise ScenarioError(f"graph arcs reference agents beyond n={n}")
            g = DirectedGraph(n, arcs)
        else:
            g = {"cycle": DirectedGraph.cycle, "complete": DirectedGraph.complete, "line": DirectedGraph.line}[
                spec.get("preset", "cycle")
            ](n)
        if not g.is_strongly_connected():
            raise ScenarioError("communication graph is not strongly connected")
        return g

    def diameter_surrogate(self, g: DirectedGraph) -> int:
        return g.n if self.raw.get("graph", {}).get("use_n_for_d", False) else max(g.diameter(), 1)

    def reward_sequence(self, f: RewardMatrix):
        spec = self.raw.get("reward_sequence", {"type": "constant"})
        if spec["type"] == "constant":
            return ConstantRewards(f)
        if "a" in spec:
            return DampedCosineRewards(f, spec["a"], spec["b"], spec["c"])
        return DampedCosineRewards.from_seed(f, spec.get("seed", 0))

    def schedule(self, f: RewardMatrix, d: int):
        """Returns ``(schedule, T, derived_params_or_None)``."""
        spec = self.raw.get("schedule")
        if spec is None:
            raise ScenarioError("dpbrag scenarios need a schedule")
        try:
            if spec["type"] == "two-phase":
                T = spec.get("T", 2 * d + 2)
                return TwoPhaseSchedule(T, d, spec.get("alpha0", 1.0), spec.get("beta0", 1.0)), T, None
            if "alpha" in spec:
                if "T" not in spec:
                    raise ScenarioError("explicit constant schedule needs T")
                return ConstantSchedule(np.full(f.shape, float(spec["alpha"]))), spec["T"], None
            params = derive_constant_params(f, d, spec.get("eps", 0.9), spec.get("nu", 0.1))
        except ModelError as exc:
            raise ScenarioError(str(exc)) from exc
        return params.schedule(), params.T, params


def validate(raw: dict[str, Any]) -> Scenario:
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ScenarioError(f"scenario schema violation at {list(exc.absolute_path)}: {exc.message}") from exc
    p = raw["problem"]
    needs = {"explicit": ["values"], "factored": ["rewards", "importance"], "random": ["seed", "n", "m"], "scaled": ["n"]}
    missing = [k for k in needs.get(p["source"], []) if k not in p]
    if missing:
        raise ScenarioError(f"problem source {p['source']!r} requires {missing}")
    seq = raw.get("reward_sequence")
    if seq and seq["type"] == "damped-cosine" and "a" not in seq and "seed" not in seq:
        raise ScenarioError("damped-cosine rewards need a seed or explicit a, b, c")
    if raw["algorithm"] == "dpbrag" and "schedule" not in raw:
        raise ScenarioError("dpbrag scenarios need a schedule")
    return Scenario(raw)


def load(path: str | Path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ScenarioError(f"{path}: expected a mapping at the top level")
    return validate(raw)


def builtin_names() -> list[str]:
    files = resources.files("taskalloc").joinpath("scenarios").iterdir()
    return sorted(p.name[: -len(".yaml")] for p in files if p.name.endswith(".yaml"))


def builtin(name: str) -> Scenario:
    res = resources.files("taskalloc").joinpath("scenarios", f"{name}.yaml")
    if not res.is_file():
        raise ScenarioError(f"unknown builtin scenario {name!r}; choose from {builtin_names()}")
    return validate(yaml.safe_load(res.read_text(encoding="utf-8")))

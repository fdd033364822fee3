"""Experiment configuration: JSON schema, validation, canonical echo.

A config picks a space, a map, a start point, an iteration count and a list
of experiments to run on the shared orbit.  Validation happens before any
computation and reports field-level messages; the canonical form (defaults
materialized, fixed key order) is echoed into every report so a report's
config section revalidates against the same schema.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .maps import DEFAULT_SUPPORT_WINDOW, MapSpec, map_from_json
from .spaces import SeqVector, Space

__all__ = [
    "EXPERIMENTS",
    "DEFAULT_TOLERANCES",
    "ConfigError",
    "ExperimentConfig",
    "validate_config",
    "load_config",
    "bundled_config_path",
    "bundled_config_names",
]

EXPERIMENTS = (
    "ESCAPE_RATE",
    "COSMIC",
    "METRIC_LIMIT",
    "FIRM_CHECK",
    "MEAN_ERGODIC",
    "INVARIANT_SUBSPACE",
    "HALF_SPACE",
    "STEP_NORMS",
)

DEFAULT_TOLERANCES = {
    "tau": 1e-3,
    "fit": 1e-6,
    "cosmic_strong": 1e-3,
    "cosmic_coord": 1e-2,
    "cosmic_zero": 1e-6,
    "step_defect": 1e-2,
    "monotone": 1e-9,
    "firm": 1e-9,
    "nonexpansive": 1e-9,
    "bounded_factor": 10.0,
}

_TOP_LEVEL_KEYS = {
    "space",
    "map",
    "start",
    "iterations",
    "experiments",
    "probes",
    "checkpoints",
    "tolerances",
    "seed",
    "sample_count",
    "sample_window",
    "support_window",
    "assume_firm",
}

_MIN_ITERATIONS = 16


class ConfigError(ValueError):
    """Config rejected before any computation; message lists field errors."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class ExperimentConfig:
    space: Space
    map_json: dict
    start: SeqVector
    iterations: int
    experiments: tuple[str, ...]
    probes: tuple[SeqVector, ...] | None
    checkpoints: tuple[int, ...] | None
    tolerances: dict[str, float]
    seed: int
    sample_count: int
    sample_window: int
    support_window: int
    assume_firm: bool

    def build_map(self) -> MapSpec:
        return map_from_json(self.map_json, self.space)

    def tolerance(self, key: str) -> float:
        return self.tolerances[key]

    def to_json_dict(self) -> dict:
        out: dict[str, Any] = {
            "space": self.space.to_json_dict(),
            "map": self.map_json,
            "start": self.start.to_json_dict(),
            "iterations": self.iterations,
            "experiments": list(self.experiments),
            "probes": None
            if self.probes is None
            else [p.to_json_dict() for p in self.probes],
            "checkpoints": None if self.checkpoints is None else list(self.checkpoints),
            "tolerances": {k: self.tolerances[k] for k in sorted(self.tolerances)},
            "seed": self.seed,
            "sample_count": self.sample_count,
            "sample_window": self.sample_window,
            "support_window": self.support_window,
            "assume_firm": self.assume_firm,
        }
        return out


def validate_config(raw: Mapping) -> ExperimentConfig:
    """Validate a raw JSON dict into an ExperimentConfig or raise ConfigError."""
    errors: list[str] = []
    if not isinstance(raw, Mapping):
        raise ConfigError(["config must be a JSON object"])

    for key in raw:
        if key not in _TOP_LEVEL_KEYS:
            errors.append(f"{key}: unknown field")

    space = None
    try:
        space = Space.from_json_dict(raw.get("space", {}))
    except (KeyError, TypeError, ValueError) as exc:
        errors.append(f"space: {exc}")

    def _finite(vec: SeqVector) -> bool:
        return all(math.isfinite(c) for _, c in vec.items())

    start = SeqVector()
    try:
        start = SeqVector.from_json_dict(raw.get("start", {}) or {})
    except (TypeError, ValueError) as exc:
        errors.append(f"start: {exc}")
    if not _finite(start):
        errors.append("start: coefficients must be finite")
    if space is not None and not space.admits(start):
        errors.append("start: support not admissible for the space")

    iterations = raw.get("iterations")
    if not isinstance(iterations, int) or isinstance(iterations, bool) or iterations < _MIN_ITERATIONS:
        errors.append(f"iterations: need an integer >= {_MIN_ITERATIONS}")
        iterations = _MIN_ITERATIONS

    experiments = raw.get("experiments")
    if (
        not isinstance(experiments, (list, tuple))
        or not experiments
        or any(e not in EXPERIMENTS for e in experiments)
        or len(set(experiments)) != len(experiments)
    ):
        errors.append(
            "experiments: need a nonempty list without duplicates drawn from "
            + ", ".join(EXPERIMENTS)
        )
        experiments = ()
    experiments = tuple(experiments)

    map_json = raw.get("map")
    built_map = None
    if not isinstance(map_json, Mapping):
        errors.append("map: need a JSON object with a 'kind' field")
        map_json = {}
    elif space is not None:
        try:
            built_map = map_from_json(map_json, space)
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"map: {exc}")

    if space is not None:
        needs_l1 = {"HALF_SPACE"}
        needs_euclidean = {"MEAN_ERGODIC", "INVARIANT_SUBSPACE"}
        for e in experiments:
            if e in needs_l1 and space.kind != "l1_seq":
                errors.append(f"experiments: {e} requires the l1_seq space")
            if e in needs_euclidean and space.kind != "euclidean":
                errors.append(f"experiments: {e} requires a euclidean space")
        if built_map is not None and (set(experiments) & needs_euclidean):
            from .maps import AffineMap

            if not isinstance(built_map, AffineMap):
                errors.append(
                    "experiments: MEAN_ERGODIC and INVARIANT_SUBSPACE need an affine map"
                )

    probes = None
    if raw.get("probes") is not None:
        probes_raw = raw["probes"]
        if not isinstance(probes_raw, (list, tuple)):
            errors.append("probes: need a list of vectors")
        else:
            parsed = []
            for i, p in enumerate(probes_raw):
                try:
                    vec = SeqVector.from_json_dict(p)
                except (TypeError, ValueError, AttributeError) as exc:
                    errors.append(f"probes[{i}]: {exc}")
                    continue
                if not _finite(vec):
                    errors.append(f"probes[{i}]: coefficients must be finite")
                if space is not None and not space.admits(vec):
                    errors.append(f"probes[{i}]: support not admissible for the space")
                parsed.append(vec)
            probes = tuple(parsed)

    checkpoints = None
    if raw.get("checkpoints") is not None:
        cps = raw["checkpoints"]
        if (
            not isinstance(cps, (list, tuple))
            or not cps
            or any(not isinstance(k, int) or isinstance(k, bool) for k in cps)
            or any(k < 1 or k > iterations for k in cps if isinstance(k, int))
        ):
            errors.append("checkpoints: need integers between 1 and iterations")
        else:
            checkpoints = tuple(sorted(set(cps)))

    tolerances = dict(DEFAULT_TOLERANCES)
    tol_raw = raw.get("tolerances") or {}
    if not isinstance(tol_raw, Mapping):
        errors.append("tolerances: need an object of numeric overrides")
    else:
        for k, v in tol_raw.items():
            if k not in DEFAULT_TOLERANCES:
                errors.append(
                    f"tolerances: unknown key {k!r} (known: {', '.join(sorted(DEFAULT_TOLERANCES))})"
                )
            elif not isinstance(v, (int, float)) or isinstance(v, bool) or v <= 0:
                errors.append(f"tolerances: {k} must be a positive number")
            else:
                tolerances[k] = float(v)

    def _int_field(name: str, default: int, minimum: int) -> int:
        val = raw.get(name, default)
        if not isinstance(val, int) or isinstance(val, bool) or val < minimum:
            errors.append(f"{name}: need an integer >= {minimum}")
            return default
        return val

    seed = _int_field("seed", 0, 0)
    sample_count = _int_field("sample_count", 1000, 1)
    sample_window = _int_field("sample_window", 32, 1)
    support_window = _int_field("support_window", DEFAULT_SUPPORT_WINDOW, 1)

    assume_firm = raw.get("assume_firm", False)
    if not isinstance(assume_firm, bool):
        errors.append("assume_firm: need a boolean")
        assume_firm = False

    if errors:
        raise ConfigError(errors)

    return ExperimentConfig(
        space=space,
        map_json=dict(map_json),
        start=start,
        iterations=iterations,
        experiments=experiments,
        probes=probes,
        checkpoints=checkpoints,
        tolerances=tolerances,
        seed=seed,
        sample_count=sample_count,
        sample_window=sample_window,
        support_window=support_window,
        assume_firm=assume_firm,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config is not valid JSON: {exc}"]) from exc
    return validate_config(raw)


def bundled_config_path(name: str) -> Path:
    """Path of a config shipped with the package (name without .json)."""
    path = Path(__file__).parent / "configs" / f"{name}.json"
    if not path.exists():
        raise FileNotFoundError(f"no bundled config named {name!r}")
    return path


def bundled_config_names() -> list[str]:
    return sorted(p.stem for p in (Path(__file__).parent / "configs").glob("*.json"))

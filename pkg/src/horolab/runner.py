"""Config-driven experiment runner.

One run iterates the configured map once and feeds the shared trajectory to
every requested diagnostic in declaration order.  Reports are plain dicts
with a fixed key order and native floats, so the same config and seed always
serialize to byte-identical JSON.  Wall time is returned separately and
never written into the report.
"""

from __future__ import annotations

import json
import time
from typing import Any

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .dynamics import (
    cosmic_diagnose,
    escape_rate,
    iterate,
    log_checkpoints,
    mean_ergodic,
    step_monotone_defect,
    step_norm_check,
)
from .functionals import axis_probes, fit_limit, functional_to_json
from .invariant import extract_functional, half_space
from .maps import check_firm, check_nonexpansive
from .sampling import sample_pairs, window_indices

__all__ = ["run_experiment", "emit_series", "series_csv", "available_series", "SERIES_NAMES"]

SERIES_NAMES = ("norms", "step_norms", "tau", "halfspace", "cosmic_defect")


def run_experiment(cfg: ExperimentConfig) -> tuple[dict, float]:
    """Run every configured experiment; returns (report dict, wall seconds)."""
    t0 = time.perf_counter()
    m = cfg.build_map()
    traj = iterate(m, cfg.start, cfg.iterations, cfg.support_window)

    seeds = np.random.SeedSequence(cfg.seed).spawn(len(cfg.experiments) + 1)
    window = window_indices(cfg.space, cfg.sample_window)

    audit_rng = np.random.default_rng(seeds[0])
    audit_pairs = sample_pairs(audit_rng, window, cfg.sample_count)
    audit = check_nonexpansive(m, audit_pairs, cfg.space, cfg.tolerance("nonexpansive"))

    checkpoints = list(cfg.checkpoints) if cfg.checkpoints else log_checkpoints(cfg.iterations)
    trajectory_record = {
        "length": traj.iterations,
        "norms": [float(v) for v in traj.norms],
        "step_norms": [float(v) for v in traj.step_norms],
        "checkpoints": checkpoints,
        "checkpoint_norms": [float(traj.norms[k]) for k in checkpoints],
        "step_monotone_defect": float(step_monotone_defect(traj)),
        "nonexpansive_audit": {
            "pairs": audit.pair_count,
            "max_ratio": float(audit.max_ratio),
            "verdict": "PASS" if audit.passed else "FAIL",
        },
    }

    results = []
    for name, seed in zip(cfg.experiments, seeds[1:]):
        rng = np.random.default_rng(seed)
        results.append(_run_one(name, cfg, m, traj, rng, window))

    report = {
        "tool": "horolab",
        "version": __version__,
        "config": cfg.to_json_dict(),
        "trajectory": trajectory_record,
        "results": results,
    }
    return report, time.perf_counter() - t0


def _run_one(name, cfg, m, traj, rng, window) -> dict:
    record: dict[str, Any] = {"experiment": name}

    if name == "ESCAPE_RATE":
        rep = escape_rate(traj, cfg.tolerance("tau"))
        record["verdict"] = "PASS" if rep.converged else "NOT_CONVERGED"
        record["tau_final"] = float(rep.tau_final)
        record["converged"] = rep.converged
        record["estimates"] = [[k, float(v)] for k, v in rep.estimates]
        return record

    if name == "COSMIC":
        rep = cosmic_diagnose(
            traj,
            strong_tol=cfg.tolerance("cosmic_strong"),
            coord_window=window,
            coord_tol=cfg.tolerance("cosmic_coord"),
            zero_tol=cfg.tolerance("cosmic_zero"),
            bounded_factor=cfg.tolerance("bounded_factor"),
        )
        record["verdict"] = rep.verdict
        record["strong_cauchy_defect"] = (
            None if rep.strong_cauchy_defect is None else float(rep.strong_cauchy_defect)
        )
        record["defects"] = [[k, float(v)] for k, v in rep.defects]
        record["directions"] = [[k, d.to_json_dict()] for k, d in rep.directions]
        record["coordinate_limits"] = {
            str(s): float(rep.coordinate_limits[s]) for s in sorted(rep.coordinate_limits)
        }
        record["coordinate_converged"] = {
            str(s): rep.coordinate_converged[s] for s in sorted(rep.coordinate_converged)
        }
        record["note"] = rep.note
        return record

    if name == "METRIC_LIMIT":
        if cfg.probes:
            probes = list(cfg.probes)
        else:
            top = min(10, cfg.space.dim) if cfg.space.kind == "euclidean" else 10
            probes = axis_probes(range(1, top + 1))
        fit = fit_limit(traj.points, cfg.space, probes, cfg.tolerance("fit"))
        record["verdict"] = "PASS" if fit.converged else "NOT_CONVERGED"
        record["converged"] = fit.converged
        record["max_oscillation"] = float(fit.max_oscillation)
        record["form"] = fit.form
        record["functional"] = (
            None if fit.functional is None else functional_to_json(fit.functional)
        )
        record["residual"] = None if fit.residual is None else float(fit.residual)
        record["near_ties"] = [[f, float(r)] for f, r in fit.near_ties]
        record["unresolved_coords"] = list(fit.unresolved_coords)
        return record

    if name == "FIRM_CHECK":
        pairs = sample_pairs(rng, window, cfg.sample_count)
        rep = check_firm(m, pairs, cfg.space, tol=cfg.tolerance("firm"))
        record["verdict"] = "PASS" if rep.passed else "FAIL"
        record["worst_margin"] = float(rep.worst_margin)
        x, y, t = rep.witness
        record["witness"] = {
            "x": x.to_json_dict(),
            "y": y.to_json_dict(),
            "t": float(t),
        }
        return record

    if name == "STEP_NORMS":
        tau = traj.norms[-1] / traj.iterations
        rep = step_norm_check(traj, tau, cfg.tolerance("step_defect"))
        record["verdict"] = "PASS" if (rep.passed or not cfg.assume_firm) else "FAIL"
        record["assume_firm"] = cfg.assume_firm
        record["final_step_norm"] = float(rep.final_step_norm)
        record["tau_estimate"] = float(rep.tau)
        record["defect"] = float(rep.defect)
        return record

    if name == "MEAN_ERGODIC":
        u = m.dense_matrix()
        rep = mean_ergodic(u, m.translation, cfg.iterations)
        record["verdict"] = "PASS" if rep.cesaro_defect <= 1e-12 else "FAIL"
        record["average"] = rep.average.to_json_dict()
        record["projection"] = rep.projection.to_json_dict()
        record["gap"] = float(rep.gap)
        record["cesaro_defect"] = float(rep.cesaro_defect)
        return record

    if name == "INVARIANT_SUBSPACE":
        rep = extract_functional(m, sample_count=max(cfg.sample_count, 1000), rng=rng)
        record["verdict"] = rep.verdict
        record["hypothesis_distance"] = float(rep.hypothesis_distance)
        record["q"] = None if rep.q is None else rep.q.to_json_dict()
        record["monotone_margin"] = (
            None if rep.monotone_margin is None else float(rep.monotone_margin)
        )
        record["kernel_residual"] = (
            None if rep.kernel_residual is None else float(rep.kernel_residual)
        )
        record["adjoint_residual"] = (
            None if rep.adjoint_residual is None else float(rep.adjoint_residual)
        )
        tau_estimate = traj.norms[-1] / traj.iterations
        record["tau_estimate"] = float(tau_estimate)
        record["tau_positive"] = bool(tau_estimate > 1e-3)
        return record

    if name == "HALF_SPACE":
        shared = traj if cfg.start.is_zero() else None
        rep = half_space(
            m,
            cfg.iterations,
            list(cfg.probes) if cfg.probes else None,
            trajectory=shared,
            tol=cfg.tolerance("fit"),
            support_window=cfg.support_window,
        )
        record["verdict"] = rep.verdict
        record["f"] = None if rep.f is None else rep.f.to_json_dict()
        record["orbit_values"] = [float(v) for v in rep.orbit_values]
        record["min_value"] = None if rep.min_value is None else float(rep.min_value)
        record["source_functional"] = (
            None
            if rep.source_functional is None
            else functional_to_json(rep.source_functional)
        )
        return record

    raise ValueError(f"unknown experiment {name!r}")


def available_series(report: dict) -> list[str]:
    """Series names extractable from this particular report."""
    names = ["norms", "step_norms"]
    for record in report.get("results", []):
        if record["experiment"] == "ESCAPE_RATE":
            names.append("tau")
        elif record["experiment"] == "HALF_SPACE" and record.get("orbit_values"):
            names.append("halfspace")
        elif record["experiment"] == "COSMIC" and record.get("defects"):
            names.append("cosmic_defect")
    return names


def _find_record(report: dict, experiment: str) -> dict | None:
    for record in report.get("results", []):
        if record["experiment"] == experiment:
            return record
    return None


def emit_series(report: dict, name: str) -> list[tuple[int, float]]:
    """(n, value) rows for one report series; unknown names list the options."""
    if name == "norms":
        return list(enumerate(report["trajectory"]["norms"]))
    if name == "step_norms":
        return [(k + 1, v) for k, v in enumerate(report["trajectory"]["step_norms"])]
    if name == "tau":
        record = _find_record(report, "ESCAPE_RATE")
        if record is not None:
            return [(k, v) for k, v in record["estimates"]]
    if name == "halfspace":
        record = _find_record(report, "HALF_SPACE")
        if record is not None and record.get("orbit_values"):
            return list(enumerate(record["orbit_values"]))
    if name == "cosmic_defect":
        record = _find_record(report, "COSMIC")
        if record is not None and record.get("defects"):
            return [(k, v) for k, v in record["defects"]]
    raise ValueError(
        f"no series {name!r} in this report; available: {', '.join(available_series(report))}"
    )


def series_csv(report: dict, name: str) -> str:
    rows = emit_series(report, name)
    lines = ["n,value"] + [f"{k},{float(v)!r}" for k, v in rows]
    return "\n".join(lines) + "\n"


def report_json(report: dict) -> str:
    """Canonical serialized form: fixed key order, shortest-round-trip floats."""
    return json.dumps(report, indent=2) + "\n"

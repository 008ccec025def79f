"""Experiment orchestration: tuning, parallel chains, persistence, diagnosis.

A run directory contains:

* ``manifest.json``: the resolved config (tuned step sizes included) plus
  per-chain step counters. Everything here is deterministic.
* ``<kernel>/chain_NNNN.csv``: thinned traces, one file per chain, header
  ``iter,accepted,h,x_1,...,x_d``, floats as shortest round-trip decimals.
* ``<kernel>/error_curve.csv``: rolling-error aggregation across chains
  (written when a ground truth is configured).
* ``summary.json``: per-sampler diagnostics. Recomputable bit-for-bit from
  the files above via ``diagnose``.
* ``truth.json``: ground-truth values for the requested functionals.
* ``timing.json``: wall-clock seconds. The only file that is not
  deterministic; everything else is byte-reproducible from config + seed.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Any

import numpy as np

from .config import ExperimentConfig, KernelRunSpec, build_barrier, build_target
from .diagnostics import (aggregate_error_curves, count_well_transitions, rolling_mean_error,
                          split_rhat_rank_normalized)
from .errors import OracleUnavailable, ZeroVariance
from .linalg import make_chain_rng
from .samplers import initial_state_for, make_stepper, make_tunable_stepper, tune_step_size
from .targets import (GroundTruth, box_gaussian_norm_sq_expectation,
                      truncated_gaussian_ball_norm_expectation)

SCHEMA_VERSION = 1

# maps ground-truth functional names to the scalar extracted from draws
_FUNCTIONAL_OF_TRUTH = {"E_norm": "norm", "E_norm_sq": "norm_sq"}


def resolve_worker_count(chains: int) -> int:
    """Worker processes to use: min(chains, DIKIN_SAMPLER_THREADS or cores)."""
    env = os.environ.get("DIKIN_SAMPLER_THREADS")
    if env is not None:
        try:
            cap = int(env)
        except ValueError as exc:
            raise ValueError(f"DIKIN_SAMPLER_THREADS must be an integer, got {env!r}") from exc
        if cap < 1:
            raise ValueError(f"DIKIN_SAMPLER_THREADS must be at least 1, got {cap}")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(chains, cap))


def _initial_point(config_dim: int, initial_point) -> np.ndarray:
    if initial_point is None:
        return np.zeros(config_dim)
    return np.array(initial_point, dtype=float)


def _chain_plan(spec_dict: dict[str, Any], iterations: int, thin: int) -> tuple[int, int]:
    """(total steps, record stride) for one kernel."""
    if spec_dict["kind"] == "unadjusted_dl":
        steps = int(round(spec_dict["total_time"] / spec_dict["dt"]))
        stride = max(1, int(spec_dict["record_every"] / spec_dict["dt"]))
        return steps, stride
    return iterations, thin


def _run_chain_task(task: dict[str, Any]) -> dict[str, Any]:
    """Run one chain to completion; top-level so worker processes can pickle it.

    Returns recorded arrays plus whole-run counters. Records are taken every
    ``stride`` steps, storing the post-step state.
    """
    barrier = build_barrier(task["domain"])
    target = build_target(task["target"], task["domain"])
    spec: KernelRunSpec = task["spec"]
    kconfig = spec.kernel_config(task["h_resolved"])
    steps, stride = task["steps"], task["stride"]

    rng = make_chain_rng(task["master_seed"], f"{task['experiment_id']}/{spec.name}",
                         task["chain_index"])
    state = initial_state_for(kconfig, barrier, target, _initial_point(target.dimension,
                                                                       task["initial_point"]))
    stepper = make_stepper(kconfig, barrier, target)

    n_records = steps // stride
    dim = target.dimension
    positions = np.empty((n_records, dim))
    accepted_col = np.zeros(n_records, dtype=np.uint8)
    h_col = np.empty(n_records)
    iter_col = np.empty(n_records, dtype=np.int64)

    accepted_total = 0
    clips = 0
    infeasible = 0
    row = 0
    for i in range(1, steps + 1):
        state, record = stepper(state, rng)
        accepted_total += record.accepted
        clips += record.boundary_clip
        if i % stride == 0:
            positions[row] = state.position
            accepted_col[row] = record.accepted
            h_col[row] = record.step_size_used
            iter_col[row] = i
            if not barrier.is_interior(state.position):
                infeasible += 1
            row += 1

    return {
        "chain_index": task["chain_index"],
        "positions": positions,
        "accepted": accepted_col,
        "h": h_col,
        "iter": iter_col,
        "counters": {"total_steps": steps, "accepted_steps": int(accepted_total),
                     "boundary_clips": int(clips), "infeasible_recorded": int(infeasible)},
    }


def _tune_kernel(config: ExperimentConfig, spec: KernelRunSpec) -> float:
    """Run the Robbins-Monro tuning phase for one kernel; draws are discarded."""
    barrier = build_barrier(config.domain)
    target = build_target(config.target, config.domain)
    kconfig = spec.kernel_config(spec.h_init)
    state = initial_state_for(kconfig, barrier, target,
                              _initial_point(target.dimension, config.initial_point))
    rng = make_chain_rng(config.master_seed, f"{config.experiment_id}/{spec.name}/tune", 0)
    stepper = make_tunable_stepper(kconfig, barrier, target)
    return tune_step_size(stepper, state, target_acceptance=spec.target_acceptance,
                          warmup_iters=spec.tune_iters, h_init=spec.h_init, rng=rng)


def resolve_step_sizes(config: ExperimentConfig) -> dict[str, dict[str, Any]]:
    """Tune where requested; return {kernel name: {h_max, tuned}}."""
    resolved = {}
    for spec in config.kernels:
        if spec.needs_tuning:
            resolved[spec.name] = {"h_max": float(_tune_kernel(config, spec)), "tuned": True}
        else:
            resolved[spec.name] = {"h_max": float(spec.h_max), "tuned": False}
    return resolved


def compute_ground_truth(config: ExperimentConfig) -> dict[str, GroundTruth]:
    """Evaluate every requested ground-truth functional for this experiment.

    Raises:
        OracleUnavailable: the functional has no oracle for this
            domain/target combination.
    """
    out: dict[str, GroundTruth] = {}
    for name in config.ground_truth:
        if name == "E_norm":
            if config.domain["kind"] != "ball" or config.target["kind"] != "standard_gaussian":
                raise OracleUnavailable(
                    "E_norm oracle needs a ball domain with the standard Gaussian target")
            out[name] = truncated_gaussian_ball_norm_expectation(
                int(config.domain["dimension"]), float(config.domain["radius"]))
        elif name == "E_norm_sq":
            if config.domain["kind"] != "box" or config.target["kind"] != "gaussian_box":
                raise OracleUnavailable(
                    "E_norm_sq oracle needs a box domain with the box-coupled Gaussian target")
            out[name] = box_gaussian_norm_sq_expectation(np.array(config.domain["bounds"]))
        else:
            raise OracleUnavailable(f"no oracle for functional {name!r}")
    return out


def _format_float(v: float) -> str:
    return repr(float(v))


def _write_chain_csv(path: Path, result: dict[str, Any]) -> None:
    dim = result["positions"].shape[1]
    header = "iter,accepted,h," + ",".join(f"x_{j + 1}" for j in range(dim))
    lines = [header]
    iters = result["iter"]
    acc = result["accepted"]
    hs = result["h"]
    pos = result["positions"]
    for r in range(pos.shape[0]):
        coords = ",".join(_format_float(pos[r, j]) for j in range(dim))
        lines.append(f"{iters[r]},{int(acc[r])},{_format_float(hs[r])},{coords}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_chain_csv(path: Path) -> dict[str, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {"iter": data[:, 0].astype(np.int64), "accepted": data[:, 1].astype(np.uint8),
            "h": data[:, 2], "positions": data[:, 3:]}


def _json_dump(path: Path, obj: Any) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n",
                    encoding="utf-8")


def _manifest_config_dict(config: ExperimentConfig,
                          resolved: dict[str, dict[str, Any]]) -> dict[str, Any]:
    """Config as stored in the manifest. output_dir is deliberately omitted
    so byte-identical runs can live in different directories."""
    return {
        "experiment_id": config.experiment_id,
        "chains": config.chains,
        "iterations": config.iterations,
        "warmup": config.warmup,
        "thin": config.thin,
        "master_seed": config.master_seed,
        "initial_point": list(config.initial_point) if config.initial_point else None,
        "ground_truth": list(config.ground_truth),
        "domain": config.domain,
        "target": config.target,
        "kernels": [dict(asdict(spec), h_resolved=resolved[spec.name]["h_max"],
                         tuned=resolved[spec.name]["tuned"]) for spec in config.kernels],
    }


def _rhat_block(draws: np.ndarray) -> dict[str, Any] | None:
    """Per-dimension rank-normalized split R-hat summary, or None if undefined."""
    m, n, dim = draws.shape
    if m < 2 or n < 4:
        return None
    values = []
    for j in range(dim):
        try:
            values.append(split_rhat_rank_normalized(draws[:, :, j]))
        except ZeroVariance:
            return None
    arr = np.array(values)
    return {
        "per_dimension": [float(v) for v in values],
        "median": float(np.median(arr)),
        "p90": float(np.percentile(arr, 90)),
        "max": float(np.max(arr)),
        "frac_above_1_01": float(np.mean(arr > 1.01)),
    }


def _summarize_kernel(kernel_entry: dict[str, Any], manifest: dict[str, Any],
                      truths: dict[str, Any],
                      chains: list[dict[str, np.ndarray]]) -> tuple[dict[str, Any], dict[str, np.ndarray] | None]:
    """Summary block for one kernel plus its error-curve table (if any)."""
    cfg = manifest["config"]
    counters = manifest["counters"][kernel_entry["name"]]["per_chain"]
    total_steps = sum(c["total_steps"] for c in counters)
    accepted_steps = sum(c["accepted_steps"] for c in counters)
    clips = sum(c["boundary_clips"] for c in counters)
    infeasible = sum(c["infeasible_recorded"] for c in counters)

    positions = np.stack([c["positions"] for c in chains])  # (m, records, d)

    is_em = kernel_entry["kind"] == "unadjusted_dl"
    if is_em:
        warmup_records = 0
    else:
        warmup_records = cfg["warmup"] // cfg["thin"]

    block: dict[str, Any] = {
        "kernel": kernel_entry["kind"],
        "h_max": kernel_entry["h_resolved"],
        "tuned": kernel_entry["tuned"],
        "acceptance_rate": accepted_steps / total_steps,
        "total_steps": total_steps,
        "recorded_draws": int(positions.shape[1]),
        "infeasible_recorded": infeasible,
        "boundary_clips": clips if is_em else None,
        "boundary_clip_rate": (clips / total_steps) if is_em else None,
    }

    block["rhat"] = _rhat_block(positions[:, warmup_records:, :])

    curve_table = None
    if truths:
        truth_name = cfg["ground_truth"][0]
        functional = _FUNCTIONAL_OF_TRUTH[truth_name]
        mu_star = truths[truth_name]["value"]
        curves = np.stack([rolling_mean_error(positions[c], mu_star, functional=functional)
                           for c in range(positions.shape[0])])
        agg = aggregate_error_curves(curves)
        block["error_functional"] = truth_name
        block["terminal_error"] = float(np.mean(curves[:, -1]))
        block["terminal_error_median"] = float(np.median(curves[:, -1]))
        curve_table = {"iter": chains[0]["iter"], **agg}
    else:
        block["error_functional"] = None
        block["terminal_error"] = None
        block["terminal_error_median"] = None

    if cfg["target"]["kind"] == "bimodal" and not is_em:
        counts = count_well_transitions(positions).per_chain_counts
        block["transitions"] = {
            "per_chain": [int(c) for c in counts],
            "mean": float(np.mean(counts)),
            "zero_fraction": float(np.mean(counts == 0)),
        }
    else:
        block["transitions"] = None

    return block, curve_table


def _write_error_curve_csv(path: Path, table: dict[str, np.ndarray]) -> None:
    lines = ["iter,mean,median,p10,p90"]
    n = table["iter"].shape[0]
    for r in range(n):
        lines.append(",".join([str(int(table["iter"][r]))] +
                              [_format_float(table[k][r]) for k in ("mean", "median", "p10", "p90")]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def summarize_run(run_dir: str | Path, *, write_outputs: bool = True) -> dict[str, Any]:
    """Recompute the run summary purely from persisted artifacts.

    This is the single summary builder: run_experiment calls it after
    writing traces, and the diagnose CLI command calls it on an existing
    directory, so both produce identical bytes by construction.
    """
    run_path = Path(run_dir)
    manifest_path = run_path / "manifest.json"
    if not manifest_path.is_file():
        raise FileNotFoundError(f"no manifest.json under {run_path}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    cfg = manifest["config"]

    truth_path = run_path / "truth.json"
    truths = {}
    if truth_path.is_file():
        truths = {k: v for k, v in json.loads(truth_path.read_text(encoding="utf-8")).items()
                  if k != "schema_version"}

    summary: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "experiment_id": cfg["experiment_id"],
        "chains": cfg["chains"],
        "iterations": cfg["iterations"],
        "warmup": cfg["warmup"],
        "thin": cfg["thin"],
        "master_seed": cfg["master_seed"],
        "ground_truth": truths or None,
        "samplers": {},
    }

    for kernel_entry in cfg["kernels"]:
        kdir = run_path / kernel_entry["name"]
        chain_files = sorted(kdir.glob("chain_*.csv"))
        if len(chain_files) != cfg["chains"]:
            raise FileNotFoundError(
                f"{kdir} has {len(chain_files)} chain files, expected {cfg['chains']}")
        chains = [_read_chain_csv(p) for p in chain_files]
        block, curve_table = _summarize_kernel(kernel_entry, manifest, truths, chains)
        summary["samplers"][kernel_entry["name"]] = block
        if curve_table is not None and write_outputs:
            _write_error_curve_csv(kdir / "error_curve.csv", curve_table)

    if write_outputs:
        _json_dump(run_path / "summary.json", summary)
    return summary


def run_experiment(config: ExperimentConfig, output_dir: str | Path | None = None) -> dict[str, Any]:
    """Tune, sample, persist, and summarize one experiment.

    Args:
        config: validated experiment description.
        output_dir: overrides config.output_dir when given.

    Returns:
        The run summary dict; files land under the output directory.
    """
    out = output_dir if output_dir is not None else config.output_dir
    if out is None:
        raise ValueError("no output directory: set [experiment] output_dir or pass one explicitly")
    run_path = Path(out)
    run_path.mkdir(parents=True, exist_ok=True)

    timings: dict[str, float] = {}
    t_start = time.perf_counter()

    truths = compute_ground_truth(config)
    if truths:
        payload: dict[str, Any] = {"schema_version": SCHEMA_VERSION}
        for name, gt in truths.items():
            payload[name] = {"value": gt.value, "method": gt.method, "tolerance": 1e-9}
        _json_dump(run_path / "truth.json", payload)

    t0 = time.perf_counter()
    resolved = resolve_step_sizes(config)
    timings["tuning"] = time.perf_counter() - t0

    counters: dict[str, Any] = {}
    workers = resolve_worker_count(config.chains)
    for spec in config.kernels:
        t0 = time.perf_counter()
        steps, stride = _chain_plan(asdict(spec), config.iterations, config.thin)
        tasks = [{
            "domain": config.domain, "target": config.target, "spec": spec,
            "h_resolved": resolved[spec.name]["h_max"], "steps": steps, "stride": stride,
            "master_seed": config.master_seed, "experiment_id": config.experiment_id,
            "chain_index": c, "initial_point": config.initial_point,
        } for c in range(config.chains)]

        if workers == 1:
            results = [_run_chain_task(t) for t in tasks]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_run_chain_task, tasks))

        kdir = run_path / spec.name
        kdir.mkdir(exist_ok=True)
        for res in results:
            _write_chain_csv(kdir / f"chain_{res['chain_index']:04d}.csv", res)
        counters[spec.name] = {"per_chain": [r["counters"] for r in results]}
        timings[spec.name] = time.perf_counter() - t0

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "config": _manifest_config_dict(config, resolved),
        "counters": counters,
    }
    _json_dump(run_path / "manifest.json", manifest)

    summary = summarize_run(run_path, write_outputs=True)

    timings["total"] = time.perf_counter() - t_start
    _json_dump(run_path / "timing.json", {"seconds": {k: round(v, 3) for k, v in timings.items()}})
    return summary

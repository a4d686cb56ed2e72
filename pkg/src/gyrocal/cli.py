"""Command-line entry points.

Four subcommands cover the workflow end to end: ``simulate`` runs
Monte-Carlo campaigns and writes their artifacts, ``calibrate`` turns a
recorded session log into parameter JSON, ``compare`` diffs two
parameter files the way published result tables do, and ``verify`` runs
the built-in design and sensitivity property suites.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from typing import Sequence

import numpy as np
import yaml

from . import doe, observability
from .estimator import build_linear_system, calibrate, estimate_bias
from .model import AXES, CalibrationError, CalibrationParams, RotationObservation
from .session_io import read_session_log
from .simulator import SimulationConfig, run_monte_carlo

__all__ = ["main"]

PARAM_KEYS = tuple(f"k_{a}" for a in AXES) + tuple(f"b_{a}" for a in AXES)

_VERIFY_SEED = 20240817


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _load_simulation_configs(path: str | None, seed: int | None) -> list[SimulationConfig]:
    """Config file to campaign list; a noise_levels list fans out campaigns."""
    mapping: dict = {}
    noise_levels: list[float] = []
    if path is not None:
        with open(path, "r") as handle:
            loaded = yaml.safe_load(handle)
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise CalibrationError(f"config root must be a mapping, got {type(loaded).__name__}")
        mapping = dict(loaded)
        levels = mapping.pop("noise_levels", None)
        if levels is not None:
            if not isinstance(levels, (list, tuple)) or not levels:
                raise CalibrationError("noise_levels must be a non-empty list of numbers")
            noise_levels = [float(v) for v in levels]
    base = SimulationConfig.from_mapping(mapping)
    if seed is not None:
        base = dataclasses.replace(base, rng_seed=seed)
    if not noise_levels:
        return [base]
    return [dataclasses.replace(base, noise_sigma=level) for level in noise_levels]


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        configs = _load_simulation_configs(args.config, args.seed)
    except (OSError, yaml.YAMLError, CalibrationError, ValueError, TypeError) as exc:
        return _fail(f"bad simulation config: {exc}")
    os.makedirs(args.out, exist_ok=True)
    campaigns = {}
    for config in configs:
        report = run_monte_carlo(config)
        csv_name = f"replicates_sigma_{config.noise_sigma!r}.csv"
        report.write_replicates_csv(os.path.join(args.out, csv_name))
        campaigns[repr(config.noise_sigma)] = {
            "replicates_csv": csv_name,
            **report.summary(),
        }
        print(f"wrote {csv_name} ({len(report.records)} replicates, "
              f"{len(report.failures)} failures)")
    summary = {"rng_seed": configs[0].rng_seed, "campaigns": campaigns}
    summary_path = os.path.join(args.out, "summary.json")
    with open(summary_path, "w") as handle:
        json.dump(summary, handle, indent=2, sort_keys=True)
        handle.write("\n")
    print(f"wrote {os.path.basename(summary_path)}")
    return 0


def _calibration_payload(args: argparse.Namespace) -> dict:
    log = read_session_log(args.log)
    session = log.session()
    params = calibrate(
        session,
        noise_sigma=args.noise_sigma,
        motion_threshold=args.motion_threshold,
    )
    biases = estimate_bias(session.static_stage)
    system = build_linear_system(session.rotations, biases)
    stds = session.static_stage.stds
    rotations = []
    for tag, rot in zip(log.rotation_axes, session.rotations):
        corrected = rot.corrected_sums(params.biases)
        rotations.append(
            {
                "axis_tag": tag,
                "integrated_degrees": {a: float(corrected[i]) for i, a in enumerate(AXES)},
            }
        )
    payload: dict = dict(params.as_dict())
    payload["units"] = {"scale": "dimensionless", "bias": "deg/s", "rates": "deg/s"}
    payload["diagnostics"] = {
        "condition_number": float(np.linalg.cond(system.regressors)),
        "static_std": {a: float(stds[i]) for i, a in enumerate(AXES)} if stds is not None else None,
        "rotations": rotations,
        "saturated_samples": log.saturated_sample_count(),
        "device": log.device,
        "sample_rate": float(log.sample_rate),
    }
    return payload


def cmd_calibrate(args: argparse.Namespace) -> int:
    try:
        payload = _calibration_payload(args)
    except OSError as exc:
        return _fail(f"cannot read log: {exc}")
    except CalibrationError as exc:
        return _fail(str(exc))
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    if args.out is not None:
        with open(args.out, "w") as handle:
            handle.write(text + "\n")
    return 0


def _read_params_json(path: str) -> dict:
    with open(path, "r") as handle:
        data = json.load(handle)
    if not isinstance(data, dict):
        raise CalibrationError(f"{path}: expected a JSON object with parameter fields")
    missing = [k for k in PARAM_KEYS if k not in data]
    if missing:
        raise CalibrationError(f"{path}: missing parameter fields: {', '.join(missing)}")
    return {k: float(data[k]) for k in PARAM_KEYS}


def cmd_compare(args: argparse.Namespace) -> int:
    try:
        first = _read_params_json(args.first)
        second = _read_params_json(args.second)
    except (OSError, json.JSONDecodeError, CalibrationError, ValueError) as exc:
        return _fail(str(exc))
    label_a = os.path.splitext(os.path.basename(args.first))[0]
    label_b = os.path.splitext(os.path.basename(args.second))[0]
    print(f"{'parameter':<10} {label_a:>12} {label_b:>12} {'difference':>12}")
    flagged = 0
    for key in PARAM_KEYS:
        diff = second[key] - first[key]
        mark = ""
        if abs(diff) > args.threshold:
            mark = "  *"
            flagged += 1
        print(f"{key:<10} {first[key]:>12.4f} {second[key]:>12.4f} {diff:>12.4f}{mark}")
    if flagged:
        print(f"{flagged} difference(s) above threshold {args.threshold:g} (marked *)")
    else:
        print(f"all differences within threshold {args.threshold:g}")
    return 0


def _verify_doe() -> list[tuple[bool, str]]:
    checks = []
    canonical = doe.canonical_design()
    worst = doe.max_spv_sphere(canonical)
    checks.append(
        (
            abs(worst - 3.0) <= 1e-9,
            f"one-turn-per-axis design: worst-case prediction variance {worst!r} == 3",
        )
    )
    rng = np.random.default_rng(_VERIFY_SEED)
    points = rng.normal(size=(64, 3))
    points /= np.linalg.norm(points, axis=1, keepdims=True)
    sphere_ok = all(abs(doe.spv(canonical, p) - 3.0) <= 1e-9 for p in points)
    checks.append((sphere_ok, "prediction variance equals 3 everywhere on the unit sphere"))
    redundant = doe.Design(np.array([[1, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float))
    checks.append(
        (
            doe.max_spv_sphere(redundant) > 3.0 + 1e-9,
            "a redundant fourth rotation pushes the worst case above 3",
        )
    )
    shrunk = doe.Design(0.5 * np.eye(3))
    checks.append(
        (
            abs(doe.max_spv_sphere(shrunk) - 12.0) <= 1e-9,
            "half-magnitude rotations quadruple the worst case",
        )
    )
    return checks


def _verify_observability() -> list[tuple[bool, str]]:
    checks = []
    rng = np.random.default_rng(_VERIFY_SEED)
    worst_rel = 0.0
    for _ in range(25):
        nominal = CalibrationParams.from_arrays(
            rng.uniform(0.8, 1.2, 3), rng.uniform(-5.0, 5.0, 3)
        )
        rotations = [
            RotationObservation(
                sum_x=rng.uniform(-400.0, 400.0),
                sum_y=rng.uniform(-400.0, 400.0),
                sum_z=rng.uniform(-400.0, 400.0),
                theta_total=rng.uniform(300.0, 400.0),
                n_samples=500,
                duration=5.0,
            )
            for _ in range(3)
        ]
        analytic = np.concatenate(
            [
                observability.grad_scale(nominal, rotations),
                observability.grad_bias(nominal, rotations),
            ]
        )
        numeric = observability.finite_difference_grad(nominal, rotations, step=1e-5)
        scale = max(1.0, float(np.max(np.abs(analytic))))
        worst_rel = max(worst_rel, float(np.max(np.abs(analytic - numeric))) / scale)
    checks.append(
        (
            worst_rel < 1e-6,
            f"analytic gradients match central differences (worst relative error {worst_rel:.3g})",
        )
    )
    still = [
        RotationObservation(
            sum_x=0.0, sum_y=0.0, sum_z=0.0, theta_total=360.0, n_samples=300, duration=3.0
        )
    ]
    zero_bias = CalibrationParams(1.1, 0.9, 1.0, 0.0, 0.0, 0.0)
    checks.append(
        (
            np.all(observability.grad_scale(zero_bias, still) == 0.0)
            and np.all(observability.model_term_grad_scale(zero_bias, still) == 0.0),
            "a resting sensor with zero bias reveals nothing about scale",
        )
    )
    with_bias = CalibrationParams(1.1, 0.9, 1.0, 2.0, -3.0, 0.5)
    checks.append(
        (
            np.all(observability.grad_bias(with_bias, still) != 0.0)
            and np.all(observability.model_term_grad_bias(with_bias, still) != 0.0),
            "a resting sensor with nonzero bias still constrains the bias",
        )
    )
    return checks


def cmd_verify(args: argparse.Namespace) -> int:
    suites = {"doe": _verify_doe, "observability": _verify_observability}
    checks = suites[args.suite]()
    failures = 0
    for ok, message in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {message}")
        if not ok:
            failures += 1
    print(f"{len(checks) - failures}/{len(checks)} checks passed")
    return 0 if failures == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gyrocal",
        description="Triaxial gyroscope autocalibration from one still stage and three turns.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run Monte-Carlo calibration campaigns")
    p_sim.add_argument("--config", help="YAML campaign config (noise_levels fans out)")
    p_sim.add_argument("--seed", type=int, help="override the campaign RNG seed")
    p_sim.add_argument("--out", default=".", help="output directory (default: current)")
    p_sim.set_defaults(func=cmd_simulate)

    p_cal = sub.add_parser("calibrate", help="estimate parameters from a session log")
    p_cal.add_argument("log", help="session log CSV path")
    p_cal.add_argument(
        "--noise-sigma",
        type=float,
        default=0.15,
        help="expected rate noise (deg/s) for the stillness guard (default 0.15)",
    )
    p_cal.add_argument(
        "--motion-threshold",
        type=float,
        default=10.0,
        help="minimum integrated rotation (degrees) before a session counts as moved",
    )
    p_cal.add_argument("--out", help="also write the JSON to this file")
    p_cal.set_defaults(func=cmd_calibrate)

    p_cmp = sub.add_parser("compare", help="diff two parameter JSON files")
    p_cmp.add_argument("first", help="parameter JSON (reference column)")
    p_cmp.add_argument("second", help="parameter JSON (comparison column)")
    p_cmp.add_argument(
        "--threshold",
        type=float,
        default=0.03,
        help="flag differences whose magnitude exceeds this (default 0.03)",
    )
    p_cmp.set_defaults(func=cmd_compare)

    p_ver = sub.add_parser("verify", help="run built-in property suites")
    p_ver.add_argument("--suite", choices=("doe", "observability"), required=True)
    p_ver.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""Config-driven command line for simulation, analysis and verification runs.

Commands:
    weakvalue   analytic weak values and conditional probabilities per angle
    simulate    pointer evolution + counting statistics -> scan CSV files
    analyze     bootstrap + weak-value estimation + systematic band -> results
    g2          heralded-source event simulation -> g2 with counting error
    sweep       parameter sweep (theta | g | sigma) -> transition table CSV

Every command is a pure function of (config, seed): re-running with the same
inputs produces byte-identical output files. Exit codes: 0 success, 2 config
error, 3 missing input, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis as ana
from . import detection as det
from . import pointer as ptr
from . import quantum as qm
from .config import ExperimentConfig
from .errors import (
    ConfigError,
    MissingReference,
    OrthogonalPostSelection,
    SimulationError,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MISSING = 3
EXIT_NUMERIC = 4


def _theta_tag(theta: float) -> str:
    return f"{theta:g}"


def scan_filename(theta: float, axis: str) -> str:
    return f"scan_theta{_theta_tag(theta)}_{axis}.csv"


def build_couplers(config: ExperimentConfig, g_x=None, g_y=None):
    gx = config.g_x if g_x is None else g_x
    gy = config.g_y if g_y is None else g_y
    return [
        ptr.CouplerSpec("spatial", "A", gy),
        ptr.CouplerSpec("diagonal", "B", gx),
    ]


def build_state(config: ExperimentConfig, theta: float, *, g_x=None, g_y=None, sigma=None):
    """Post-selected pointer state for one post-selection angle."""
    return ptr.evolve_and_postselect(
        qm.pre_state(),
        build_couplers(config, g_x, g_y),
        qm.post_state(theta),
        sigma=config.sigma if sigma is None else sigma,
        blocked_arm=config.blocked_arm,
        arm_phase=config.arm_phase,
    )


def _say(quiet: bool, text: str) -> None:
    if not quiet:
        print(text)


def cmd_weakvalue(config: ExperimentConfig, out_dir: Path, quiet: bool) -> int:
    """Analytic weak values and conditional outcome probabilities per angle."""
    ops = {
        "Y_A": qm.observable("spatial", "A"),
        "Y_B": qm.observable("spatial", "B"),
        "X_A": qm.observable("diagonal", "A"),
        "X_B": qm.observable("diagonal", "B"),
    }
    rows = []
    for theta in config.theta_list:
        pp = qm.pair(theta)
        try:
            values = {name: qm.weak_value(op, pp) for name, op in ops.items()}
            entry = {
                "theta_deg": theta,
                "weak_values": {
                    name: {"re": wv.real, "im": wv.imag} for name, wv in values.items()
                },
                "conditionals": {
                    "P(Y_A=1|post)": qm.abl_conditional(ops["Y_A"], 1.0, pp),
                    "P(Y_B=1|post)": qm.abl_conditional(ops["Y_B"], 1.0, pp),
                    "P(X_B=+1|post)": qm.abl_conditional(ops["X_B"], 1.0, pp),
                    "P(X_B=-1|post)": qm.abl_conditional(ops["X_B"], -1.0, pp),
                },
            }
        except OrthogonalPostSelection:
            entry = {"theta_deg": theta, "undefined": "orthogonal post-selection"}
        rows.append(entry)

    header = (
        f"{'theta':>8}  {'Y_A^w':>10}  {'Y_B^w':>10}  {'X_A^w':>10}  {'X_B^w':>10}"
        f"  {'P(Y_A=1)':>10}  {'P(Y_B=1)':>10}  {'P(X_B=+1)':>10}  {'P(X_B=-1)':>10}"
    )
    _say(quiet, header)
    for entry in rows:
        if "undefined" in entry:
            _say(quiet, f"{entry['theta_deg']:>8g}  undefined (orthogonal post-selection)")
            continue
        wv = entry["weak_values"]
        cond = entry["conditionals"]
        _say(
            quiet,
            f"{entry['theta_deg']:>8g}  "
            + "  ".join(f"{wv[n]['re']:>10.6f}" for n in ("Y_A", "Y_B", "X_A", "X_B"))
            + "  "
            + "  ".join(
                f"{cond[n]:>10.6f}"
                for n in ("P(Y_A=1|post)", "P(Y_B=1|post)", "P(X_B=+1|post)", "P(X_B=-1|post)")
            ),
        )

    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "weakvalues.json", "w", encoding="utf-8") as fh:
        json.dump({"schema_version": 1, "rows": rows}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK


def cmd_simulate(config: ExperimentConfig, out_dir: Path, quiet: bool) -> int:
    """Simulate scan records for every angle and both axes."""
    out_dir.mkdir(parents=True, exist_ok=True)
    for theta in config.theta_list:
        state = build_state(config, theta)
        scan = config.scan_config(theta)
        for axis in ("x", "y"):
            record = det.simulate_scan(state, scan, axis, config.scan_drift_model(axis), config.seed)
            path = out_dir / scan_filename(theta, axis)
            record.save_csv(path)
            _say(quiet, f"wrote {path} ({scan.repeats} repeats)")
    return EXIT_OK


def _load_record(out_dir: Path, theta: float, axis: str) -> det.ScanRecord:
    path = out_dir / scan_filename(theta, axis)
    if not path.exists():
        raise MissingReference(f"missing scan file: {path}")
    return det.ScanRecord.load_csv(path)


def cmd_analyze(config: ExperimentConfig, out_dir: Path, quiet: bool) -> int:
    """Bootstrap centers, weak-value estimates and systematic bands."""
    n_boot = config.analysis["n_bootstrap"]
    target = config.target_theta
    distributions = []
    dists = {}
    for theta in (target, 45.0, 90.0):
        for axis in ("x", "y"):
            record = _load_record(out_dir, theta, axis)
            dist = ana.bootstrap_centers(record, n_boot, config.seed)
            dists[(theta, axis)] = dist
            distributions.append(dist)

    estimates = {}
    draws = {}
    for axis in ("x", "y"):
        ref0 = dists[(45.0, axis)]
        ref1 = dists[(90.0, axis)]
        scale = abs(ana.reference_scale(ref0, ref1))
        drift_records = det.simulate_drift_run(
            config.drift_scan_config(),
            config.drift_model(axis),
            config.drift["n_profiles"],
            config.seed,
            axis=axis,
            sigma=config.sigma,
        )
        band = ana.systematic_band(drift_records, scale)
        estimates[axis] = ana.weak_value_estimate(dists[(target, axis)], ref0, ref1, sys_band=band)
        draws[axis] = ana.weak_value_draws(dists[(target, axis)], ref0, ref1)

    ana.export_results(out_dir, estimates, distributions, draws, config.seed, n_boot, target)
    for axis in ("x", "y"):
        est = estimates[axis]
        _say(
            quiet,
            f"{axis}: weak value = {est.mean:.3f} +/- {est.stat_sigma:.3f} (stat), "
            f"+/- {est.sys_band:.3f} (sys), n = {est.n_samples}",
        )
    _say(quiet, f"wrote {out_dir / 'summary.json'}")
    return EXIT_OK


def cmd_g2(config: ExperimentConfig, out_dir: Path, quiet: bool) -> int:
    """Heralded-source simulation and the g2 statistic."""
    source = config.source_model()
    counts = det.simulate_heralded_counts(source, config.seed)
    value = det.g2_statistic(counts)
    sigma = det.g2_counting_sigma(counts)
    _say(
        quiet,
        f"g2 = {value:.4f} +/- {sigma:.4f} "
        f"(N(R)={counts.n_reference}, C1={counts.c1}, C2={counts.c2}, triples={counts.triple})",
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "schema_version": 1,
        "seed": config.seed,
        "g2": value,
        "counting_sigma": sigma,
        "counts": {
            "n_reference": counts.n_reference,
            "c1": counts.c1,
            "c2": counts.c2,
            "triple": counts.triple,
        },
        "source": dict(config.source),
    }
    with open(out_dir / "g2.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK


def _sweep_values(args) -> np.ndarray:
    if args.stop <= args.start or args.num < 2:
        raise ConfigError("sweep range: need stop > start and at least 2 points")
    return np.linspace(args.start, args.stop, args.num)


def cmd_sweep(config: ExperimentConfig, out_dir: Path, quiet: bool, args) -> int:
    """Sweep theta, g (both couplers) or sigma; report the x-axis pointer.

    Columns: parameter value, analytic weak value (diagonal polarization on
    arm B), exact x centroid, first-order shift g * Re(w). Undefined weak
    values (orthogonal post-selection) are written as nan.
    """
    values = _sweep_values(args)
    x_b = qm.observable("diagonal", "B")
    rows = []
    for v in values:
        theta = v if args.parameter == "theta" else config.target_theta
        g_x = v if args.parameter == "g" else config.g_x
        g_y = v if args.parameter == "g" else config.g_y
        sigma = v if args.parameter == "sigma" else config.sigma
        pp = qm.pair(theta)
        try:
            wv = qm.weak_value(x_b, pp)
            first = ptr.first_order_shift(wv, g_x)
            wv_re = wv.real
        except OrthogonalPostSelection:
            wv_re = float("nan")
            first = float("nan")
        state = build_state(config, theta, g_x=g_x, g_y=g_y, sigma=sigma)
        centroid = ptr.centroid_exact(state, "x")
        rows.append((float(v), wv_re, centroid, first))

    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"sweep_{args.parameter}.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"{args.parameter},weak_value,centroid_um,first_order_um\n")
        for v, w, c, f in rows:
            fh.write(f"{v!r},{w!r},{c!r},{f!r}\n")
    _say(quiet, f"wrote {path} ({len(rows)} rows)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mzweak",
        description="Joint weak-measurement interferometer simulator",
    )
    parser.add_argument("--config", type=str, default=None, help="JSON config path (defaults reproduce the headline run)")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", type=str, default=None, help="override the config output directory")
    parser.add_argument("--theta", type=float, default=None, help="restrict theta_list to one angle")
    parser.add_argument("--quiet", action="store_true", help="suppress stdout reporting")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("weakvalue", help="analytic weak values per angle")
    sub.add_parser("simulate", help="simulate scan records")
    sub.add_parser("analyze", help="bootstrap scans into weak values")
    sub.add_parser("g2", help="heralded-source g2 simulation")
    sweep = sub.add_parser("sweep", help="parameter sweep table")
    sweep.add_argument("--parameter", choices=("theta", "g", "sigma"), required=True)
    sweep.add_argument("--start", type=float, required=True)
    sweep.add_argument("--stop", type=float, required=True)
    sweep.add_argument("--num", type=int, default=7)
    return parser


def _load_config(args) -> ExperimentConfig:
    if args.config is None:
        config = ExperimentConfig.from_dict({})
    else:
        config = ExperimentConfig.from_file(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.theta is not None:
        overrides["theta_list"] = (float(args.theta),)
    if overrides:
        import dataclasses

        config = dataclasses.replace(config, **overrides)
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        out_dir = Path(config.output_dir)
        if args.command == "weakvalue":
            return cmd_weakvalue(config, out_dir, args.quiet)
        if args.command == "simulate":
            return cmd_simulate(config, out_dir, args.quiet)
        if args.command == "analyze":
            return cmd_analyze(config, out_dir, args.quiet)
        if args.command == "g2":
            return cmd_g2(config, out_dir, args.quiet)
        if args.command == "sweep":
            return cmd_sweep(config, out_dir, args.quiet, args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MissingReference, FileNotFoundError) as exc:
        print(f"missing input: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except SimulationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

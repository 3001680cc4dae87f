"""Command-line entry point: ``cobot-inertia {simulate,identify,benchmark,diagnose,predict}``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .bench import SweepSpec, TrialSpec, predict_wrench, prepare_trial, run_sweep, trial_trajectory
from .discretization import ALL_CONFIGS, build_test_object, sample_points
from .estimation import (
    ESTIMATORS,
    ols_identify,
    pmd_identify,
    read_estimates_json,
    rtls_identify,
    stacked_regressor,
    write_reports_csv,
    write_reports_json,
)
from .metrics import (
    ObjectExtent,
    condition_number_scaled,
    error_metrics,
    gravity_dominance,
    kernel_invariance_check,
    reduced_rank_diagnostics,
)
from .signals import (
    NOISE_PRESETS,
    KalmanConfig,
    kalman_smooth,
    read_stream_csv,
    simulate_measurements,
    write_stream_csv,
)

OBJECTS = [c.value for c in ALL_CONFIGS]

# TrialSpec fields exposed as flags: (flag, type, help)
TRIAL_FLAGS = (
    ("object", str, "test object configuration"),
    ("density", float, "point density (points per cm^3)"),
    ("speed", float, "target average angular speed (rad/s)"),
    ("duration", float, "trajectory duration (s)"),
    ("rate", float, "sample rate (Hz)"),
    ("noise", str, "noise level"),
    ("motion", str, "continuous or stop_and_go"),
    ("c1", float, "PMD weight scale"),
    ("lam", float, "PMD Tikhonov factor"),
    ("moment_reference", str, "PMD moment reference: sensor or world"),
    ("observations", int, "observation cap"),
    ("seed", int, "noise seed"),
)


def _add_trial_flags(parser, seed_required=False):
    parser.add_argument("--config", type=Path, help="JSON document with trial fields")
    for name, typ, text in TRIAL_FLAGS:
        kw = {"type": typ, "help": text}
        if name == "object":
            kw["choices"] = OBJECTS
        if name == "noise":
            kw["choices"] = list(NOISE_PRESETS)
        if name == "seed" and seed_required:
            kw["required"] = True
        parser.add_argument("--" + name.replace("_", "-"), dest=name, **kw)
    parser.add_argument("--estimators", nargs="+", choices=ESTIMATORS, help="estimators to run")


def _load_json(path):
    return json.loads(Path(path).read_text()) if path else {}


def _trial_from_args(args, base=None):
    doc = dict(base or {})
    doc.update(_load_json(getattr(args, "config", None)))
    for name, _, _ in TRIAL_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            doc[name] = value
    if getattr(args, "estimators", None):
        doc["estimators"] = tuple(args.estimators)
    return TrialSpec.from_dict(doc)


def _dump(obj, path=None):
    text = json.dumps(obj, indent=2, default=float)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


# -- subcommands -----------------------------------------------------------------


def cmd_simulate(args):
    spec = _trial_from_args(args)
    traj = trial_trajectory(spec)
    truth = build_test_object(spec.object)[1]
    states = traj.stream.stopped() if spec.motion == "stop_and_go" else traj.stream
    data = simulate_measurements(truth, states, spec.noise, seed=spec.seed)
    data.meta["trial"] = spec.to_dict()
    write_stream_csv(args.output, data)
    print(f"wrote {len(data)} samples to {args.output} (avg |omega| {traj.avg_ang_speed:.3f} rad/s)")
    return 0


def _points_for(args, meta):
    trial = meta.get("trial", {})
    obj = args.object or trial.get("object")
    if obj is None:
        raise SystemExit("identify: pass --object (the dataset names none)")
    density = args.density or trial.get("density", 0.04)
    shape, truth = build_test_object(obj)
    return shape, truth, sample_points(shape, density)


def cmd_identify(args):
    stream = read_stream_csv(args.dataset)
    spec = _trial_from_args(args, base=stream.meta.get("trial"))
    shape, truth, points = _points_for(args, stream.meta)
    start = 0
    if not args.no_filter:
        result = kalman_smooth(stream, KalmanConfig.for_noise(spec.noise))
        stream = result.stream
        start = result.stabilized_index()
    if args.start is not None:
        start = args.start
    stop = None if spec.observations is None else start + spec.observations
    batch = stream.window(start, stop)
    reports = []
    for name in spec.estimators:
        if name == "PMD":
            reports.append(pmd_identify(batch, points, spec.pmd_config))
        elif name == "OLS":
            reports.append(ols_identify(batch))
        else:
            reports.append(rtls_identify(batch, forgetting=spec.rtls_forgetting))
    extent = ObjectExtent.of(shape)
    for rep in reports:
        line = f"{rep.estimator:5s} mass={rep.theta.mass if rep.theta else float('nan'):.4f} kg"
        line += f"  consistent={rep.consistent}  time={rep.wall_time * 1e3:.1f} ms"
        if rep.theta is not None:
            err = error_metrics(rep.theta, truth, extent)
            line += f"  err mass/com/inertia = {err.mass_err:.2f}/{err.com_avg:.2f}/{err.inertia_avg:.1f} %"
        print(line)
    meta = {"dataset": str(args.dataset), "window_start": start, "observations": len(batch), "trial": spec.to_dict()}
    if args.output:
        if str(args.output).endswith(".csv"):
            write_reports_csv(args.output, reports)
        else:
            write_reports_json(args.output, reports, meta)
    return 0


def _sweep_from_args(args):
    doc = _load_json(args.config)
    grid = dict(doc.get("grid", {}))
    for flag, axis in (("objects", "object"), ("speeds", "speed"), ("noises", "noise"),
                       ("densities", "density"), ("c1s", "c1")):
        values = getattr(args, flag)
        if values:
            grid[axis] = values
    base = dict(doc.get("base", {}))
    if args.checkpoints:
        base["checkpoints"] = args.checkpoints
        base["observations"] = None
    if args.estimators:
        base["estimators"] = args.estimators
    return SweepSpec(
        base=TrialSpec.from_dict(base),
        grid=grid,
        repetitions=args.repetitions or doc.get("repetitions", 1),
        seed=args.seed,
        workers=args.workers or doc.get("workers", 1),
    )


def cmd_benchmark(args):
    spec = _sweep_from_args(args)
    result = run_sweep(spec, args.output_dir)
    failures = sum(r["status"] != "ok" for r in result.rows)
    print(f"{len(spec.cells())} cells, {len(result.rows)} rows, {failures} estimator failures")
    for entry in result.summary:
        keys = {k: v for k, v in entry.items() if k not in ("runs", "failures", "consistent_rate",
                                                          "mass_err", "com_err", "inertia_err",
                                                          "wall_time", "condition_number")}
        print(f"{keys}: mass {entry['mass_err']:.2f}%  com {entry['com_err']:.2f}%  "
              f"inertia {entry['inertia_err']:.1f}%  consistent {entry['consistent_rate']:.0%}")
    for name, path in result.paths.items():
        print(f"{name}: {path}")
    return 0


def cmd_diagnose(args):
    spec = _trial_from_args(args)
    shape, truth, points, traj, data, start = prepare_trial(spec)
    stop = None if spec.observations is None else start + spec.observations
    batch = data.window(start, stop)
    cond = condition_number_scaled(stacked_regressor(batch))
    step = max(1, len(traj.stream) // 50)
    poses = list(zip(traj.stream.rotation[::step], traj.stream.translation[::step]))
    rank = reduced_rank_diagnostics(points, poses)
    masses = np.full(len(points), truth.mass / len(points))
    kernel = kernel_invariance_check(rank.kernel, points, masses)
    dom = gravity_dominance()
    report = {
        "trial": spec.to_dict(),
        "n_points": len(points),
        "condition_number": cond.kappa,
        "zero_columns": list(cond.zero_columns),
        "achieved_ang_speed": traj.avg_ang_speed,
        "achieved_lin_speed": traj.avg_lin_speed,
        "reduced_rank": rank.rank,
        "kernel_dimension": int(rank.kernel.shape[1]),
        "points_coplanar": rank.coplanar,
        "kernel_conserves_mass_and_com": kernel.conserves_mass_and_com,
        "kernel_moves_inertia": kernel.inertia_unidentifiable,
        "gravity_dominance": {"force": dom.force_ratio, "torque": dom.torque_ratio, "ratio": dom.ratio},
    }
    _dump(report, args.output)
    return 0


def cmd_predict(args):
    estimates = read_estimates_json(args.estimate)
    if args.estimator not in estimates:
        raise SystemExit(f"predict: no finite {args.estimator} estimate in {args.estimate}")
    spec = _trial_from_args(args)
    if args.dataset:
        stream = read_stream_csv(args.dataset)
        obj = args.object or stream.meta.get("trial", {}).get("object", spec.object)
    else:
        stream = trial_trajectory(spec).stream
        obj = spec.object
    truth = build_test_object(obj)[1]
    pred = predict_wrench(estimates[args.estimator], stream, truth)
    names = ["fx", "fy", "fz", "tx", "ty", "tz"]
    for n, e, r in zip(names, pred.rmse, pred.rms_reference):
        print(f"{n}: rmse {e:.4g}  reference rms {r:.4g}")
    if args.output:
        rows = list(pred.rows())
        with open(args.output, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="cobot-inertia", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a measurement stream to CSV")
    _add_trial_flags(p)
    p.add_argument("--output", "-o", type=Path, required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("identify", help="run estimators on a stream CSV")
    p.add_argument("dataset", type=Path)
    _add_trial_flags(p)
    p.add_argument("--no-filter", action="store_true", help="use the stream as is, no Kalman filter")
    p.add_argument("--start", type=int, help="first sample of the window")
    p.add_argument("--output", "-o", type=Path, help="report file (.json or .csv)")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("benchmark", help="run a parameter sweep")
    p.add_argument("--config", type=Path, help="JSON sweep document (base, grid, repetitions, workers)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--objects", nargs="+", choices=OBJECTS)
    p.add_argument("--speeds", nargs="+", type=float)
    p.add_argument("--noises", nargs="+", choices=list(NOISE_PRESETS))
    p.add_argument("--densities", nargs="+", type=float)
    p.add_argument("--c1s", nargs="+", type=float)
    p.add_argument("--checkpoints", nargs="+", type=float, help="error-vs-time checkpoints (s)")
    p.add_argument("--estimators", nargs="+", choices=ESTIMATORS)
    p.add_argument("--repetitions", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--output-dir", type=Path)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("diagnose", help="conditioning and observability report")
    _add_trial_flags(p)
    p.add_argument("--output", "-o", type=Path)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("predict", help="predict wrenches from an estimate report")
    p.add_argument("estimate", type=Path, help="JSON report written by identify")
    p.add_argument("--estimator", default="PMD", choices=ESTIMATORS)
    p.add_argument("--dataset", type=Path, help="stream CSV to predict along")
    _add_trial_flags(p)
    p.add_argument("--output", "-o", type=Path, help="series CSV")
    p.set_defaults(func=cmd_predict)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

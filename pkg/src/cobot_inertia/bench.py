"""Experiment harness: reproducible trials, parameter sweeps and wrench prediction.

A trial builds one test object, simulates one measurement stream and hands
exactly the same batch to every selected estimator. A sweep is the cartesian
product of trial fields, written out as a tidy results table plus per-cell
means and plot-ready series.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .discretization import ALL_CONFIGS, build_test_object, sample_points
from .estimation import (
    ESTIMATORS,
    PMDConfig,
    ols_identify,
    pmd_identify,
    rtls_identify,
    stacked_regressor,
)
from .metrics import ObjectExtent, condition_number_scaled, error_metrics
from .rigid_body import GRAVITY, InertialParams
from .signals import (
    NOISE_PRESETS,
    KalmanConfig,
    TrajectoryConfig,
    calibrate_speed,
    default_chain,
    generate_trajectory,
    kalman_smooth,
    simulate_measurements,
    true_wrenches,
)

RESULTS_SCHEMA = "cobot-inertia-results/1"
MOTIONS = ("continuous", "stop_and_go")


@dataclass(frozen=True)
class TrialSpec:
    """Everything needed to reproduce one trial.

    ``speed`` is the target average angular speed (rad/s) of the trajectory.
    ``observations`` caps the number of samples handed to the estimators;
    the window starts at ``start`` (a sample index, or ``"stabilized"`` for
    the point where the Kalman filter covariance has settled). With
    ``checkpoints`` (seconds) the estimators are rerun on growing prefixes of
    the stream instead, one row per checkpoint.
    """

    object: str = "Hammer"
    density: float = 0.04
    speed: float = 1.0
    duration: float = 35.0
    rate: float = 100.0
    noise: str = "Moderate"
    motion: str = "continuous"
    filtered: bool = True
    estimators: tuple = ESTIMATORS
    c1: float = 300.0
    lam: float = 0.1
    moment_reference: str = "sensor"
    rtls_forgetting: float = 0.999
    observations: int | None = 150
    start: int | str = "stabilized"
    checkpoints: tuple = ()
    seed: int = 0
    output_dir: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "estimators", tuple(self.estimators))
        object.__setattr__(self, "checkpoints", tuple(float(c) for c in self.checkpoints))
        if self.object not in {c.value for c in ALL_CONFIGS}:
            raise ValueError(f"unknown object {self.object!r}")
        if self.noise not in NOISE_PRESETS:
            raise ValueError(f"unknown noise level {self.noise!r}")
        if self.motion not in MOTIONS:
            raise ValueError(f"motion must be one of {MOTIONS}")
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown or not self.estimators:
            raise ValueError(f"estimators must be a non-empty subset of {ESTIMATORS}")
        if self.density <= 0 or self.speed < 0 or self.duration <= 0 or self.rate <= 0:
            raise ValueError("density, duration and rate must be positive; speed non-negative")
        if self.observations is not None and self.observations < 2:
            raise ValueError("observation cap must be at least 2")
        if not (self.start == "stabilized" or (isinstance(self.start, int) and self.start >= 0)):
            raise ValueError("start must be a non-negative index or 'stabilized'")
        if any(c <= 0 for c in self.checkpoints):
            raise ValueError("checkpoints must be positive times")
        if self.checkpoints and self.motion == "stop_and_go":
            raise ValueError("checkpoints apply to continuous motion only")
        PMDConfig(c1=self.c1, lam=self.lam, moment_reference=self.moment_reference)

    @property
    def pmd_config(self):
        return PMDConfig(c1=self.c1, lam=self.lam, moment_reference=self.moment_reference)

    def to_dict(self):
        d = asdict(self)
        d["estimators"] = list(self.estimators)
        d["checkpoints"] = list(self.checkpoints)
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown trial fields: {sorted(extra)}")
        return cls(**d)


@dataclass(frozen=True)
class SweepSpec:
    """Cartesian grid over :class:`TrialSpec` fields.

    Repetition ``r`` of every cell uses trial seed ``seed + r``, so all cells
    of one repetition see the same noise draws.
    """

    base: TrialSpec = field(default_factory=TrialSpec)
    grid: dict = field(default_factory=dict)
    repetitions: int = 1
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        grid = {k: tuple(v) for k, v in dict(self.grid).items()}
        known = {f.name for f in fields(TrialSpec)} - {"seed", "output_dir"}
        bad = set(grid) - known
        if bad:
            raise ValueError(f"cannot sweep over {sorted(bad)}")
        if any(len(v) == 0 for v in grid.values()):
            raise ValueError("grid axes must be non-empty")
        if self.repetitions < 1 or self.workers < 1:
            raise ValueError("repetitions and workers must be at least 1")
        object.__setattr__(self, "grid", grid)

    def cells(self):
        """All trial specs, keyed by a stable cell id."""
        axes = list(self.grid)
        out = []
        for rep in range(self.repetitions):
            for values in itertools.product(*(self.grid[a] for a in axes)):
                spec = replace(self.base, seed=self.seed + rep, **dict(zip(axes, values)))
                out.append((len(out), spec))
        return out

    def to_dict(self):
        return {
            "base": self.base.to_dict(),
            "grid": {k: list(v) for k, v in self.grid.items()},
            "repetitions": self.repetitions,
            "seed": self.seed,
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        base = TrialSpec.from_dict(d.pop("base", {}))
        return cls(base=base, **d)


# -- trials --------------------------------------------------------------------


@lru_cache(maxsize=64)
def _trajectory_config(speed, duration, rate):
    cfg = TrajectoryConfig(duration=duration, rate=rate)
    return calibrate_speed(default_chain(), cfg, speed)


def trial_trajectory(spec):
    """Noise-free trajectory of a trial at its calibrated speed."""
    return generate_trajectory(default_chain(), _trajectory_config(spec.speed, spec.duration, spec.rate))


def _stream_digest(stream):
    h = hashlib.sha256()
    for arr in (stream.t, stream.rotation, stream.translation, stream.lin_vel, stream.ang_vel,
                stream.lin_acc, stream.ang_acc, stream.force, stream.torque):
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()[:16]


def _evenly_spaced(n_total, n_keep):
    if n_keep is None or n_keep >= n_total:
        return np.arange(n_total)
    return np.unique(np.round(np.linspace(0, n_total - 1, n_keep)).astype(int))


def prepare_trial(spec):
    """Object, point cloud, trajectory and the shared measurement stream of a trial."""
    shape, truth = build_test_object(spec.object)
    points = sample_points(shape, spec.density)
    traj = trial_trajectory(spec)
    start = 0
    if spec.motion == "stop_and_go":
        keep = _evenly_spaced(len(traj.stream), spec.observations)
        states = traj.stream.stopped()
        for name in ("t", "rotation", "translation", "lin_vel", "ang_vel", "lin_acc", "ang_acc"):
            setattr(states, name, getattr(states, name)[keep])
        data = simulate_measurements(truth, states, spec.noise, seed=spec.seed)
    else:
        data = simulate_measurements(truth, traj.stream, spec.noise, seed=spec.seed)
        if spec.filtered:
            result = kalman_smooth(data, KalmanConfig.for_noise(spec.noise))
            data = result.stream
            start = result.stabilized_index() if spec.start == "stabilized" else spec.start
        elif spec.start != "stabilized":
            start = spec.start
    if start >= len(data) - 1:
        raise ValueError("window start leaves fewer than two samples")
    return shape, truth, points, traj, data, start


def _run_estimator(name, batch, points, spec):
    if name == "PMD":
        return pmd_identify(batch, points, spec.pmd_config)
    if name == "OLS":
        return ols_identify(batch)
    return rtls_identify(batch, forgetting=spec.rtls_forgetting)


def _horizons(spec, data, start):
    if spec.checkpoints:
        return [(c, int(round(c * spec.rate))) for c in spec.checkpoints]
    if spec.motion == "stop_and_go":
        return [(None, len(data))]
    n = len(data) - start if spec.observations is None else spec.observations
    return [(None, n)]


def run_trial(spec):
    """Run every selected estimator on one shared dataset; one row per estimator (and checkpoint)."""
    shape, truth, points, traj, data, start = prepare_trial(spec)
    extent = ObjectExtent.of(shape)
    rows = []
    for horizon, n_obs in _horizons(spec, data, start):
        batch = data if spec.motion == "stop_and_go" else data.window(start, start + n_obs)
        try:
            kappa = condition_number_scaled(stacked_regressor(batch)).kappa
        except ValueError:
            kappa = float("nan")
        digest = _stream_digest(batch)
        wa, va = batch.average_speeds() if spec.motion == "continuous" else (0.0, 0.0)
        common = {
            "object": spec.object,
            "density": spec.density,
            "n_points": len(points),
            "speed": spec.speed,
            "achieved_ang_speed": traj.avg_ang_speed,
            "achieved_lin_speed": traj.avg_lin_speed,
            "window_ang_speed": wa,
            "window_lin_speed": va,
            "noise": spec.noise,
            "motion": spec.motion,
            "c1": spec.c1,
            "lam": spec.lam,
            "seed": spec.seed,
            "window_start": start,
            "observations": len(batch),
            "horizon": horizon if horizon is not None else len(batch) / spec.rate,
            "condition_number": kappa,
            "data_digest": digest,
        }
        for name in spec.estimators:
            row = dict(common, estimator=name)
            try:
                report = _run_estimator(name, batch, points, spec)
                if report.theta is None:
                    raise RuntimeError("estimator produced no estimate")
                err = error_metrics(report.theta, truth, extent)
                row.update(
                    status="ok",
                    error="",
                    mass_err=err.mass_err,
                    com_err=err.com_avg,
                    inertia_err=err.inertia_avg,
                    wall_time=report.wall_time,
                    consistent=report.consistent,
                    min_eig=report.min_eig,
                )
                row.update({k: v for k, v in err.to_dict().items() if k not in row})
            except Exception as exc:  # a failing estimator must not abort the trial
                row.update(
                    status="failed",
                    error=f"{type(exc).__name__}: {exc}",
                    mass_err=float("nan"),
                    com_err=float("nan"),
                    inertia_err=float("nan"),
                    wall_time=float("nan"),
                    consistent=False,
                    min_eig=float("nan"),
                )
            rows.append(row)
    if spec.output_dir is not None:
        out = Path(spec.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_table(out / "trial.csv", rows, {"schema": RESULTS_SCHEMA, "trial": spec.to_dict()})
    return rows


# -- sweeps --------------------------------------------------------------------

TIMING_COLUMNS = ("wall_time",)
ERROR_COLUMNS = ("mass_err", "com_err", "inertia_err", "wall_time", "condition_number")

FIGURES = {
    "by_density": ("density",),
    "by_c1": ("c1",),
    "by_noise_speed": ("noise", "speed"),
    "by_horizon": ("horizon",),
}


def _cell_rows(item):
    cell_id, spec = item
    return [dict(cell=cell_id, **row) for row in run_trial(spec)]


def group_means(rows, keys):
    """Mean of the error columns over rows sharing ``keys`` (plus the estimator)."""
    groups = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys) + (row["estimator"],), []).append(row)
    out = []
    for key, members in groups.items():
        ok = [r for r in members if r["status"] == "ok"]
        entry = dict(zip(list(keys) + ["estimator"], key))
        entry["runs"] = len(members)
        entry["failures"] = len(members) - len(ok)
        entry["consistent_rate"] = float(np.mean([r["consistent"] for r in members]))
        for col in ERROR_COLUMNS:
            vals = [r[col] for r in ok]
            entry[col] = float(np.mean(vals)) if vals else float("nan")
        out.append(entry)
    return out


@dataclass
class SweepResult:
    rows: list
    summary: list
    figures: dict
    paths: dict = field(default_factory=dict)


def run_sweep(spec, output_dir=None):
    """Run every cell of ``spec``; write results, summaries and figure series if asked."""
    cells = spec.cells()
    if spec.workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            chunks = list(pool.map(_cell_rows, cells))
    else:
        chunks = [_cell_rows(c) for c in cells]
    rows = [row for chunk in chunks for row in chunk]
    axes = [a for a in spec.grid if a not in ("estimators", "checkpoints")]
    if spec.base.checkpoints or "checkpoints" in spec.grid:
        axes.append("horizon")
    summary = group_means(rows, axes)
    figures = {}
    for name, keys in FIGURES.items():
        if all(k in axes for k in keys):
            figures[name] = group_means(rows, list(keys))
    result = SweepResult(rows, summary, figures)
    if output_dir is not None:
        result.paths = write_sweep(result, spec, output_dir)
    return result


def _write_table(path, rows, header_comment=None):
    keys = list(dict.fromkeys(k for row in rows for k in row))
    with open(path, "w", newline="") as fh:
        if header_comment is not None:
            fh.write("# " + json.dumps(header_comment, sort_keys=True) + "\n")
        w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def write_sweep(result, spec, output_dir):
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = {"schema": RESULTS_SCHEMA, "sweep": spec.to_dict()}
    paths = {"results": out / "results.csv", "summary": out / "summary.csv", "summary_json": out / "summary.json"}
    _write_table(paths["results"], result.rows, header)
    _write_table(paths["summary"], result.summary, header)
    paths["summary_json"].write_text(json.dumps({**header, "cells": result.summary}, indent=2))
    for name, table in result.figures.items():
        paths[name] = out / f"{name}.csv"
        _write_table(paths[name], table, header)
    return paths


def read_results(path):
    """Header metadata and rows of a results table written by :func:`run_sweep`."""
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise ValueError("missing results header")
        meta = json.loads(first[1:])
        if meta.get("schema") != RESULTS_SCHEMA:
            raise ValueError(f"unsupported results schema {meta.get('schema')!r}")
        rows = list(csv.DictReader(fh))
    return meta, rows


# -- wrench prediction --------------------------------------------------------


@dataclass
class WrenchPrediction:
    t: np.ndarray
    predicted: np.ndarray  # (M, 6) force then torque, body frame
    reference: np.ndarray
    rmse: np.ndarray       # per axis
    rms_reference: np.ndarray

    @property
    def relative_torque_rmse(self):
        """Torque RMSE over the RMS amplitude of the reference torque, per axis."""
        ref = np.where(self.rms_reference[3:] > 0, self.rms_reference[3:], np.nan)
        return self.rmse[3:] / ref

    def rows(self):
        names = ["fx", "fy", "fz", "tx", "ty", "tz"]
        for k, t in enumerate(self.t):
            row = {"t": float(t)}
            row.update({f"{n}_pred": float(v) for n, v in zip(names, self.predicted[k])})
            row.update({f"{n}_ref": float(v) for n, v in zip(names, self.reference[k])})
            yield row


def predict_wrench(theta_hat, trajectory, theta_ref, gravity=GRAVITY):
    """Wrenches along ``trajectory`` under an estimate and under reference parameters."""
    stream = getattr(trajectory, "stream", trajectory)
    if theta_hat is None:
        theta_hat = InertialParams(0.0, np.zeros(3), np.zeros(6))
    pred = np.hstack(true_wrenches(theta_hat, stream, gravity))
    ref = np.hstack(true_wrenches(theta_ref, stream, gravity))
    rmse = np.sqrt(np.mean((pred - ref) ** 2, axis=0))
    rms_ref = np.sqrt(np.mean(ref**2, axis=0))
    return WrenchPrediction(stream.t.copy(), pred, ref, rmse, rms_ref)


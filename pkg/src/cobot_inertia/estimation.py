"""Inertial parameter estimators: PMD, OLS and recursive TLS."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .discretization import PointMassModel, aggregate
from .rigid_body import (
    GRAVITY,
    PARAM_NAMES,
    InertialParams,
    full_regressor_batch,
    min_pseudo_inertia_eig,
    point_params,
    wrench_adjoint_batch,
    CONSISTENCY_TOL,
)
from .signals import stream_dynamism


@dataclass(frozen=True)
class PMDConfig:
    c1: float = 300.0
    lam: float = 0.1
    s: float = 3.0
    n1: float = 1.0
    n2: float = 1.0
    n3: float = 0.5
    tol: float = 1e-8
    max_iter: int | None = None
    moment_reference: str = "sensor"

    def __post_init__(self):
        if self.moment_reference not in ("world", "sensor"):
            raise ValueError(f"unknown moment reference {self.moment_reference!r}")
        if self.c1 <= 0:
            raise ValueError("c1 must be positive")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")


def weight(D, config=PMDConfig()):
    """Share of the full model in the objective at dynamism ``D``."""
    D = np.asarray(D, dtype=float)
    if np.any(D < 0):
        raise ValueError("dynamism must be non-negative")
    w = np.tanh(config.s * D / config.c1)
    return float(w) if w.ndim == 0 else w


# -- non-negative least squares ------------------------------------------------


class NNLSConvergenceError(RuntimeError):
    def __init__(self, message, best):
        super().__init__(message)
        self.best = best


@dataclass
class NNLSResult:
    x: np.ndarray
    iterations: int
    kkt_residual: float
    gradient: np.ndarray


def kkt_residual(H, c, x):
    """Largest violation of the KKT conditions of ``min 0.5 x'Hx - c'x, x >= 0``."""
    g = H @ x - c
    free = x > 0
    viol = [np.max(np.abs(g[free]), initial=0.0), np.max(-g[~free], initial=0.0), np.max(-x, initial=0.0)]
    return float(max(viol)), g


def _solve_spd(H, c):
    try:
        return cho_solve(cho_factor(H, check_finite=False), c, check_finite=False)
    except LinAlgError:
        return np.linalg.lstsq(H, c, rcond=None)[0]


def nnls_gram(H, c, tol=1e-8, max_iter=None):
    """Active-set (Lawson-Hanson) NNLS on the normal equations ``H x = c``.

    ``max_iter`` caps outer iterations (default ``10 n``). The entry threshold
    on the negative gradient is ``tol`` scaled by ``max(1, |c|_inf)``.
    """
    H = np.asarray(H, dtype=float)
    c = np.asarray(c, dtype=float)
    n = len(c)
    if n == 0:
        raise ValueError("need at least one column")
    max_iter = 10 * n if max_iter is None else max_iter
    thresh = tol * max(1.0, float(np.max(np.abs(c))))
    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    skip = np.zeros(n, dtype=bool)
    it = 0
    while True:
        w = c - H @ x
        cand = ~passive & ~skip & (w > thresh)
        if not np.any(cand):
            break
        if it >= max_iter:
            res, g = kkt_residual(H, c, x)
            raise NNLSConvergenceError(
                f"NNLS hit the iteration cap ({max_iter})", NNLSResult(x, it, res, g)
            )
        it += 1
        j = int(np.argmax(np.where(cand, w, -np.inf)))
        passive[j] = True
        first = True
        while True:
            idx = np.flatnonzero(passive)
            s = np.zeros(n)
            s[idx] = _solve_spd(H[np.ix_(idx, idx)], c[idx])
            if np.all(s[idx] > 0):
                x = s
                skip[:] = False
                break
            if first and s[j] <= 0:
                # rounding made the entering column useless; bar it until x moves
                passive[j] = False
                skip[j] = True
                break
            first = False
            bad = idx[s[idx] <= 0]
            alpha = np.min(x[bad] / (x[bad] - s[bad]))
            x = x + alpha * (s - x)
            passive &= x > 0
            x[~passive] = 0.0
    idx = np.flatnonzero(passive)
    if len(idx):
        s = np.zeros(n)
        s[idx] = _solve_spd(H[np.ix_(idx, idx)], c[idx])
        if np.all(s[idx] >= 0):
            x = s
    res, g = kkt_residual(H, c, x)
    return NNLSResult(x, it, res, g)


def nnls_solve(design, target, lam=0.0, tol=1e-8, max_iter=None):
    """``argmin |design x - target|^2 + lam |x|^2`` subject to ``x >= 0``."""
    A = np.asarray(design, dtype=float)
    b = np.asarray(target, dtype=float).reshape(-1)
    if A.ndim != 2 or A.shape[1] < 1 or A.shape[0] != len(b):
        raise ValueError("design must be (rows, cols>=1) matching the target")
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    H = A.T @ A + lam * np.eye(A.shape[1])
    return nnls_gram(H, A.T @ b, tol, max_iter)


# -- reports -----------------------------------------------------------------


@dataclass
class EstimateReport:
    estimator: str
    theta: InertialParams | None
    wall_time: float
    iterations: int = 0
    mass_vector: np.ndarray | None = None
    weights: np.ndarray | None = None
    residual_norm: float = float("nan")
    flags: dict = field(default_factory=dict)
    history: np.ndarray | None = None
    consistent: bool = field(init=False)
    min_eig: float = field(init=False)

    def __post_init__(self):
        if self.theta is None:
            self.consistent, self.min_eig = False, float("nan")
        else:
            self.min_eig = min_pseudo_inertia_eig(self.theta)
            self.consistent = bool(self.min_eig >= -CONSISTENCY_TOL)

    def to_dict(self):
        d = {"estimator": self.estimator}
        vec = self.theta.vector() if self.theta is not None else np.full(10, np.nan)
        d.update({name: float(v) for name, v in zip(PARAM_NAMES, vec)})
        d.update(
            wall_time=self.wall_time,
            iterations=self.iterations,
            consistent=self.consistent,
            min_eig=self.min_eig,
            residual_norm=self.residual_norm,
        )
        d.update({f"flag_{k}": v for k, v in sorted(self.flags.items())})
        if self.mass_vector is not None:
            d["mass_vector"] = [float(m) for m in self.mass_vector]
        if self.weights is not None:
            d["mean_weight"] = float(np.mean(self.weights))
        return d


def _require_wrench(batch):
    if len(batch) == 0:
        raise ValueError("empty batch")
    if not batch.has_wrench:
        raise ValueError("batch carries no wrench measurements")


def stacked_regressor(batch, gravity=GRAVITY):
    """Body-frame regressor of every sample, shape (M, 6, 10)."""
    return full_regressor_batch(batch.rotation, batch.lin_acc, batch.ang_vel, batch.ang_acc, gravity)


def measured_wrench(batch):
    return np.concatenate([batch.force, batch.torque], axis=1)


# -- PMD ---------------------------------------------------------------------


def pmd_matrices(batch, points_body, gravity=GRAVITY, moment_reference="sensor"):
    """Reduced model, full model and wrench in world axes.

    Moments are taken about the world origin (``moment_reference="world"``)
    or about the moving sensor origin (``"sensor"``). Returns arrays of shape
    (M, 6, n), (M, 6, n) and (M, 6).
    """
    P = np.asarray(points_body, dtype=float)
    if P.ndim != 2 or P.shape[1] != 3 or len(P) == 0:
        raise ValueError("expected a non-empty (n, 3) array of points")
    g = np.asarray(gravity, dtype=float)
    if moment_reference == "world":
        origin = batch.translation
    elif moment_reference == "sensor":
        origin = np.zeros_like(batch.translation)
    else:
        raise ValueError(f"unknown moment reference {moment_reference!r}")
    X = wrench_adjoint_batch(batch.rotation, origin)
    A_full = X @ (stacked_regressor(batch, g) @ point_params(P))
    pw = np.einsum("kij,nj->kni", batch.rotation, P) + origin[:, None, :]
    A_red = np.empty_like(A_full)
    A_red[:, :3, :] = -g[None, :, None]
    A_red[:, 3:, :] = -np.swapaxes(np.cross(pw, g), 1, 2)
    b = np.einsum("kij,kj->ki", X, measured_wrench(batch))
    return A_red, A_full, b


def pmd_identify(batch, points_body, config=PMDConfig(), gravity=GRAVITY):
    """Point mass discretization estimate from a batch of measurements.

    Minimizes ``|diag(1-w)(A_r m - b)|^2 + |diag(w)(A_f m - b)|^2 + lam |m|^2``
    over ``m >= 0``, with one weight per timestep from its dynamism.
    """
    _require_wrench(batch)
    start = time.perf_counter()
    A_red, A_full, b = pmd_matrices(batch, points_body, gravity, config.moment_reference)
    w = weight(stream_dynamism(batch, config.n1, config.n2, config.n3), config)
    w = np.atleast_1d(w)
    wr, wf = (1.0 - w)[:, None, None] ** 2, w[:, None, None] ** 2
    n = A_red.shape[2]
    H = np.einsum("kin,kim->nm", wr * A_red, A_red) + np.einsum("kin,kim->nm", wf * A_full, A_full)
    H += config.lam * np.eye(n)
    c = np.einsum("kin,ki->n", wr * A_red, b) + np.einsum("kin,ki->n", wf * A_full, b)
    res = nnls_gram(H, c, config.tol, config.max_iter)
    m = res.x
    r_red = np.einsum("kin,n->ki", A_red, m) - b
    r_full = np.einsum("kin,n->ki", A_full, m) - b
    resid = float(np.sqrt(np.sum(((1 - w)[:, None] * r_red) ** 2) + np.sum((w[:, None] * r_full) ** 2)))
    flags = {"kkt_residual": res.kkt_residual}
    if np.any(m > 0):
        theta = aggregate(PointMassModel(points_body, m))
    else:
        theta = InertialParams(0.0, np.zeros(3), np.zeros(6))
        flags["zero_mass"] = True
    return EstimateReport(
        "PMD",
        theta,
        time.perf_counter() - start,
        iterations=res.iterations,
        mass_vector=m,
        weights=w,
        residual_norm=resid,
        flags=flags,
    )


# -- OLS ---------------------------------------------------------------------


def ols_identify(batch, gravity=GRAVITY, rcond=None):
    """Minimum-norm least squares on the stacked body-frame regressor."""
    _require_wrench(batch)
    start = time.perf_counter()
    A = stacked_regressor(batch, gravity).reshape(-1, 10)
    b = measured_wrench(batch).reshape(-1)
    x, _, rank, _ = np.linalg.lstsq(A, b, rcond=rcond)
    resid = float(np.linalg.norm(A @ x - b))
    return EstimateReport(
        "OLS",
        InertialParams.from_vector(x),
        time.perf_counter() - start,
        residual_norm=resid,
        flags={"rank": int(rank), "rank_deficient": bool(rank < 10)},
    )


# -- recursive total least squares -----------------------------------------------


class RecursiveTLS:
    """Total least squares on an exponentially forgotten moment matrix.

    Each update folds a block ``[A | b]`` into ``S = f S + [A b]^T [A b]``. The
    estimate is the eigenvector of ``S`` with the smallest eigenvalue (the
    right singular vector of the stacked data), dehomogenized by its last
    entry.
    """

    def __init__(self, n_params=10, forgetting=0.999, min_blocks=11, ambiguity_tol=1e-10):
        if not 0 < forgetting <= 1:
            raise ValueError("forgetting factor must be in (0, 1]")
        self.n_params = n_params
        self.forgetting = forgetting
        self.min_blocks = min_blocks
        self.ambiguity_tol = ambiguity_tol
        self.S = np.zeros((n_params + 1, n_params + 1))
        self.blocks = 0
        self.theta = None
        self.ambiguous = False

    def update(self, A, b):
        D = np.column_stack([np.atleast_2d(A), np.asarray(b, dtype=float).reshape(-1)])
        self.S = self.forgetting * self.S + D.T @ D
        self.blocks += 1
        if self.blocks < self.min_blocks:
            return self.theta
        evals, evecs = np.linalg.eigh(self.S)
        sv = np.sqrt(np.clip(evals, 0.0, None))
        v = evecs[:, 0]
        self.ambiguous = bool(sv[1] - sv[0] <= self.ambiguity_tol * max(sv[-1], 1.0) or abs(v[-1]) < 1e-12)
        if not self.ambiguous:
            self.theta = -v[:-1] / v[-1]
        return self.theta


def rtls_identify(batch, forgetting=0.999, gravity=GRAVITY, min_blocks=11):
    """Run :class:`RecursiveTLS` over a batch; the report keeps every step's estimate."""
    _require_wrench(batch)
    start = time.perf_counter()
    A = stacked_regressor(batch, gravity)
    b = measured_wrench(batch)
    tls = RecursiveTLS(forgetting=forgetting, min_blocks=min_blocks)
    history = np.full((len(batch), 10), np.nan)
    ambiguous_steps = 0
    for k in range(len(batch)):
        th = tls.update(A[k], b[k])
        ambiguous_steps += tls.ambiguous and tls.blocks >= min_blocks
        if th is not None:
            history[k] = th
    flags = {"ambiguous_steps": int(ambiguous_steps)}
    if tls.theta is None:
        flags["no_estimate"] = True
        theta = None
    else:
        theta = InertialParams.from_vector(tls.theta)
    return EstimateReport(
        "RTLS", theta, time.perf_counter() - start, iterations=len(batch), flags=flags, history=history
    )


ESTIMATORS = ("PMD", "OLS", "RTLS")


# -- report I/O ----------------------------------------------------------------

REPORT_SCHEMA = "cobot-inertia-estimate/1"


def write_reports_json(path, reports, meta=None):
    """Structured document: one entry per estimator, parameters as named fields."""
    doc = {"schema": REPORT_SCHEMA, "meta": dict(meta or {}), "estimates": [r.to_dict() for r in reports]}
    Path(path).write_text(json.dumps(doc, indent=2, default=_json_default))


def write_reports_csv(path, reports):
    rows = [{k: v for k, v in r.to_dict().items() if k != "mass_vector"} for r in reports]
    keys = list(dict.fromkeys(k for row in rows for k in row))
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        w.writerows(rows)


def read_estimates_json(path):
    """Map estimator name to :class:`InertialParams` from a report document."""
    doc = json.loads(Path(path).read_text())
    if doc.get("schema") != REPORT_SCHEMA:
        raise ValueError(f"unsupported report schema {doc.get('schema')!r}")
    out = {}
    for est in doc["estimates"]:
        vec = np.array([est[name] for name in PARAM_NAMES], dtype=float)
        if np.all(np.isfinite(vec)):
            out[est["estimator"]] = InertialParams.from_vector(vec)
    return out


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")

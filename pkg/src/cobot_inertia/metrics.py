"""Error metrics, conditioning and observability diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretization import PointMassModel, aggregate
from .rigid_body import GRAVITY, INERTIA_INDEX, reduced_regressor


@dataclass(frozen=True)
class ObjectExtent:
    """Bounding-box side lengths of the true object (m)."""

    a_x: float
    a_y: float
    a_z: float

    def __post_init__(self):
        if min(self.a_x, self.a_y, self.a_z) <= 0:
            raise ValueError("object extents must be positive")

    @classmethod
    def of(cls, shape):
        return cls(*map(float, shape.extent()))

    def array(self):
        return np.array([self.a_x, self.a_y, self.a_z])


@dataclass(frozen=True)
class ErrorReport:
    mass_err: float
    com_err: np.ndarray
    inertia_err: np.ndarray

    @property
    def com_avg(self):
        return float(np.mean(self.com_err))

    @property
    def inertia_avg(self):
        return float(np.mean(self.inertia_err))

    def to_dict(self):
        d = {"mass_err": self.mass_err, "com_err": self.com_avg, "inertia_err": self.inertia_avg}
        d.update({f"com_err_{ax}": float(e) for ax, e in zip("xyz", self.com_err)})
        d.update(
            {f"inertia_err_{'xyz'[i]}{'xyz'[j]}": float(e) for (i, j), e in zip(INERTIA_INDEX, self.inertia_err)}
        )
        return d


def inertia_scale(mass, extent):
    """Denominators of the inertia error: box-like moments from the bounding box."""
    a = extent.array()
    total = np.sum(a * a)
    out = np.empty(6)
    for k, (i, j) in enumerate(INERTIA_INDEX):
        out[k] = total - a[i] ** 2 if i == j else a[i] * a[j]
    return mass / 12.0 * out


def error_metrics(estimate, truth, extent):
    """Scale-invariant percentage errors of ``estimate`` against ``truth``.

    Mass is normalized by the true mass, COM per axis by the bounding box
    side, and each of the six inertia entries by the moment of a uniform box
    of the true mass and extent. Inertia entries are the parameter values
    about the frame origin.
    """
    if truth.mass <= 0:
        raise ValueError("true mass must be positive")
    if not isinstance(extent, ObjectExtent):
        extent = ObjectExtent(*extent)
    mass_err = abs(estimate.mass - truth.mass) / truth.mass * 100.0
    if estimate.mass == 0.0:
        com_err = np.full(3, np.inf)
    else:
        com_err = np.abs(estimate.com - truth.com) / extent.array() * 100.0
    inertia_err = np.abs(estimate.inertia - truth.inertia) / inertia_scale(truth.mass, extent) * 100.0
    return ErrorReport(float(mass_err), com_err, inertia_err)


# -- conditioning --------------------------------------------------------------


@dataclass(frozen=True)
class ConditionReport:
    kappa: float
    zero_columns: tuple
    singular: bool


def condition_number_scaled(A, zero_tol=1e-12):
    """Condition number after dividing every column by its norm.

    Zero columns are dropped and reported; a rank-deficient remainder yields
    ``inf`` with ``singular`` set.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim == 3:
        A = A.reshape(-1, A.shape[-1])
    if A.shape[0] < 10:
        raise ValueError("need at least 10 rows")
    norms = np.linalg.norm(A, axis=0)
    keep = norms > zero_tol * max(norms.max(), 1e-300)
    zero_cols = tuple(int(i) for i in np.flatnonzero(~keep))
    if not np.any(keep):
        return ConditionReport(float("inf"), zero_cols, True)
    sv = np.linalg.svd(A[:, keep] / norms[keep], compute_uv=False)
    if sv[-1] <= sv[0] * np.finfo(float).eps * max(A.shape):
        return ConditionReport(float("inf"), zero_cols, True)
    return ConditionReport(float(sv[0] / sv[-1]), zero_cols, False)


# -- gravity dominance ---------------------------------------------------------

# mean values for manipulation in activities of daily living
ADL_MEANS = {"a": 1.45, "omega": 1.08, "alpha": 11.34, "m": 0.257, "r": 0.081}


@dataclass(frozen=True)
class GravityDominance:
    force_ratio: float
    torque_ratio: float

    @property
    def ratio(self):
        return 0.5 * (self.force_ratio + self.torque_ratio)

    @property
    def gravity_only(self):
        return np.isinf(self.ratio)


def gravity_dominance(a=ADL_MEANS["a"], omega=ADL_MEANS["omega"], alpha=ADL_MEANS["alpha"],
                      m=ADL_MEANS["m"], r=ADL_MEANS["r"], g=9.81):
    """Ratio of gravitational to non-gravitational load for typical motion.

    The object is treated as its mass at lever arm ``r`` from the grasp:
    force ``m g`` against ``m a + m omega^2 r``, torque ``m g r`` against
    ``m a r + m r^2 alpha``. The reported ratio averages the two.
    """
    if min(m, r) <= 0 or min(a, omega, alpha) < 0:
        raise ValueError("statistics must be positive")
    f_dyn = m * a + m * omega**2 * r
    t_dyn = m * a * r + m * r * r * alpha
    f_ratio = np.inf if f_dyn == 0 else m * g / f_dyn
    t_ratio = np.inf if t_dyn == 0 else m * g * r / t_dyn
    return GravityDominance(float(f_ratio), float(t_ratio))


# -- observability of the reduced model --------------------------------------------


@dataclass
class RankReport:
    rank: int
    kernel: np.ndarray  # (n, n - rank), orthonormal columns
    singular_values: np.ndarray
    coplanar: bool
    degenerate: bool


def reduced_torque_stack(points_body, poses, gravity=GRAVITY):
    return np.vstack([reduced_regressor(points_body, R, t, gravity)[3:] for R, t in poses])


def reduced_rank_diagnostics(points_body, poses, gravity=GRAVITY, rel_tol=1e-9):
    """Numerical rank and kernel of the stacked reduced torque model."""
    P = np.asarray(points_body, dtype=float)
    poses = list(poses)
    if len(poses) < 2:
        raise ValueError("need at least two poses")
    A = reduced_torque_stack(P, poses, gravity)
    _, sv, Vt = np.linalg.svd(A, full_matrices=True)
    rank = int(np.sum(sv > rel_tol * sv[0])) if sv[0] > 0 else 0
    homog = np.vstack([P.T, np.ones(len(P))])
    hsv = np.linalg.svd(homog, compute_uv=False)
    coplanar = len(P) < 4 or hsv[min(3, len(hsv) - 1)] <= rel_tol * hsv[0]
    return RankReport(rank, Vt[rank:].T, sv, bool(coplanar), rank < 4)


@dataclass
class KernelReport:
    mass_change: np.ndarray      # |sum(dm)| per kernel vector
    moment_change: np.ndarray    # |P dm| per kernel vector
    inertia_change: np.ndarray   # max |dJ| per kernel vector after a feasible step
    tol: float

    @property
    def conserves_mass_and_com(self):
        return bool(np.all(self.mass_change < self.tol) and np.all(self.moment_change < self.tol))

    @property
    def inertia_unidentifiable(self):
        return bool(len(self.inertia_change) == 0 or np.max(self.inertia_change) > 1e-6)


def kernel_invariance_check(kernel, points_body, masses, tol=1e-9, step=0.5):
    """Check that reduced-model kernel directions keep mass and COM but move inertia."""
    K = np.asarray(kernel, dtype=float).reshape(len(points_body), -1)
    P = np.asarray(points_body, dtype=float)
    m = np.asarray(masses, dtype=float)
    base = aggregate(PointMassModel(P, m))
    mass_c, mom_c, inert_c = [], [], []
    for dm in K.T:
        mass_c.append(abs(dm.sum()))
        mom_c.append(np.linalg.norm(P.T @ dm))
        neg = dm < 0
        eps = step * np.min(m[neg] / -dm[neg]) if np.any(neg) else 1.0
        moved = aggregate(PointMassModel(P, np.clip(m + eps * dm, 0.0, None)))
        inert_c.append(np.max(np.abs(moved.inertia - base.inertia)))
    return KernelReport(np.array(mass_c), np.array(mom_c), np.array(inert_c), tol)


def tikhonov_min_eig(A, lam):
    A = np.asarray(A, dtype=float).reshape(-1, np.shape(A)[-1])
    return float(np.linalg.eigvalsh(A.T @ A + lam * np.eye(A.shape[1]))[0])

"""Rigid-body parameters, Newton-Euler wrenches and regressors.

Conventions
-----------
* The parameter vector is ``[m, m*cx, m*cy, m*cz, Jxx, Jxy, Jxz, Jyy, Jyz, Jzz]``
  with the inertia taken about the frame origin.
* A :class:`KinematicSample` describes the body frame in the world frame. ``v``
  and ``a`` belong to the body-frame origin; every vector is expressed in world
  coordinates.
* Gravity enters through the proper acceleration ``a - g``. The wrench is the
  one the sensor applies to hold the body, so a static body reads
  ``f = -m g`` (upward).
* Wrenches are stacked force first: ``[f; tau]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GRAVITY = np.array([0.0, 0.0, -9.81])

# order of the six unique inertia entries
INERTIA_INDEX = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
PARAM_NAMES = ("m", "mcx", "mcy", "mcz", "Jxx", "Jxy", "Jxz", "Jyy", "Jyz", "Jzz")

CONSISTENCY_TOL = 1e-8


def skew(u):
    """Matrix ``[u]x`` such that ``skew(u) @ v == cross(u, v)``."""
    x, y, z = u
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vech(S):
    return np.array([S[i, j] for i, j in INERTIA_INDEX])


def unvech(j6):
    xx, xy, xz, yy, yz, zz = j6
    return np.array([[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]])


def check_rotation(R, tol=1e-9):
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        raise ValueError("rotation must be a finite 3x3 matrix")
    if np.max(np.abs(R.T @ R - np.eye(3))) > tol or abs(np.linalg.det(R) - 1.0) > tol:
        raise ValueError("rotation is not orthonormal with det +1")
    return R


def _vec3(x, name):
    x = np.asarray(x, dtype=float).reshape(3)
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} has non-finite entries")
    return x


@dataclass(frozen=True)
class InertialParams:
    """Mass, first mass moment and inertia (about the frame origin)."""

    mass: float
    first_moment: np.ndarray
    inertia: np.ndarray  # (Jxx, Jxy, Jxz, Jyy, Jyz, Jzz)
    frame: str = "body"

    def __post_init__(self):
        object.__setattr__(self, "mass", float(self.mass))
        object.__setattr__(self, "first_moment", _vec3(self.first_moment, "first_moment"))
        j = np.asarray(self.inertia, dtype=float)
        if j.shape == (3, 3):
            j = vech(0.5 * (j + j.T))
        j = j.reshape(6)
        if not np.all(np.isfinite(j)) or not np.isfinite(self.mass):
            raise ValueError("inertial parameters must be finite")
        object.__setattr__(self, "inertia", j)

    @classmethod
    def from_vector(cls, theta, frame="body"):
        theta = np.asarray(theta, dtype=float).reshape(10)
        return cls(theta[0], theta[1:4], theta[4:], frame)

    @classmethod
    def from_com(cls, mass, com, inertia_com, frame="body"):
        """Build from mass, COM and the inertia tensor about the COM."""
        c = np.asarray(com, dtype=float)
        J = np.asarray(inertia_com, dtype=float)
        if J.shape != (3, 3):
            J = unvech(J)
        J_origin = J + mass * (c @ c * np.eye(3) - np.outer(c, c))
        return cls(mass, mass * c, J_origin, frame)

    def vector(self):
        return np.concatenate([[self.mass], self.first_moment, self.inertia])

    @property
    def com(self):
        if self.mass == 0.0:
            return np.full(3, np.nan)
        return self.first_moment / self.mass

    @property
    def inertia_matrix(self):
        return unvech(self.inertia)

    def __add__(self, other):
        if self.frame != other.frame:
            raise ValueError(f"cannot add parameters in frames {self.frame!r} and {other.frame!r}")
        return InertialParams.from_vector(self.vector() + other.vector(), self.frame)

    def is_physically_consistent(self, tol=CONSISTENCY_TOL):
        return is_physically_consistent(self, tol)


@dataclass(frozen=True)
class KinematicSample:
    t: float
    rotation: np.ndarray
    translation: np.ndarray
    lin_vel: np.ndarray = field(default_factory=lambda: np.zeros(3))
    ang_vel: np.ndarray = field(default_factory=lambda: np.zeros(3))
    lin_acc: np.ndarray = field(default_factory=lambda: np.zeros(3))
    ang_acc: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if not np.isfinite(self.t):
            raise ValueError("non-finite timestamp")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "rotation", check_rotation(self.rotation))
        for name in ("translation", "lin_vel", "ang_vel", "lin_acc", "ang_acc"):
            object.__setattr__(self, name, _vec3(getattr(self, name), name))

    @classmethod
    def static(cls, rotation=None, translation=None, t=0.0):
        R = np.eye(3) if rotation is None else rotation
        p = np.zeros(3) if translation is None else translation
        return cls(t, R, p)

    def with_kinematics(self, lin_vel=None, ang_vel=None, lin_acc=None, ang_acc=None):
        return KinematicSample(
            self.t,
            self.rotation,
            self.translation,
            self.lin_vel if lin_vel is None else lin_vel,
            self.ang_vel if ang_vel is None else ang_vel,
            self.lin_acc if lin_acc is None else lin_acc,
            self.ang_acc if ang_acc is None else ang_acc,
        )


@dataclass(frozen=True)
class Wrench:
    force: np.ndarray
    torque: np.ndarray
    frame: str = "body"

    def __post_init__(self):
        object.__setattr__(self, "force", _vec3(self.force, "force"))
        object.__setattr__(self, "torque", _vec3(self.torque, "torque"))

    @classmethod
    def from_vector(cls, w, frame="body"):
        w = np.asarray(w, dtype=float).reshape(6)
        return cls(w[:3], w[3:], frame)

    def vector(self):
        return np.concatenate([self.force, self.torque])


def transform_wrench(wrench, rotation, translation, frame=None):
    """Re-express a wrench in a frame whose origin sits at ``translation``.

    ``rotation``/``translation`` map coordinates of the current frame into the
    new one (``x_new = R x + t``). The torque is taken about the new origin.
    """
    R = check_rotation(rotation)
    t = _vec3(translation, "translation")
    f = R @ wrench.force
    tau = R @ wrench.torque + np.cross(t, f)
    return Wrench(f, tau, wrench.frame if frame is None else frame)


def wrench_adjoint(rotation, translation):
    """6x6 matrix form of :func:`transform_wrench`."""
    R = np.asarray(rotation, dtype=float)
    X = np.zeros((6, 6))
    X[:3, :3] = R
    X[3:, 3:] = R
    X[3:, :3] = skew(translation) @ R
    return X


def _body_kinematics(state, gravity):
    """Proper acceleration, angular velocity and angular acceleration in body axes."""
    Rt = state.rotation.T
    return Rt @ (state.lin_acc - gravity), Rt @ state.ang_vel, Rt @ state.ang_acc


def _inertia_operator(v):
    """3x6 matrix L(v) with ``J @ v == L(v) @ vech(J)``."""
    x, y, z = v
    return np.array(
        [
            [x, y, z, 0.0, 0.0, 0.0],
            [0.0, x, 0.0, y, z, 0.0],
            [0.0, 0.0, x, 0.0, y, z],
        ]
    )


def newton_euler_wrench(params, state, gravity=GRAVITY):
    """Wrench needed to move ``params`` along ``state``, in the body frame."""
    g = _vec3(gravity, "gravity")
    a, w, al = _body_kinematics(state, g)
    m, h, J = params.mass, params.first_moment, params.inertia_matrix
    f = m * a + np.cross(al, h) + np.cross(w, np.cross(w, h))
    tau = np.cross(h, a) + J @ al + np.cross(w, J @ w)
    return Wrench(f, tau, params.frame)


def full_regressor(state, gravity=GRAVITY):
    """6x10 matrix ``A`` with ``A @ theta == newton_euler_wrench(theta)``."""
    g = _vec3(gravity, "gravity")
    a, w, al = _body_kinematics(state, g)
    W = skew(w)
    A = np.zeros((6, 10))
    A[:3, 0] = a
    A[:3, 1:4] = skew(al) + W @ W
    A[3:, 1:4] = -skew(a)
    A[3:, 4:] = _inertia_operator(al) + W @ _inertia_operator(w)
    return A


def point_params(points):
    """Per-unit-mass parameter vectors of point masses, shape (10, n)."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    x, y, z = P[:, 0], P[:, 1], P[:, 2]
    return np.vstack(
        [np.ones(len(P)), x, y, z, y * y + z * z, -x * y, -x * z, x * x + z * z, -y * z, x * x + y * y]
    )


def _check_points(points):
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[1] != 3 or len(P) == 0:
        raise ValueError("expected a non-empty (n, 3) array of points")
    return P


def point_full_regressor(points_body, state, gravity=GRAVITY, frame="body"):
    """6xn full-dynamics regressor of point masses fixed in the body.

    ``frame="body"`` gives the wrench at the body origin in body axes;
    ``frame="world"`` gives it about the world origin in world axes, the frame
    the reduced model lives in.
    """
    P = _check_points(points_body)
    K = full_regressor(state, gravity) @ point_params(P)
    if frame == "world":
        K = wrench_adjoint(state.rotation, state.translation) @ K
    elif frame != "body":
        raise ValueError(f"unknown frame {frame!r}")
    return K


def reduced_regressor(points_body, rotation, translation, gravity=GRAVITY):
    """6xn gravity-only model, world axes, moments about the world origin."""
    P = _check_points(points_body)
    R = check_rotation(rotation)
    g = _vec3(gravity, "gravity")
    pw = P @ R.T + _vec3(translation, "translation")
    K = np.empty((6, len(P)))
    K[:3] = -g[:, None]
    K[3:] = -np.cross(pw, g).T
    return K


def pseudo_inertia(params):
    """4x4 pseudo-inertia ``[0.5 tr(J) I - J, h; h^T, m]``."""
    J = params.inertia_matrix
    Pi = np.empty((4, 4))
    Pi[:3, :3] = 0.5 * np.trace(J) * np.eye(3) - J
    Pi[:3, 3] = params.first_moment
    Pi[3, :3] = params.first_moment
    Pi[3, 3] = params.mass
    return Pi


def min_pseudo_inertia_eig(params):
    return float(np.linalg.eigvalsh(pseudo_inertia(params))[0])


def is_physically_consistent(params, tol=CONSISTENCY_TOL):
    return min_pseudo_inertia_eig(params) >= -tol


def transform_params(params, rotation, translation, frame=None):
    """Express ``params`` in a frame with ``x_new = R x_old + t``."""
    R = check_rotation(rotation)
    t = _vec3(translation, "translation")
    m = params.mass
    h = R @ params.first_moment
    J = R @ params.inertia_matrix @ R.T
    T = skew(t)
    H = skew(h)
    J_new = J - H @ T - T @ H - m * T @ T
    return InertialParams(m, h + m * t, J_new, params.frame if frame is None else frame)


def invert_transform(rotation, translation):
    R = np.asarray(rotation, dtype=float)
    return R.T, -R.T @ np.asarray(translation, dtype=float)


def rebase_sample(state, rotation, translation):
    """Kinematics of a new body frame ``B'`` with ``x_B' = R x_B + t``."""
    R_inv, o = invert_transform(rotation, translation)  # o: B' origin in B
    Rw = state.rotation @ R_inv
    r = state.rotation @ o
    w, al = state.ang_vel, state.ang_acc
    return KinematicSample(
        state.t,
        Rw,
        state.translation + r,
        state.lin_vel + np.cross(w, r),
        w,
        state.lin_acc + np.cross(al, r) + np.cross(w, np.cross(w, r)),
        al,
    )


def _skew_batch(u):
    S = np.zeros(u.shape[:-1] + (3, 3))
    S[..., 0, 1], S[..., 0, 2] = -u[..., 2], u[..., 1]
    S[..., 1, 0], S[..., 1, 2] = u[..., 2], -u[..., 0]
    S[..., 2, 0], S[..., 2, 1] = -u[..., 1], u[..., 0]
    return S


def _inertia_operator_batch(v):
    L = np.zeros(v.shape[:-1] + (3, 6))
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    L[..., 0, 0], L[..., 0, 1], L[..., 0, 2] = x, y, z
    L[..., 1, 1], L[..., 1, 3], L[..., 1, 4] = x, y, z
    L[..., 2, 2], L[..., 2, 4], L[..., 2, 5] = x, y, z
    return L


def full_regressor_batch(rotation, lin_acc, ang_vel, ang_acc, gravity=GRAVITY):
    """Stacked :func:`full_regressor` for arrays of samples, shape (M, 6, 10)."""
    Rt = np.swapaxes(np.asarray(rotation, dtype=float), -1, -2)
    g = _vec3(gravity, "gravity")
    a = np.einsum("kij,kj->ki", Rt, np.asarray(lin_acc) - g)
    w = np.einsum("kij,kj->ki", Rt, np.asarray(ang_vel))
    al = np.einsum("kij,kj->ki", Rt, np.asarray(ang_acc))
    W = _skew_batch(w)
    A = np.zeros((len(a), 6, 10))
    A[:, :3, 0] = a
    A[:, :3, 1:4] = _skew_batch(al) + W @ W
    A[:, 3:, 1:4] = -_skew_batch(a)
    A[:, 3:, 4:] = _inertia_operator_batch(al) + W @ _inertia_operator_batch(w)
    return A


def wrench_adjoint_batch(rotation, translation):
    R = np.asarray(rotation, dtype=float)
    X = np.zeros((len(R), 6, 6))
    X[:, :3, :3] = R
    X[:, 3:, 3:] = R
    X[:, 3:, :3] = _skew_batch(np.asarray(translation, dtype=float)) @ R
    return X

"""Trajectories, simulated sensor streams and Kalman filtering of kinematics."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq
from scipy.spatial.transform import Rotation

from .rigid_body import GRAVITY, KinematicSample, Wrench, full_regressor_batch, skew


def axis_rotation(axis, angle):
    """Rodrigues rotation about a unit ``axis``; ``angle`` may be an array."""
    angle = np.asarray(angle, dtype=float)
    K = skew(axis)
    s, c = np.sin(angle)[..., None, None], np.cos(angle)[..., None, None]
    return np.eye(3) + s * K + (1.0 - c) * (K @ K)


@dataclass(frozen=True)
class KinematicChain:
    """Serial chain of revolute joints.

    Joint ``i`` turns about ``axes[i]`` (parent coordinates) at the parent
    frame origin; the child frame origin then sits at ``offsets[i]`` in the
    rotated coordinates. The last frame is the body frame.
    """

    axes: tuple
    offsets: tuple
    base_rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    base_translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        axes = np.asarray(self.axes, dtype=float).reshape(-1, 3)
        offsets = np.asarray(self.offsets, dtype=float).reshape(-1, 3)
        if len(axes) == 0 or len(axes) != len(offsets):
            raise ValueError("need at least one joint and one offset per joint")
        if np.any(np.abs(np.linalg.norm(axes, axis=1) - 1.0) > 1e-9):
            raise ValueError("joint axes must be unit vectors")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "base_rotation", np.asarray(self.base_rotation, dtype=float))
        object.__setattr__(self, "base_translation", np.asarray(self.base_translation, dtype=float))

    @property
    def n_joints(self):
        return len(self.axes)


def default_chain():
    z, y = (0.0, 0.0, 1.0), (0.0, 1.0, 0.0)
    return KinematicChain(
        axes=(z, y, z, y, z, y),
        offsets=((0, 0, 0.3), (0, 0, 0.25), (0.2, 0, 0), (0.1, 0, 0), (0, 0, 0.1), (0, 0, 0.08)),
    )


def _check_angles(chain, q):
    q = np.asarray(q, dtype=float).reshape(-1)
    if len(q) != chain.n_joints:
        raise ValueError(f"expected {chain.n_joints} joint angles, got {len(q)}")
    return q


def forward_kinematics(chain, joint_angles):
    """Body-frame pose ``(R, t)`` in the world frame."""
    q = _check_angles(chain, joint_angles)
    R, p = chain.base_rotation.copy(), chain.base_translation.copy()
    for axis, off, qi in zip(chain.axes, chain.offsets, q):
        R = R @ axis_rotation(axis, qi)
        p = p + R @ off
    return R, p


def chain_kinematics(chain, q, dq, ddq):
    """Pose, twist and its derivative of the body frame by forward recursion.

    Accepts one configuration of shape (n_joints,) or a batch (n, n_joints);
    world-frame outputs carry the same leading shape.
    """
    q, dq, ddq = (np.asarray(x, dtype=float) for x in (q, dq, ddq))
    if q.shape[-1] != chain.n_joints or q.shape != dq.shape or q.shape != ddq.shape:
        raise ValueError(f"expected {chain.n_joints} joint values per sample")
    lead = q.shape[:-1]
    R = np.broadcast_to(chain.base_rotation, lead + (3, 3)).copy()
    p = np.broadcast_to(chain.base_translation, lead + (3,)).copy()
    w, al, v, a = (np.zeros(lead + (3,)) for _ in range(4))
    for j, (axis, off) in enumerate(zip(chain.axes, chain.offsets)):
        z = R @ axis
        dqj, ddqj = dq[..., j, None], ddq[..., j, None]
        al = al + z * ddqj + np.cross(w, z) * dqj
        w = w + z * dqj
        R = R @ axis_rotation(axis, q[..., j])
        r = R @ off
        p = p + r
        v = v + np.cross(w, r)
        a = a + np.cross(al, r) + np.cross(w, np.cross(w, r))
    return R, p, v, w, a, al


@dataclass(frozen=True)
class TrajectoryConfig:
    """Joint-space sinusoids ``q_n = q0_n + A_n sin(2 pi f_n s t / 240)``."""

    duration: float = 35.0
    rate: float = 100.0
    amplitudes: tuple = (0.0, 0.0, 0.0, np.pi / 4, np.pi / 4, np.pi / 4)
    frequencies: tuple = (0.0, 0.0, 0.0, 0.1, 0.13, 0.16)
    initial_angles: tuple = (0.0, 0.6, -0.9, 0.4, 0.9, 0.3)
    speed_scale: float = 1.0
    period_divisor: float = 240.0
    derivatives: str = "analytic"  # or "finite_difference"

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.rate <= 0:
            raise ValueError("sample rate must be positive")
        if not len(self.amplitudes) == len(self.frequencies) == len(self.initial_angles):
            raise ValueError("per-joint settings must have equal length")
        if self.derivatives not in ("analytic", "finite_difference"):
            raise ValueError(f"unknown derivative mode {self.derivatives!r}")

    @property
    def times(self):
        n = int(round(self.duration * self.rate)) + 1
        return np.arange(n) / self.rate

    def joint_angles(self, t):
        """Joint angles, rates and accelerations at times ``t``, each (len(t), n)."""
        t = np.asarray(t, dtype=float)[:, None]
        A = np.asarray(self.amplitudes)
        W = 2 * np.pi * np.asarray(self.frequencies) * self.speed_scale / self.period_divisor
        s, c = np.sin(W * t), np.cos(W * t)
        return np.asarray(self.initial_angles) + A * s, A * W * c, -A * W * W * s


@dataclass
class Stream:
    """Time series of body kinematics and (optionally) sensor wrenches.

    Arrays are indexed by sample; vectors are world-frame kinematics and
    body-frame wrenches.
    """

    t: np.ndarray
    rotation: np.ndarray
    translation: np.ndarray
    lin_vel: np.ndarray
    ang_vel: np.ndarray
    lin_acc: np.ndarray
    ang_acc: np.ndarray
    force: np.ndarray | None = None
    torque: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    @classmethod
    def from_samples(cls, samples, wrenches=None, meta=None):
        samples = list(samples)
        if not samples:
            raise ValueError("empty sample sequence")
        get = lambda name: np.array([getattr(s, name) for s in samples])  # noqa: E731
        out = cls(
            get("t"), get("rotation"), get("translation"), get("lin_vel"),
            get("ang_vel"), get("lin_acc"), get("ang_acc"), meta=dict(meta or {}),
        )
        if wrenches is not None:
            out.force = np.array([w.force for w in wrenches])
            out.torque = np.array([w.torque for w in wrenches])
        return out

    def sample(self, k):
        return KinematicSample(
            self.t[k], self.rotation[k], self.translation[k], self.lin_vel[k],
            self.ang_vel[k], self.lin_acc[k], self.ang_acc[k],
        )

    def samples(self):
        return [self.sample(k) for k in range(len(self))]

    def wrench(self, k):
        return Wrench(self.force[k], self.torque[k])

    def wrenches(self):
        if self.force is None:
            raise ValueError("stream carries no wrenches")
        return [self.wrench(k) for k in range(len(self))]

    @property
    def has_wrench(self):
        return self.force is not None

    def window(self, start, stop=None):
        sl = slice(start, stop)
        return Stream(
            self.t[sl], self.rotation[sl], self.translation[sl], self.lin_vel[sl],
            self.ang_vel[sl], self.lin_acc[sl], self.ang_acc[sl],
            None if self.force is None else self.force[sl],
            None if self.torque is None else self.torque[sl],
            dict(self.meta),
        )

    def copy(self, **changes):
        fields = {
            k: (v.copy() if isinstance(v, np.ndarray) else v)
            for k, v in self.__dict__.items()
        }
        fields["meta"] = dict(self.meta)
        fields.update(changes)
        return Stream(**fields)

    def stopped(self):
        """Same poses with every velocity and acceleration set to zero."""
        z = np.zeros_like(self.lin_vel)
        return self.copy(lin_vel=z, ang_vel=z.copy(), lin_acc=z.copy(), ang_acc=z.copy())

    def average_speeds(self):
        return (
            float(np.mean(np.linalg.norm(self.ang_vel, axis=1))),
            float(np.mean(np.linalg.norm(self.lin_vel, axis=1))),
        )


@dataclass
class Trajectory:
    stream: Stream
    joint_angles: np.ndarray
    avg_ang_speed: float
    avg_lin_speed: float


def _finite_difference(t, R, p):
    dt = t[1] - t[0]
    v = np.gradient(p, dt, axis=0)
    a = np.gradient(v, dt, axis=0)
    rot = Rotation.from_matrix(R)
    w = np.zeros_like(p)
    if len(t) >= 3:
        w[1:-1] = (rot[2:] * rot[:-2].inv()).as_rotvec() / (2 * dt)
    if len(t) >= 2:
        w[0] = (rot[1] * rot[0].inv()).as_rotvec() / dt
        w[-1] = (rot[-1] * rot[-2].inv()).as_rotvec() / dt
    al = np.gradient(w, dt, axis=0)
    return v, w, a, al


def generate_trajectory(chain, config):
    """Sample the body motion produced by ``config`` on ``chain``."""
    if len(config.amplitudes) != chain.n_joints:
        raise ValueError("trajectory config and chain disagree on the joint count")
    t = config.times
    q, dq, ddq = config.joint_angles(t)
    R, p, v, w, a, al = chain_kinematics(chain, q, dq, ddq)
    if config.derivatives == "finite_difference":
        v, w, a, al = _finite_difference(t, R, p)
    stream = Stream(t, R, p, v, w, a, al)
    wa, va = stream.average_speeds()
    return Trajectory(stream, q, wa, va)


def calibrate_speed(chain, config, target_ang_speed, upper=5000.0):
    """Speed scale at which the average angular speed equals the target."""
    if target_ang_speed <= 0:
        return replace(config, speed_scale=0.0)

    def avg(s):
        return generate_trajectory(chain, replace(config, speed_scale=s)).avg_ang_speed - target_ang_speed

    s = brentq(avg, 0.0, upper, xtol=1e-6, rtol=1e-10)
    return replace(config, speed_scale=s)


# -- sensor noise ------------------------------------------------------------


@dataclass(frozen=True)
class NoiseLevel:
    """Gaussian noise std-devs: rad/s^2, m/s^2, N, N m."""

    level: str
    sigma_angacc: float
    sigma_linacc: float
    sigma_force: float
    sigma_torque: float

    def __post_init__(self):
        if min(self.sigma_angacc, self.sigma_linacc, self.sigma_force, self.sigma_torque) < 0:
            raise ValueError("noise std-devs must be non-negative")

    @classmethod
    def preset(cls, name):
        try:
            return NOISE_PRESETS[name]
        except KeyError:
            raise ValueError(f"unknown noise level {name!r}; choose from {list(NOISE_PRESETS)}") from None


# Units as in NoiseLevel.
NOISE_PRESETS = {
    "None": NoiseLevel("None", 0.0, 0.0, 0.0, 0.0),
    "Low": NoiseLevel("Low", 0.25, 0.025, 0.05, 0.0025),
    "Moderate": NoiseLevel("Moderate", 0.5, 0.05, 0.1, 0.005),
    "High": NoiseLevel("High", 1.0, 0.1, 0.33, 0.0067),
}


def true_wrenches(params, stream, gravity=GRAVITY):
    """Noise-free body-frame wrenches along ``stream``."""
    A = full_regressor_batch(stream.rotation, stream.lin_acc, stream.ang_vel, stream.ang_acc, gravity)
    w = A @ params.vector()
    return w[:, :3], w[:, 3:]


def simulate_measurements(params_true, states, noise, gravity=GRAVITY, seed=0):
    """Noise-free wrenches from ``states`` plus Gaussian sensor noise.

    Linear/angular accelerations and the wrench are perturbed; poses and
    velocities pass through untouched.
    """
    stream = states if isinstance(states, Stream) else Stream.from_samples(states)
    if len(stream) == 0:
        raise ValueError("empty state sequence")
    if isinstance(noise, str):
        noise = NoiseLevel.preset(noise)
    f, tau = true_wrenches(params_true, stream, gravity)
    out = stream.copy(force=f, torque=tau)
    rng = np.random.default_rng(seed)
    shape = (len(stream), 3)
    for name, sigma in (
        ("lin_acc", noise.sigma_linacc),
        ("ang_acc", noise.sigma_angacc),
        ("force", noise.sigma_force),
        ("torque", noise.sigma_torque),
    ):
        draw = rng.standard_normal(shape)
        if sigma > 0:
            setattr(out, name, getattr(out, name) + sigma * draw)
    out.meta.update(noise=noise.level, seed=seed)
    return out


# -- Kalman filtering --------------------------------------------------------


@dataclass(frozen=True)
class KalmanConfig:
    """Constant-acceleration filter settings.

    ``q_*`` are white-jerk spectral densities; ``sigma_pos``/``sigma_rot`` the
    pose measurement noise; ``sigma_linacc``/``sigma_angacc`` the
    acceleration measurement noise (floored to keep the update well posed).
    """

    q_lin: float = 10.0
    q_ang: float = 10.0
    sigma_pos: float = 1e-4
    sigma_rot: float = 1e-4
    sigma_linacc: float = 0.05
    sigma_angacc: float = 0.5
    use_acceleration: bool = True
    acc_floor: float = 1e-3

    @classmethod
    def for_noise(cls, noise, **kw):
        if isinstance(noise, str):
            noise = NoiseLevel.preset(noise)
        return cls(sigma_linacc=noise.sigma_linacc, sigma_angacc=noise.sigma_angacc, **kw)


def _ca_filter(z_pos, z_acc, dt, q, r_pos, r_acc, p0=1e4):
    """Run a constant-acceleration Kalman filter on each column of ``z_pos``.

    Returns (position, velocity, acceleration) estimates and the state
    covariance trace per step. The prior is diffuse (``p0`` on every state),
    so the covariance shrinks monotonically for a time-invariant model.
    """
    n, k = z_pos.shape
    F = np.array([[1.0, dt, 0.5 * dt * dt], [0.0, 1.0, dt], [0.0, 0.0, 1.0]])
    Q = q * np.array(
        [
            [dt**5 / 20, dt**4 / 8, dt**3 / 6],
            [dt**4 / 8, dt**3 / 3, dt**2 / 2],
            [dt**3 / 6, dt**2 / 2, dt],
        ]
    )
    if z_acc is None:
        H = np.array([[1.0, 0.0, 0.0]])
        Rm = np.array([[r_pos]])
        z = z_pos[:, None, :]
    else:
        H = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        Rm = np.diag([r_pos, r_acc])
        z = np.stack([z_pos, z_acc], axis=1)
    x = np.zeros((3, k))
    x[0] = z_pos[0]
    if z_acc is not None:
        x[2] = z_acc[0]
    P = p0 * np.eye(3)
    out = np.empty((n, 3, k))
    trace = np.empty(n)
    I = np.eye(3)
    for i in range(n):
        if i > 0:
            x = F @ x
            P = F @ P @ F.T + Q
        S = H @ P @ H.T + Rm
        K = np.linalg.solve(S, H @ P).T
        x = x + K @ (z[i] - H @ x)
        IKH = I - K @ H
        P = IKH @ P @ IKH.T + K @ Rm @ K.T
        out[i] = x
        trace[i] = np.trace(P)
    return out, trace


def rotation_increments(R):
    """Accumulated world-frame rotation vector, starting at zero."""
    rot = Rotation.from_matrix(R)
    phi = np.zeros((len(R), 3))
    if len(R) > 1:
        phi[1:] = np.cumsum((rot[1:] * rot[:-1].inv()).as_rotvec(), axis=0)
    return phi


@dataclass
class FilterResult:
    stream: Stream
    trace_lin: np.ndarray
    trace_ang: np.ndarray

    @property
    def trace(self):
        return self.trace_lin + self.trace_ang

    def stabilized_index(self, rel=0.01, window=10):
        return stabilized_index(self.trace, rel, window)


def stabilized_index(trace, rel=0.01, window=10):
    """First index where the trace changed by less than ``rel`` over ``window`` samples."""
    trace = np.asarray(trace)
    for i in range(window, len(trace)):
        if abs(trace[i] - trace[i - window]) <= rel * abs(trace[i]):
            return i
    return len(trace)


def kalman_smooth(stream, config=None):
    """Estimate velocities and accelerations from poses and noisy accelerations."""
    config = config or KalmanConfig()
    if len(stream) < 2:
        raise ValueError("need at least two samples")
    dts = np.diff(stream.t)
    dt = float(np.mean(dts))
    if dt <= 0 or np.max(np.abs(dts - dt)) > 1e-6 * dt:
        raise ValueError("timestamps must be uniformly spaced")
    use_acc = config.use_acceleration
    lin, tr_lin = _ca_filter(
        stream.translation,
        stream.lin_acc if use_acc else None,
        dt,
        config.q_lin,
        config.sigma_pos**2,
        max(config.sigma_linacc, config.acc_floor) ** 2,
    )
    ang, tr_ang = _ca_filter(
        rotation_increments(stream.rotation),
        stream.ang_acc if use_acc else None,
        dt,
        config.q_ang,
        config.sigma_rot**2,
        max(config.sigma_angacc, config.acc_floor) ** 2,
    )
    out = stream.copy(
        lin_vel=lin[:, 1], lin_acc=lin[:, 2], ang_vel=ang[:, 1], ang_acc=ang[:, 2]
    )
    out.meta["filtered"] = True
    return FilterResult(out, tr_lin, tr_ang)


def dynamism(sample, n1=1.0, n2=1.0, n3=0.5):
    """Motion magnitude ``(|a|/n1)^2 + (|alpha|/n2)^2 + (|omega|/n3)^2``.

    ``a`` is the kinematic (gravity-free) acceleration.
    """
    if min(n1, n2, n3) <= 0:
        raise ValueError("normalizers must be positive")
    return (
        (np.linalg.norm(sample.lin_acc) / n1) ** 2
        + (np.linalg.norm(sample.ang_acc) / n2) ** 2
        + (np.linalg.norm(sample.ang_vel) / n3) ** 2
    )


def stream_dynamism(stream, n1=1.0, n2=1.0, n3=0.5):
    if min(n1, n2, n3) <= 0:
        raise ValueError("normalizers must be positive")
    nrm = lambda x: np.linalg.norm(x, axis=1)  # noqa: E731
    return (nrm(stream.lin_acc) / n1) ** 2 + (nrm(stream.ang_acc) / n2) ** 2 + (nrm(stream.ang_vel) / n3) ** 2


# -- CSV I/O -----------------------------------------------------------------

STREAM_COLUMNS = (
    ["t"]
    + [f"R{i}{j}" for i in range(3) for j in range(3)]
    + ["px", "py", "pz", "vx", "vy", "vz", "wx", "wy", "wz"]
    + ["ax", "ay", "az", "alx", "aly", "alz", "fx", "fy", "fz", "tx", "ty", "tz"]
)
STREAM_SCHEMA = "cobot-inertia-stream/1"


def write_stream_csv(path, stream):
    """Write a stream; the first line is a ``#`` comment holding JSON metadata."""
    n = len(stream)
    f = stream.force if stream.has_wrench else np.full((n, 3), np.nan)
    tau = stream.torque if stream.has_wrench else np.full((n, 3), np.nan)
    table = np.column_stack(
        [stream.t, stream.rotation.reshape(n, 9), stream.translation, stream.lin_vel,
         stream.ang_vel, stream.lin_acc, stream.ang_acc, f, tau]
    )
    meta = {"schema": STREAM_SCHEMA, **stream.meta}
    with open(path, "w") as fh:
        fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        fh.write(",".join(STREAM_COLUMNS) + "\n")
        for row in table:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def read_stream_csv(path):
    with open(path) as fh:
        first = fh.readline()
        meta = json.loads(first[1:]) if first.startswith("#") else {}
        if meta.get("schema", STREAM_SCHEMA) != STREAM_SCHEMA:
            raise ValueError(f"unsupported stream schema {meta.get('schema')!r}")
        header = fh.readline().strip().split(",") if first.startswith("#") else first.strip().split(",")
        if header != STREAM_COLUMNS:
            raise ValueError("unexpected stream columns")
        rows = [[float(x) for x in line.split(",")] for line in fh if line.strip()]
    table = np.array(rows, dtype=float).reshape(-1, len(STREAM_COLUMNS))
    meta.pop("schema", None)
    f, tau = table[:, 25:28], table[:, 28:31]
    has_wrench = not np.all(np.isnan(f))
    return Stream(
        table[:, 0], table[:, 1:10].reshape(-1, 3, 3), table[:, 10:13], table[:, 13:16],
        table[:, 16:19], table[:, 19:22], table[:, 22:25],
        f if has_wrench else None, tau if has_wrench else None, meta,
    )

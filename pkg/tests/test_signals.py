import numpy as np
import pytest
from dataclasses import replace
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from cobot_inertia.discretization import build_test_object
from cobot_inertia.rigid_body import KinematicSample, newton_euler_wrench
from cobot_inertia.signals import (
    NOISE_PRESETS,
    KalmanConfig,
    KinematicChain,
    NoiseLevel,
    Stream,
    TrajectoryConfig,
    calibrate_speed,
    chain_kinematics,
    default_chain,
    dynamism,
    forward_kinematics,
    generate_trajectory,
    kalman_smooth,
    read_stream_csv,
    simulate_measurements,
    stabilized_index,
    stream_dynamism,
    write_stream_csv,
)

from conftest import seeds


def one_joint(axis=(0, 0, 1), offset=(1, 0, 0)):
    return KinematicChain(axes=(axis,), offsets=(offset,))


def test_forward_kinematics_examples():
    R, p = forward_kinematics(one_joint(), [np.pi / 2])
    np.testing.assert_allclose(p, [0, 1, 0], atol=1e-15)
    chain = default_chain()
    R0, p0 = forward_kinematics(chain, np.zeros(6))
    np.testing.assert_allclose(R0, np.eye(3))
    np.testing.assert_allclose(p0, np.sum(chain.offsets, axis=0))
    with pytest.raises(ValueError):
        forward_kinematics(chain, np.zeros(5))


@given(st.lists(st.floats(-np.pi, np.pi), min_size=6, max_size=6))
def test_forward_kinematics_is_periodic(q):
    chain = default_chain()
    R1, p1 = forward_kinematics(chain, q)
    R2, p2 = forward_kinematics(chain, np.asarray(q) + 2 * np.pi)
    np.testing.assert_allclose(R1, R2, atol=1e-12)
    np.testing.assert_allclose(p1, p2, atol=1e-12)


def test_chain_rejects_bad_axes():
    with pytest.raises(ValueError):
        KinematicChain(axes=((0, 0, 2),), offsets=((1, 0, 0),))
    with pytest.raises(ValueError):
        KinematicChain(axes=(), offsets=())


@given(seeds)
def test_chain_kinematics_matches_differenced_pose(seed):
    rng = np.random.default_rng(seed)
    chain = default_chain()
    q, dq, ddq = rng.uniform(-2, 2, 6), rng.normal(size=6), rng.normal(size=6)
    h = 1e-5

    def pose(s):
        return forward_kinematics(chain, q + dq * s + 0.5 * ddq * s * s)

    R, p, v, w, a, al = chain_kinematics(chain, q, dq, ddq)
    (Rm, pm), (Rp, pp) = pose(-h), pose(h)
    np.testing.assert_allclose(R, pose(0.0)[0], atol=1e-12)
    np.testing.assert_allclose(v, (pp - pm) / (2 * h), atol=1e-7)
    np.testing.assert_allclose(a, (pp - 2 * p + pm) / h**2, atol=1e-3)
    w_fd = Rotation.from_matrix(Rp @ Rm.T).as_rotvec() / (2 * h)
    np.testing.assert_allclose(w, w_fd, atol=1e-7)
    w_p = chain_kinematics(chain, q + dq * h + 0.5 * ddq * h * h, dq + ddq * h, ddq)[3]
    w_m = chain_kinematics(chain, q - dq * h + 0.5 * ddq * h * h, dq - ddq * h, ddq)[3]
    np.testing.assert_allclose(al, (w_p - w_m) / (2 * h), atol=1e-6)


def single_joint_sine(derivatives):
    # q = 0.1 sin(2 pi t): amplitude 0.1, f * s / 240 = 1
    cfg = TrajectoryConfig(duration=3.0, rate=100.0, amplitudes=(0.1,), frequencies=(1.0,),
                           initial_angles=(0.0,), speed_scale=240.0, derivatives=derivatives)
    return generate_trajectory(one_joint(), cfg)


def test_single_joint_angular_rate_analytic():
    traj = single_joint_sine("analytic")
    t = traj.stream.t
    np.testing.assert_allclose(traj.stream.ang_vel[:, 2], 0.2 * np.pi * np.cos(2 * np.pi * t), atol=1e-4)


def test_single_joint_angular_rate_finite_difference():
    # central differences carry O(dt^2) truncation error: ~4e-4 here, hence the looser bound
    traj = single_joint_sine("finite_difference")
    t = traj.stream.t[1:-1]
    np.testing.assert_allclose(traj.stream.ang_vel[1:-1, 2], 0.2 * np.pi * np.cos(2 * np.pi * t), atol=1e-3)


def test_zero_speed_is_static():
    traj = generate_trajectory(default_chain(), TrajectoryConfig(duration=2.0, speed_scale=0.0))
    s = traj.stream
    np.testing.assert_array_equal(s.rotation, np.broadcast_to(s.rotation[0], s.rotation.shape))
    for arr in (s.lin_vel, s.ang_vel, s.lin_acc, s.ang_acc):
        np.testing.assert_array_equal(arr, 0)
    assert traj.avg_ang_speed == 0.0


def test_joint_angles_follow_closed_form():
    cfg = TrajectoryConfig(duration=5.0, speed_scale=321.0)
    t = cfg.times
    q = cfg.joint_angles(t)[0]
    expected = np.asarray(cfg.initial_angles) + np.pi / 4 * np.sin(
        2 * np.pi * np.outer(t, cfg.frequencies) * 321.0 / 240.0
    ) * (np.asarray(cfg.amplitudes) > 0)
    np.testing.assert_allclose(q, expected, atol=1e-12)


def test_speed_calibration_hits_target():
    cfg = calibrate_speed(default_chain(), TrajectoryConfig(), 1.1)
    traj = generate_trajectory(default_chain(), cfg)
    assert traj.avg_ang_speed == pytest.approx(1.1, abs=1e-6)
    assert 0.05 < traj.avg_lin_speed < 0.25


def test_config_validation():
    with pytest.raises(ValueError):
        TrajectoryConfig(rate=0.0)
    with pytest.raises(ValueError):
        TrajectoryConfig(duration=-1.0)
    with pytest.raises(ValueError):
        TrajectoryConfig(derivatives="spline")


def test_noise_presets_match_table():
    table = {
        "None": (0, 0, 0, 0),
        "Low": (0.25, 0.025, 0.05, 0.0025),
        "Moderate": (0.5, 0.05, 0.1, 0.005),
        "High": (1.0, 0.1, 0.33, 0.0067),
    }
    for name, sig in table.items():
        p = NOISE_PRESETS[name]
        assert (p.sigma_angacc, p.sigma_linacc, p.sigma_force, p.sigma_torque) == sig
    with pytest.raises(ValueError):
        NoiseLevel.preset("Extreme")
    with pytest.raises(ValueError):
        NoiseLevel("bad", -1, 0, 0, 0)


@pytest.fixture(scope="module")
def short_stream():
    cfg = calibrate_speed(default_chain(), TrajectoryConfig(), 1.0)
    return generate_trajectory(default_chain(), replace(cfg, duration=3.0)).stream


def test_none_noise_is_pure_simulation(short_stream):
    _, truth = build_test_object("Tee")
    out = simulate_measurements(truth, short_stream, "None", seed=4)
    for k in (0, 50, 300):
        w = newton_euler_wrench(truth, short_stream.sample(k))
        np.testing.assert_allclose(out.force[k], w.force, atol=1e-12)
        np.testing.assert_allclose(out.torque[k], w.torque, atol=1e-12)
    np.testing.assert_array_equal(out.lin_acc, short_stream.lin_acc)
    np.testing.assert_array_equal(out.ang_acc, short_stream.ang_acc)


def test_noise_is_deterministic(short_stream):
    _, truth = build_test_object("Rod")
    a = simulate_measurements(truth, short_stream, "High", seed=9)
    b = simulate_measurements(truth, short_stream, "High", seed=9)
    c = simulate_measurements(truth, short_stream, "High", seed=10)
    for name in ("force", "torque", "lin_acc", "ang_acc"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    assert not np.array_equal(a.force, c.force)


def static_stream(n):
    return Stream(
        np.arange(n) / 100.0, np.broadcast_to(np.eye(3), (n, 3, 3)).copy(), np.zeros((n, 3)),
        np.zeros((n, 3)), np.zeros((n, 3)), np.zeros((n, 3)), np.zeros((n, 3)),
    )


@pytest.mark.parametrize("level", ["Low", "Moderate", "High"])
def test_empirical_noise_calibration(level):
    n = 100_000 // 3 + 1  # three axes per channel -> >= 1e5 draws each
    _, truth = build_test_object("Hammer")
    states = static_stream(n)
    clean = simulate_measurements(truth, states, "None")
    noisy = simulate_measurements(truth, states, level, seed=1)
    preset = NOISE_PRESETS[level]
    for name, sigma in (("force", preset.sigma_force), ("torque", preset.sigma_torque),
                        ("lin_acc", preset.sigma_linacc), ("ang_acc", preset.sigma_angacc)):
        resid = (getattr(noisy, name) - getattr(clean, name)).ravel()
        assert np.std(resid) == pytest.approx(sigma, rel=0.02), name


def test_dynamism_examples():
    s = KinematicSample.static()
    assert dynamism(s) == 0.0
    assert dynamism(s.with_kinematics(lin_acc=[1, 0, 0])) == pytest.approx(1.0)
    assert dynamism(s.with_kinematics(ang_vel=[0.5, 0, 0])) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        dynamism(s, n1=0.0)


def test_stream_dynamism_matches_samplewise(short_stream):
    D = stream_dynamism(short_stream)
    for k in (0, 10, 200):
        assert D[k] == pytest.approx(dynamism(short_stream.sample(k)))


def constant_twist_stream(n=200, dt=0.01):
    t = np.arange(n) * dt
    v = np.array([0.1, -0.05, 0.2])
    w = np.array([0.3, 0.2, -0.4])
    R = Rotation.from_rotvec(np.outer(t, w)).as_matrix()
    z = np.zeros((n, 3))
    return Stream(t, R, np.array([0.4, 0.1, 0.3]) + np.outer(t, v), z, z.copy(), z.copy(), z.copy()), v, w


def test_kalman_tracks_constant_velocity():
    stream, v, w = constant_twist_stream()
    out = kalman_smooth(stream).stream
    np.testing.assert_allclose(out.lin_vel[20:], np.broadcast_to(v, out.lin_vel[20:].shape), atol=1e-6)
    np.testing.assert_allclose(out.ang_vel[20:], np.broadcast_to(w, out.ang_vel[20:].shape), atol=1e-6)


def test_kalman_uncertainty_is_non_increasing():
    stream, _, _ = constant_twist_stream()
    res = kalman_smooth(stream)
    assert np.all(np.diff(res.trace) <= 1e-12 * res.trace[:-1])
    k = res.stabilized_index()
    assert 10 <= k < len(stream)
    assert abs(res.trace[k] - res.trace[k - 10]) <= 0.01 * res.trace[k]


def test_stabilized_index_rule():
    trace = np.concatenate([np.linspace(10, 1, 30), np.ones(30)])
    k = stabilized_index(trace)
    assert k == 39  # trace[29] already equals its settled value
    assert stabilized_index(np.linspace(10, 1, 5)) == 5  # never settles


def test_filtered_acceleration_beats_finite_differences():
    # slightly noisy poses: differencing twice amplifies noise, the filter does not
    rng = np.random.default_rng(3)
    cfg = calibrate_speed(default_chain(), TrajectoryConfig(), 1.0)
    truth = generate_trajectory(default_chain(), replace(cfg, duration=10.0)).stream
    noisy = simulate_measurements(build_test_object("Empty")[1], truth, "Moderate", seed=2)
    noisy.translation = noisy.translation + rng.normal(scale=1e-4, size=noisy.translation.shape)
    filt = kalman_smooth(noisy, KalmanConfig.for_noise("Moderate")).stream
    dt = truth.t[1] - truth.t[0]
    fd = np.gradient(np.gradient(noisy.translation, dt, axis=0), dt, axis=0)
    sl = slice(50, -50)
    rmse = lambda x: np.sqrt(np.mean((x[sl] - truth.lin_acc[sl]) ** 2))  # noqa: E731
    assert rmse(filt.lin_acc) < rmse(fd)
    assert rmse(filt.lin_acc) < rmse(noisy.lin_acc)  # also improves on the raw accelerometer channel


def test_kalman_input_validation():
    stream, _, _ = constant_twist_stream(5)
    with pytest.raises(ValueError):
        kalman_smooth(stream.window(0, 1))
    bad = stream.copy(t=np.array([0.0, 0.01, 0.03, 0.04, 0.05]))
    with pytest.raises(ValueError):
        kalman_smooth(bad)


def test_stream_csv_round_trip(tmp_path, short_stream):
    _, truth = build_test_object("Corners")
    data = simulate_measurements(truth, short_stream, "Low", seed=5)
    write_stream_csv(tmp_path / "s.csv", data)
    back = read_stream_csv(tmp_path / "s.csv")
    for name in ("t", "rotation", "translation", "lin_vel", "ang_vel", "lin_acc", "ang_acc", "force", "torque"):
        np.testing.assert_array_equal(getattr(back, name), getattr(data, name))
    assert back.meta == {"noise": "Low", "seed": 5}
    write_stream_csv(tmp_path / "t.csv", back)
    assert (tmp_path / "s.csv").read_text() == (tmp_path / "t.csv").read_text()


def test_stream_helpers(short_stream):
    w = short_stream.window(10, 20)
    assert len(w) == 10 and w.t[0] == short_stream.t[10]
    st_ = short_stream.stopped()
    assert np.all(st_.ang_vel == 0) and np.array_equal(st_.rotation, short_stream.rotation)
    rebuilt = Stream.from_samples(short_stream.window(0, 5).samples())
    np.testing.assert_array_equal(rebuilt.rotation, short_stream.rotation[:5])

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from cobot_inertia.discretization import PointMassModel, aggregate, build_test_object, sample_points
from cobot_inertia.estimation import stacked_regressor
from cobot_inertia.metrics import (
    ADL_MEANS,
    ObjectExtent,
    condition_number_scaled,
    error_metrics,
    gravity_dominance,
    inertia_scale,
    kernel_invariance_check,
    reduced_rank_diagnostics,
    tikhonov_min_eig,
)
from cobot_inertia.rigid_body import InertialParams
from cobot_inertia.signals import TrajectoryConfig, calibrate_speed, default_chain, generate_trajectory

from conftest import random_params, random_rotation, seeds


def test_error_metric_examples():
    truth = InertialParams(0.25, [0.0, 0.0, 0.0], [1e-3, 0, 0, 1e-3, 0, 1e-3])
    ext = ObjectExtent(0.2, 0.1, 0.05)
    zero = error_metrics(truth, truth, ext)
    assert zero.mass_err == 0 and zero.com_avg == 0 and zero.inertia_avg == 0
    heavier = InertialParams(0.26, [0.0, 0.0, 0.0], truth.inertia)
    assert error_metrics(heavier, truth, ext).mass_err == pytest.approx(4.0)
    shifted = InertialParams(0.25, [0.25 * 0.01, 0, 0], truth.inertia)
    err = error_metrics(shifted, truth, ext)
    assert err.com_err[0] == pytest.approx(5.0)
    assert err.com_avg == pytest.approx(5.0 / 3)


def test_inertia_denominators():
    ext = ObjectExtent(0.2, 0.1, 0.05)
    m = 2.0
    expected = m / 12 * np.array([0.01 + 0.0025, 0.02, 0.01, 0.04 + 0.0025, 0.005, 0.04 + 0.01])
    np.testing.assert_allclose(inertia_scale(m, ext), expected)


def test_extent_must_be_positive():
    with pytest.raises(ValueError):
        ObjectExtent(0.1, 0.0, 0.1)
    truth = InertialParams(1.0, np.zeros(3), np.zeros(6))
    with pytest.raises(ValueError):
        error_metrics(truth, truth, (0.1, 0.1, 0.0))


@given(seeds, st.floats(0.1, 10), st.floats(0.1, 10))
def test_metrics_are_scale_invariant(seed, k, s):
    rng = np.random.default_rng(seed)
    truth, est = random_params(rng), random_params(rng)
    ext = ObjectExtent(*rng.uniform(0.05, 0.3, 3))

    def scale(p):
        return InertialParams(k * p.mass, k * s * p.first_moment, k * s * s * p.inertia)

    e1 = error_metrics(est, truth, ext)
    e2 = error_metrics(scale(est), scale(truth), ObjectExtent(*(s * ext.array())))
    np.testing.assert_allclose(
        [e2.mass_err, *e2.com_err, *e2.inertia_err], [e1.mass_err, *e1.com_err, *e1.inertia_err], rtol=1e-9
    )


def test_condition_number_examples():
    Q, _ = np.linalg.qr(np.random.default_rng(0).normal(size=(30, 10)))
    assert condition_number_scaled(Q).kappa == pytest.approx(1.0)
    dup = np.column_stack([Q[:, :9], Q[:, 0]])
    rep = condition_number_scaled(dup)
    assert rep.singular and np.isinf(rep.kappa)
    withzero = Q.copy()
    withzero[:, 3] = 0
    rep = condition_number_scaled(withzero)
    assert rep.zero_columns == (3,) and rep.kappa == pytest.approx(1.0)
    with pytest.raises(ValueError):
        condition_number_scaled(Q[:5])


def test_condition_number_is_column_scale_free():
    rng = np.random.default_rng(2)
    A = rng.normal(size=(50, 10))
    D = np.diag(10.0 ** rng.uniform(-4, 4, 10))
    assert condition_number_scaled(A @ D).kappa == pytest.approx(condition_number_scaled(A).kappa, rel=1e-8)


def test_condition_number_of_a_trajectory_window():
    cfg = calibrate_speed(default_chain(), TrajectoryConfig(), 1.0)
    stream = generate_trajectory(default_chain(), cfg).stream.window(100, 250)
    rep = condition_number_scaled(stacked_regressor(stream))
    assert np.isfinite(rep.kappa) and rep.kappa < 1e4


def test_gravity_dominance_of_daily_manipulation():
    dom = gravity_dominance(**ADL_MEANS)
    assert 4.0 <= dom.ratio <= 6.0
    still = gravity_dominance(a=0.0, omega=0.0, alpha=0.0)
    assert still.gravity_only
    heavy = gravity_dominance(a=9.81 * 5, omega=0.0, alpha=0.0)
    assert heavy.ratio == pytest.approx(0.2)
    with pytest.raises(ValueError):
        gravity_dominance(m=0.0)


def random_poses(rng, n):
    return [(random_rotation(rng), rng.normal(size=3)) for _ in range(n)]


def test_rank_of_reduced_model():
    rng = np.random.default_rng(4)
    P = rng.normal(scale=0.1, size=(10, 3))
    rep = reduced_rank_diagnostics(P, random_poses(rng, 5))
    assert rep.rank == 4 and not rep.degenerate and not rep.coplanar
    assert rep.kernel.shape == (10, 6)
    np.testing.assert_allclose(rep.kernel.T @ rep.kernel, np.eye(6), atol=1e-12)


def test_rotations_about_gravity_lose_rank():
    rng = np.random.default_rng(5)
    P = rng.normal(scale=0.1, size=(10, 3))
    poses = [(Rotation.from_rotvec([0, 0, a]).as_matrix(), rng.normal(size=3)) for a in rng.uniform(0, 6, 6)]
    rep = reduced_rank_diagnostics(P, poses)
    assert rep.rank < 4 and rep.degenerate


def test_coplanar_points_are_flagged():
    P = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0.0]])
    rep = reduced_rank_diagnostics(P, random_poses(np.random.default_rng(6), 4))
    assert rep.coplanar
    with pytest.raises(ValueError):
        reduced_rank_diagnostics(P, random_poses(np.random.default_rng(6), 1))


@given(seeds, st.integers(5, 25))
def test_kernel_dimension_and_invariance(seed, n):
    rng = np.random.default_rng(seed)
    P = rng.normal(scale=0.1, size=(n, 3))
    rep = reduced_rank_diagnostics(P, random_poses(rng, 4))
    assert rep.rank == 4
    assert rep.kernel.shape[1] == n - 4
    masses = rng.uniform(0.1, 1.0, n)
    chk = kernel_invariance_check(rep.kernel, P, masses)
    assert chk.conserves_mass_and_com
    assert np.all(chk.mass_change < 1e-9) and np.all(chk.moment_change < 1e-9)
    assert chk.inertia_unidentifiable


def test_kernel_step_keeps_mass_and_com():
    shape, truth = build_test_object("Tee")
    P = sample_points(shape, 0.04)
    rep = reduced_rank_diagnostics(P, random_poses(np.random.default_rng(8), 6))
    m = np.full(len(P), truth.mass / len(P))
    dm = rep.kernel[:, 0]
    eps = 0.5 * np.min(m / np.abs(dm))
    a, b = aggregate(PointMassModel(P, m)), aggregate(PointMassModel(P, m + eps * dm))
    assert abs(a.mass - b.mass) < 1e-9
    np.testing.assert_allclose(a.first_moment, b.first_moment, atol=1e-9)
    assert np.abs(a.inertia - b.inertia).max() > 1e-6


def test_empty_kernel_is_vacuous():
    rng = np.random.default_rng(9)
    P = rng.normal(size=(4, 3))
    rep = reduced_rank_diagnostics(P, random_poses(rng, 4))
    assert rep.kernel.shape == (4, 0)
    chk = kernel_invariance_check(rep.kernel, P, np.ones(4))
    assert chk.conserves_mass_and_com


@given(seeds, st.floats(1e-4, 10))
def test_tikhonov_floor(seed, lam):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(12, 8)) * rng.uniform(0, 1, 8)
    assert tikhonov_min_eig(A, lam) >= lam * (1 - 1e-9)

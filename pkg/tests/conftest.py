import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from cobot_inertia.rigid_body import InertialParams, KinematicSample

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

finite = st.floats(-5.0, 5.0, allow_nan=False, allow_infinity=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)
seeds = st.integers(0, 2**31 - 1)


def random_rotation(rng):
    return Rotation.random(random_state=rng).as_matrix()


def random_state(rng, scale=2.0):
    return KinematicSample(
        float(rng.uniform(0, 10)),
        random_rotation(rng),
        rng.normal(size=3),
        rng.normal(scale=scale, size=3),
        rng.normal(scale=scale, size=3),
        rng.normal(scale=scale, size=3),
        rng.normal(scale=scale, size=3),
    )


def random_params(rng):
    """Physically consistent parameters: a random ellipsoid-ish body off the origin."""
    m = rng.uniform(0.1, 3.0)
    c = rng.normal(scale=0.2, size=3)
    principal = rng.uniform(0.01, 0.1, size=3)
    # enforce the triangle inequality on principal moments
    principal[2] = min(principal[2], principal[0] + principal[1])
    R = random_rotation(rng)
    return InertialParams.from_com(m, c, R @ np.diag(principal) @ R.T)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def enumerate_nnls(A, b, lam=0.0):
    """Brute force: best unconstrained solution over every support set with x >= 0."""
    n = A.shape[1]
    H = A.T @ A + lam * np.eye(n)
    c = A.T @ b
    best, best_val = np.zeros(n), 0.5 * b @ b
    for k in range(1, n + 1):
        for S in itertools.combinations(range(n), k):
            S = list(S)
            try:
                xs = np.linalg.solve(H[np.ix_(S, S)], c[S])
            except np.linalg.LinAlgError:
                continue
            if np.any(xs < -1e-12):
                continue
            x = np.zeros(n)
            x[S] = np.clip(xs, 0, None)
            val = 0.5 * x @ H @ x - c @ x + 0.5 * b @ b
            if val < best_val - 1e-15:
                best, best_val = x, val
    return best


# -- acceptance summary ----------------------------------------------------------

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

"""Inertial parameter identification of grasped objects by point mass discretization."""

from .discretization import (
    ALL_CONFIGS,
    PointMassModel,
    Primitive,
    ShapeSpec,
    TestObjectConfig,
    aggregate,
    build_test_object,
    sample_points,
)
from .estimation import PMDConfig, EstimateReport, ols_identify, pmd_identify, rtls_identify, weight
from .metrics import ObjectExtent, error_metrics, gravity_dominance
from .rigid_body import InertialParams, KinematicSample, Wrench, newton_euler_wrench
from .signals import KalmanConfig, NoiseLevel, Stream, TrajectoryConfig, kalman_smooth, simulate_measurements

__version__ = "0.1.0"

__all__ = [
    "ALL_CONFIGS", "PointMassModel", "Primitive", "ShapeSpec", "TestObjectConfig", "aggregate",
    "build_test_object", "sample_points", "PMDConfig", "EstimateReport", "ols_identify",
    "pmd_identify", "rtls_identify", "weight", "ObjectExtent", "error_metrics", "gravity_dominance",
    "InertialParams", "KinematicSample", "Wrench", "newton_euler_wrench", "KalmanConfig",
    "NoiseLevel", "Stream", "TrajectoryConfig", "kalman_smooth", "simulate_measurements",
]

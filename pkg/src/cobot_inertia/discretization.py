"""Object shapes, point-mass sampling and the modular test object."""

from __future__ import annotations

import csv
import enum
import json
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .rigid_body import InertialParams, check_rotation, point_params, transform_params

_BOUNDARY_EPS = 1e-12
PRIMITIVE_KINDS = ("box", "cylinder", "sphere")


class SamplingWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Primitive:
    """A solid primitive posed in the body frame.

    ``dims`` is ``(lx, ly, lz)`` for a box, ``(radius, length)`` for a
    cylinder along its local z axis and ``(radius,)`` for a sphere.
    """

    kind: str
    dims: tuple
    density: float = 0.0
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if self.kind not in PRIMITIVE_KINDS:
            raise ValueError(f"unknown primitive kind {self.kind!r}")
        dims = tuple(float(d) for d in self.dims)
        expected = {"box": 3, "cylinder": 2, "sphere": 1}[self.kind]
        if len(dims) != expected or min(dims) <= 0:
            raise ValueError(f"{self.kind} needs {expected} positive dimensions, got {self.dims}")
        if self.density < 0:
            raise ValueError("density must be non-negative")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "density", float(self.density))
        object.__setattr__(self, "rotation", check_rotation(self.rotation))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float).reshape(3))

    @property
    def volume(self):
        if self.kind == "box":
            return float(np.prod(self.dims))
        if self.kind == "cylinder":
            r, l = self.dims
            return np.pi * r * r * l
        return 4.0 / 3.0 * np.pi * self.dims[0] ** 3

    @property
    def mass(self):
        return self.density * self.volume

    def _local(self, points):
        return (np.asarray(points, dtype=float) - self.translation) @ self.rotation

    def contains(self, points):
        q = self._local(np.atleast_2d(points))
        eps = _BOUNDARY_EPS
        if self.kind == "box":
            return np.all(np.abs(q) <= 0.5 * np.asarray(self.dims) + eps, axis=1)
        if self.kind == "cylinder":
            r, l = self.dims
            return (q[:, 0] ** 2 + q[:, 1] ** 2 <= r * r + eps) & (np.abs(q[:, 2]) <= 0.5 * l + eps)
        return np.sum(q * q, axis=1) <= self.dims[0] ** 2 + eps

    def bounds(self):
        if self.kind == "sphere":
            r = self.dims[0]
            return self.translation - r, self.translation + r
        half = 0.5 * np.asarray(self.dims if self.kind == "box" else (self.dims[0] * 2, self.dims[0] * 2, self.dims[1]))
        extent = np.abs(self.rotation) @ half
        return self.translation - extent, self.translation + extent

    def params(self, density=None):
        """Exact inertial parameters of the solid, body frame."""
        rho = self.density if density is None else density
        m = rho * self.volume
        if self.kind == "box":
            lx, ly, lz = self.dims
            J = m / 12.0 * np.diag([ly**2 + lz**2, lx**2 + lz**2, lx**2 + ly**2])
        elif self.kind == "cylinder":
            r, l = self.dims
            jxy = m * (3 * r * r + l * l) / 12.0
            J = np.diag([jxy, jxy, 0.5 * m * r * r])
        else:
            J = 0.4 * m * self.dims[0] ** 2 * np.eye(3)
        local = InertialParams(m, np.zeros(3), J)
        return transform_params(local, self.rotation, self.translation)


@dataclass(frozen=True)
class PointPayload:
    mass: float
    position: np.ndarray

    def __post_init__(self):
        if self.mass < 0:
            raise ValueError("payload mass must be non-negative")
        object.__setattr__(self, "mass", float(self.mass))
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))


@dataclass(frozen=True)
class ShapeSpec:
    """Union of primitives plus point payloads lying inside them.

    Primitives are assumed not to overlap; volumes and masses add.
    """

    primitives: tuple
    payloads: tuple = ()
    name: str = "shape"

    def __post_init__(self):
        object.__setattr__(self, "primitives", tuple(self.primitives))
        object.__setattr__(self, "payloads", tuple(self.payloads))
        if not self.primitives:
            raise ValueError("a shape needs at least one primitive")
        for p in self.payloads:
            if not self.contains(p.position):
                raise ValueError(f"payload at {p.position} lies outside the shape")
        if self.total_mass <= 0:
            raise ValueError("total mass must be positive")

    @property
    def volume(self):
        return sum(p.volume for p in self.primitives)

    @property
    def total_mass(self):
        return sum(p.mass for p in self.primitives) + sum(p.mass for p in self.payloads)

    def contains(self, point):
        return bool(self.contains_points(np.atleast_2d(point))[0])

    def contains_points(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        inside = np.zeros(len(points), dtype=bool)
        for prim in self.primitives:
            inside |= prim.contains(points)
        return inside

    def bounds(self):
        lo, hi = zip(*(p.bounds() for p in self.primitives))
        return np.min(lo, axis=0), np.max(hi, axis=0)

    def extent(self):
        lo, hi = self.bounds()
        return hi - lo

    def params(self):
        """Ground truth by exact primitive and payload sums."""
        total = np.zeros(10)
        for prim in self.primitives:
            total += prim.params().vector()
        for pay in self.payloads:
            total += pay.mass * point_params(pay.position)[:, 0]
        return InertialParams.from_vector(total)


def contains(shape, point):
    return shape.contains(point)


def grid_spacing(density):
    """Grid pitch in metres for ``density`` points per cubic centimetre."""
    if density <= 0:
        raise ValueError("density must be positive")
    return 0.01 * density ** (-1.0 / 3.0)


def sample_points(shape, density, seed=None):
    """Regular grid of points inside ``shape`` at ``density`` points/cm^3.

    The grid is centred on the bounding box; ``seed`` shifts its phase by up
    to half a pitch per axis. If no grid node falls inside the shape, a single
    point at the centre of the largest primitive is returned with a
    :class:`SamplingWarning`.
    """
    if shape.volume <= 0:
        raise ValueError("shape has zero volume")
    h = grid_spacing(density)
    lo, hi = shape.bounds()
    centre = 0.5 * (lo + hi)
    if seed is not None:
        centre = centre + np.random.default_rng(seed).uniform(-0.5, 0.5, 3) * h
    axes = []
    for L, c in zip(hi - lo, centre):
        n = max(1, int(round(L / h)))
        axes.append(c + (np.arange(n) - 0.5 * (n - 1)) * h)
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    points = grid[shape.contains_points(grid)]
    if len(points) == 0:
        warnings.warn("grid missed the shape; falling back to a single point", SamplingWarning, stacklevel=2)
        largest = max(shape.primitives, key=lambda p: p.volume)
        points = largest.translation[None, :].copy()
    return points


@dataclass(frozen=True)
class PointMassModel:
    positions: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.positions, dtype=float))
        m = np.asarray(self.masses, dtype=float).reshape(-1)
        if P.shape != (len(m), 3):
            raise ValueError("positions must be (n, 3) matching the mass vector")
        if np.any(m < 0):
            raise ValueError("point masses must be non-negative")
        object.__setattr__(self, "positions", P)
        object.__setattr__(self, "masses", m)

    def __len__(self):
        return len(self.masses)


def aggregate(model):
    """Inertial parameters of a set of point masses."""
    if len(model) == 0:
        raise ValueError("empty point-mass model")
    if not np.any(model.masses > 0):
        raise ValueError("all point masses are zero")
    return InertialParams.from_vector(point_params(model.positions) @ model.masses)


class TestObjectConfig(enum.Enum):
    Hammer = "Hammer"
    Barbell = "Barbell"
    Tee = "Tee"
    Uniform = "Uniform"
    Corners = "Corners"
    Rod = "Rod"
    HalfNHalf = "HalfNHalf"
    Empty = "Empty"

    __test__ = False  # not a pytest class


ALL_CONFIGS = tuple(TestObjectConfig)


@lru_cache(maxsize=None)
def _geometry():
    with resources.files(__package__).joinpath("data/test_object.json").open() as fh:
        return json.load(fh)


def slot_centres(geometry=None):
    """Slot centres as a (rows, cols, 3) array."""
    geo = geometry or _geometry()
    sx, sy, _ = geo["structure"]["size"]
    cx, cy, _ = geo["structure"]["center"]
    rows, cols = geo["slots"]["rows"], geo["slots"]["cols"]
    xs = cx + (np.arange(cols) - 0.5 * (cols - 1)) * sx / cols
    ys = cy + (np.arange(rows) - 0.5 * (rows - 1)) * sy / rows
    out = np.empty((rows, cols, 3))
    out[..., 0] = xs[None, :]
    out[..., 1] = ys[:, None]
    out[..., 2] = geo["slots"]["z"]
    return out


def build_test_object(config, geometry=None):
    """Shape and exact ground truth of the modular test object in ``config``."""
    config = TestObjectConfig(config)
    geo = geometry or _geometry()
    st = geo["structure"]
    block = Primitive("box", st["size"], st["density"], translation=st["center"])
    centres = slot_centres(geo)
    layout = geo["configurations"][config.value]
    payloads = []
    for r, row in enumerate(layout):
        for c, code in enumerate(row):
            if code in geo["payload_mass"]:
                payloads.append(PointPayload(geo["payload_mass"][code], centres[r, c]))
    shape = ShapeSpec((block,), tuple(payloads), name=config.value)
    return shape, shape.params()


# -- serialization -----------------------------------------------------------


def shape_to_dict(shape):
    return {
        "name": shape.name,
        "primitives": [
            {
                "kind": p.kind,
                "dims": list(p.dims),
                "density": p.density,
                "rotation": p.rotation.tolist(),
                "translation": p.translation.tolist(),
            }
            for p in shape.primitives
        ],
        "payloads": [{"mass": p.mass, "position": p.position.tolist()} for p in shape.payloads],
    }


def shape_from_dict(d):
    prims = [
        Primitive(
            p["kind"],
            tuple(p["dims"]),
            p.get("density", 0.0),
            np.asarray(p.get("rotation", np.eye(3)), dtype=float),
            np.asarray(p.get("translation", np.zeros(3)), dtype=float),
        )
        for p in d["primitives"]
    ]
    pays = [PointPayload(p["mass"], p["position"]) for p in d.get("payloads", [])]
    return ShapeSpec(tuple(prims), tuple(pays), d.get("name", "shape"))


def save_shape(shape, path):
    Path(path).write_text(json.dumps(shape_to_dict(shape), indent=2))


def load_shape(path):
    return shape_from_dict(json.loads(Path(path).read_text()))


def write_points_csv(path, positions, masses=None):
    positions = np.atleast_2d(positions)
    masses = np.zeros(len(positions)) if masses is None else np.asarray(masses)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "z", "mass"])
        for p, m in zip(positions, masses):
            w.writerow([repr(float(p[0])), repr(float(p[1])), repr(float(p[2])), repr(float(m))])


def read_points_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, :3], data[:, 3]

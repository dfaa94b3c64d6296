"""Parameter sets T with their normalized measures and the matching samplers.

Three families are supported: the unit circle (points stored as ``u`` in
``[0, 1)``), the sphere ``S^{d-1}`` embedded in ``R^d`` and the finite grid
``{1..m} x {1..n}`` carrying the uniform measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

CIRCLE = "circle"
SPHERE = "sphere"
GRID = "grid"

UNIT_NORM_TOL = 1e-12


class UnsupportedSpaceError(ValueError):
    """Raised when an operation is requested on a space kind it does not support."""


@dataclass(frozen=True)
class Space:
    kind: str
    dim: int | None = None
    rows: int | None = None
    cols: int | None = None

    def __post_init__(self):
        if self.kind == CIRCLE:
            if self.dim is not None or self.rows is not None or self.cols is not None:
                raise ValueError("circle takes no parameters")
        elif self.kind == SPHERE:
            if self.dim is None or int(self.dim) != self.dim or self.dim < 2:
                raise ValueError(f"sphere dimension must be an integer >= 2, got {self.dim!r}")
        elif self.kind == GRID:
            for name in ("rows", "cols"):
                v = getattr(self, name)
                if v is None or int(v) != v or v < 1:
                    raise ValueError(f"grid {name} must be an integer >= 1, got {v!r}")
        else:
            raise ValueError(f"unknown space kind {self.kind!r}")

    @classmethod
    def circle(cls) -> Space:
        return cls(CIRCLE)

    @classmethod
    def sphere(cls, dim: int) -> Space:
        return cls(SPHERE, dim=dim)

    @classmethod
    def grid(cls, rows: int, cols: int) -> Space:
        return cls(GRID, rows=rows, cols=cols)

    @property
    def is_continuous(self) -> bool:
        return self.kind != GRID

    @property
    def size(self) -> int:
        """Number of atoms N = m*n of a grid."""
        if self.kind != GRID:
            raise UnsupportedSpaceError(f"{self.kind} has no finite size")
        return self.rows * self.cols

    def point(self, value, normalize: bool = False) -> Point:
        """Build a validated Point of this space from raw coordinates.

        Circle takes a float ``u`` (reduced mod 1), sphere a length-``d``
        vector, grid a 1-based ``(i, j)`` pair. With ``normalize`` a sphere
        vector is projected to unit length first.
        """
        if self.kind == CIRCLE:
            return Point(self, (_reduce_mod1(float(value)),))
        if self.kind == SPHERE:
            v = np.asarray(value, dtype=float).reshape(-1)
            if normalize:
                v = v / np.linalg.norm(v)
            return Point(self, tuple(float(x) for x in v))
        i, j = value
        return Point(self, (int(i), int(j)))

    def north_pole(self) -> Point:
        """The last basis vector e_d of a sphere, i.e. (0, ..., 0, 1)."""
        if self.kind != SPHERE:
            raise UnsupportedSpaceError("north pole is only defined on spheres")
        v = np.zeros(self.dim)
        v[-1] = 1.0
        return self.point(v)

    def points(self) -> list[Point]:
        """All atoms of a grid in row-major order."""
        if self.kind != GRID:
            raise UnsupportedSpaceError(f"cannot enumerate points of a {self.kind}")
        return [Point(self, (i, j)) for i in range(1, self.rows + 1) for j in range(1, self.cols + 1)]

    def __str__(self):
        if self.kind == CIRCLE:
            return "Circle"
        if self.kind == SPHERE:
            return f"Sphere({self.dim})"
        return f"Grid({self.rows},{self.cols})"


def _reduce_mod1(u: float) -> float:
    r = u % 1.0
    # -1e-17 % 1.0 rounds to 1.0
    return 0.0 if r >= 1.0 else r


@dataclass(frozen=True)
class Point:
    space: Space
    coords: tuple

    def __post_init__(self):
        kind = self.space.kind
        if kind == CIRCLE:
            if len(self.coords) != 1 or not 0.0 <= self.coords[0] < 1.0:
                raise ValueError(f"circle point must satisfy 0 <= u < 1, got {self.coords}")
        elif kind == SPHERE:
            if len(self.coords) != self.space.dim:
                raise ValueError(f"expected {self.space.dim} coordinates, got {len(self.coords)}")
            norm = math.sqrt(math.fsum(x * x for x in self.coords))
            if abs(norm - 1.0) > UNIT_NORM_TOL:
                raise ValueError(f"sphere point has norm {norm!r}, not 1")
        else:
            i, j = self.coords
            if not (1 <= i <= self.space.rows and 1 <= j <= self.space.cols):
                raise ValueError(f"grid index {self.coords} outside {self.space}")

    @property
    def u(self) -> float:
        if self.space.kind != CIRCLE:
            raise UnsupportedSpaceError("u is only defined for circle points")
        return self.coords[0]

    @property
    def vector(self) -> np.ndarray:
        if self.space.kind != SPHERE:
            raise UnsupportedSpaceError("vector is only defined for sphere points")
        return np.array(self.coords)

    @property
    def index(self) -> tuple[int, int]:
        if self.space.kind != GRID:
            raise UnsupportedSpaceError("index is only defined for grid points")
        return self.coords

    def as_array(self) -> np.ndarray:
        """Coordinates in the array layout used by the vectorized samplers."""
        if self.space.kind == CIRCLE:
            return np.array(self.coords[0])
        return np.array(self.coords)


def sample_mu_array(space: Space, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``size`` mu-distributed points as a raw array.

    Shapes: circle ``(size,)``, sphere ``(size, d)``, grid ``(size, 2)`` of
    1-based integer indices.
    """
    if space.kind == CIRCLE:
        return rng.random(size)
    if space.kind == SPHERE:
        g = rng.standard_normal((size, space.dim))
        return g / np.linalg.norm(g, axis=1, keepdims=True)
    flat = rng.integers(0, space.size, size=size)
    return np.column_stack((flat // space.cols + 1, flat % space.cols + 1))


def sample_mu(space: Space, rng: np.random.Generator) -> Point:
    raw = sample_mu_array(space, 1, rng)[0]
    if space.kind == GRID:
        return Point(space, (int(raw[0]), int(raw[1])))
    if space.kind == CIRCLE:
        return Point(space, (float(raw),))
    return Point(space, tuple(float(x) for x in raw))


def antipode_array(space: Space, pts: np.ndarray) -> np.ndarray:
    if space.kind == CIRCLE:
        out = (pts + 0.5) % 1.0
        return np.where(out >= 1.0, 0.0, out)
    if space.kind == SPHERE:
        return -pts
    raise UnsupportedSpaceError("antipodes are undefined on a grid")


def antipode(space: Space, p: Point) -> Point:
    if space.kind == CIRCLE:
        return Point(space, (_reduce_mod1(p.u + 0.5),))
    if space.kind == SPHERE:
        return Point(space, tuple(-x for x in p.coords))
    raise UnsupportedSpaceError("antipodes are undefined on a grid")


def sample_antithetic_array(space: Space, half_k: int, rng: np.random.Generator) -> np.ndarray:
    """``half_k`` mu-samples followed by their antipodes, as one array."""
    if space.kind == GRID:
        raise UnsupportedSpaceError("antithetic sampling needs a circle or sphere")
    if half_k < 1:
        raise ValueError(f"half_k must be >= 1, got {half_k}")
    base = sample_mu_array(space, half_k, rng)
    return np.concatenate((base, antipode_array(space, base)))


def sample_antithetic_batch(space: Space, half_k: int, rng: np.random.Generator) -> list[Point]:
    raw = sample_antithetic_array(space, half_k, rng)
    if space.kind == CIRCLE:
        return [Point(space, (float(u),)) for u in raw]
    return [Point(space, tuple(float(x) for x in v)) for v in raw]


def grid_atom_masses(space: Space) -> list[Fraction]:
    """Exact mu({t}) = 1/N for every atom of a grid, row-major."""
    n = space.size
    return [Fraction(1, n)] * n

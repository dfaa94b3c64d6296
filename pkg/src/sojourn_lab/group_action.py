"""Transformation groups acting on parameter sets, their sampling laws and
an empirical check that ``g(a)`` with ``g ~ nu`` reproduces ``mu``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import special

from .param_space import CIRCLE, GRID, SPHERE, Point, Space, UnsupportedSpaceError

CIRCLE_ROTATIONS = "circle-rotations"
SPECIAL_ORTHOGONAL = "SO(d)"
CYCLIC_SHIFTS = "cyclic-shifts"

_FAMILY_FOR_KIND = {CIRCLE: CIRCLE_ROTATIONS, SPHERE: SPECIAL_ORTHOGONAL, GRID: CYCLIC_SHIFTS}

ORTHOGONALITY_TOL = 1e-10
FLAG_SIGMAS = 4.0


class SpaceMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class CircleRotation:
    shift: float

    def __post_init__(self):
        if not 0.0 <= self.shift < 1.0:
            raise ValueError(f"rotation must lie in [0, 1), got {self.shift}")

    @property
    def space(self) -> Space:
        return Space.circle()


@dataclass(frozen=True, eq=False)
class SphereRotation:
    matrix: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.matrix, dtype=float)
        if r.ndim != 2 or r.shape[0] != r.shape[1] or r.shape[0] < 2:
            raise ValueError(f"rotation matrix must be square d x d with d >= 2, got {r.shape}")
        err = np.max(np.abs(r.T @ r - np.eye(r.shape[0])))
        if err > ORTHOGONALITY_TOL:
            raise ValueError(f"matrix is not orthogonal (max deviation {err:.3g})")
        det = np.linalg.det(r)
        if abs(det - 1.0) > ORTHOGONALITY_TOL:
            raise ValueError(f"matrix has determinant {det:.12g}, not +1")
        r.setflags(write=False)
        object.__setattr__(self, "matrix", r)

    @property
    def space(self) -> Space:
        return Space.sphere(self.matrix.shape[0])


@dataclass(frozen=True)
class GridShift:
    rows: int
    cols: int
    row_shift: int
    col_shift: int

    def __post_init__(self):
        if not (0 <= self.row_shift < self.rows and 0 <= self.col_shift < self.cols):
            raise ValueError(f"shift ({self.row_shift}, {self.col_shift}) outside Grid({self.rows},{self.cols})")

    @property
    def space(self) -> Space:
        return Space.grid(self.rows, self.cols)

    def apply_indices(self, i: np.ndarray, j: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized action on 1-based index arrays."""
        return (i - 1 + self.row_shift) % self.rows + 1, (j - 1 + self.col_shift) % self.cols + 1


Transform = CircleRotation | SphereRotation | GridShift


@dataclass(frozen=True)
class GroupSpec:
    space: Space
    family: str = ""

    def __post_init__(self):
        expected = _FAMILY_FOR_KIND[self.space.kind]
        if not self.family:
            object.__setattr__(self, "family", expected)
        elif self.family != expected:
            raise ValueError(f"family {self.family!r} is incompatible with {self.space}")

    @property
    def is_finite(self) -> bool:
        return self.family == CYCLIC_SHIFTS


def quaternion_to_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrices for unit quaternions ``(w, x, y, z)``; accepts ``(..., 4)``."""
    w, x, y, z = np.moveaxis(np.asarray(q, dtype=float), -1, 0)
    return np.stack(
        [
            np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)], axis=-1),
            np.stack([2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)], axis=-1),
            np.stack([2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)], axis=-1),
        ],
        axis=-2,
    )


def random_unit_quaternions(size: int, rng: np.random.Generator) -> np.ndarray:
    # Shoemake's subgroup algorithm: uniform on S^3 from three uniforms.
    u1, u2, u3 = rng.random((3, size))
    r1, r2 = np.sqrt(1.0 - u1), np.sqrt(u1)
    t1, t2 = 2 * np.pi * u2, 2 * np.pi * u3
    return np.column_stack((np.cos(t2) * r2, np.sin(t1) * r1, np.cos(t1) * r1, np.sin(t2) * r2))


def haar_special_orthogonal(dim: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed matrices of SO(dim), shape ``(size, dim, dim)``."""
    if dim == 3:
        return quaternion_to_matrix(random_unit_quaternions(size, rng))
    z = rng.standard_normal((size, dim, dim))
    q, r = np.linalg.qr(z)
    # sign fix makes Q Haar on O(d); flipping one column then lands in SO(d)
    q = q * np.sign(np.diagonal(r, axis1=1, axis2=2))[:, None, :]
    neg = np.linalg.det(q) < 0
    q[neg, :, 0] *= -1
    return q


def sample_nu_many(group: GroupSpec, size: int, rng: np.random.Generator) -> np.ndarray:
    """Raw draws from nu: shifts ``(size,)``, matrices ``(size, d, d)`` or
    integer shift pairs ``(size, 2)``."""
    space = group.space
    if group.family == CIRCLE_ROTATIONS:
        return rng.random(size)
    if group.family == SPECIAL_ORTHOGONAL:
        return haar_special_orthogonal(space.dim, size, rng)
    flat = rng.integers(0, space.size, size=size)
    return np.column_stack((flat // space.cols, flat % space.cols))


def sample_nu(group: GroupSpec, rng: np.random.Generator) -> Transform:
    raw = sample_nu_many(group, 1, rng)[0]
    if group.family == CIRCLE_ROTATIONS:
        return CircleRotation(float(raw))
    if group.family == SPECIAL_ORTHOGONAL:
        return SphereRotation(raw)
    return GridShift(group.space.rows, group.space.cols, int(raw[0]), int(raw[1]))


def apply(g: Transform, p: Point) -> Point:
    if g.space != p.space:
        raise SpaceMismatchError(f"cannot apply a transform of {g.space} to a point of {p.space}")
    if isinstance(g, CircleRotation):
        return p.space.point(p.u + g.shift)
    if isinstance(g, SphereRotation):
        return p.space.point(g.matrix @ p.vector, normalize=True)
    i, j = g.apply_indices(np.array(p.index[0]), np.array(p.index[1]))
    return Point(p.space, (int(i), int(j)))


def enumerate_group(group: GroupSpec) -> list[GridShift]:
    if not group.is_finite:
        raise ValueError(f"{group.family} is a continuous family and cannot be enumerated")
    m, n = group.space.rows, group.space.cols
    return [GridShift(m, n, r, c) for r in range(m) for c in range(n)]


# ---------------------------------------------------------------------------
# Test sets with closed-form measure


@dataclass(frozen=True)
class SphereCap:
    """``{x in S^{d-1} : x_d > threshold}``."""

    threshold: float
    dim: int = 3

    @classmethod
    def with_measure(cls, p: float, dim: int = 3) -> SphereCap:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"cap measure must be in [0, 1], got {p}")
        if dim == 3:
            return cls(1.0 - 2.0 * p, 3)
        if p == 0.5:
            return cls(0.0, dim)
        q = min(p, 1.0 - p)
        c = math.sqrt(1.0 - special.betaincinv((dim - 1) / 2, 0.5, 2.0 * q))
        return cls(c if p < 0.5 else -c, dim)

    @property
    def name(self) -> str:
        return f"cap(x_{self.dim} > {self.threshold:.6g})"

    @property
    def measure(self) -> float:
        c = self.threshold
        if c >= 1.0:
            return 0.0
        if c <= -1.0:
            return 1.0
        if self.dim == 3:
            return (1.0 - c) / 2.0
        tail = 0.5 * special.betainc((self.dim - 1) / 2, 0.5, 1.0 - c * c)
        return tail if c >= 0 else 1.0 - tail

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(pts)[..., -1] > self.threshold


@dataclass(frozen=True)
class Arc:
    """``[start, stop)`` on the circle, ``0 <= start <= stop <= 1``."""

    start: float
    stop: float

    def __post_init__(self):
        if not 0.0 <= self.start <= self.stop <= 1.0:
            raise ValueError(f"arc endpoints must satisfy 0 <= start <= stop <= 1, got {self.start}, {self.stop}")

    @property
    def name(self) -> str:
        return f"arc[{self.start:.6g}, {self.stop:.6g})"

    @property
    def measure(self) -> float:
        return self.stop - self.start

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts)
        return (pts >= self.start) & (pts < self.stop)


@dataclass(frozen=True)
class CellSet:
    rows: int
    cols: int
    cells: frozenset = field(default_factory=frozenset)

    @property
    def name(self) -> str:
        return "cells{" + ",".join(f"({i},{j})" for i, j in sorted(self.cells)) + "}"

    @property
    def measure(self) -> Fraction:
        return Fraction(len(self.cells), self.rows * self.cols)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts).reshape(-1, 2)
        return np.array([(int(i), int(j)) in self.cells for i, j in pts], dtype=bool)


@dataclass(frozen=True)
class PushforwardCheck:
    name: str
    measure: float | Fraction
    frequency: float | Fraction
    sigma: float
    n_samples: int
    exhaustive: bool

    @property
    def deviation(self) -> float | Fraction:
        return self.frequency - self.measure

    @property
    def flagged(self) -> bool:
        if self.exhaustive:
            return self.frequency != self.measure
        return abs(float(self.deviation)) > FLAG_SIGMAS * self.sigma

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "measure": float(self.measure),
            "frequency": float(self.frequency),
            "deviation": float(self.deviation),
            "sigma": self.sigma,
            "n_samples": self.n_samples,
            "exhaustive": self.exhaustive,
            "flagged": self.flagged,
        }
        if self.exhaustive:
            out["measure_exact"] = str(self.measure)
            out["frequency_exact"] = str(self.frequency)
        return out


def _images(group: GroupSpec, a: Point, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    raw = sample_nu_many(group, n_samples, rng)
    if group.family == CIRCLE_ROTATIONS:
        out = (a.u + raw) % 1.0
        return np.where(out >= 1.0, 0.0, out)
    if group.family == SPECIAL_ORTHOGONAL:
        v = raw @ a.vector
        return v / np.linalg.norm(v, axis=1, keepdims=True)
    m, n = group.space.rows, group.space.cols
    i, j = a.index
    return np.column_stack(((i - 1 + raw[:, 0]) % m + 1, (j - 1 + raw[:, 1]) % n + 1))


def check_pushforward(group: GroupSpec, a: Point, test_sets, n_samples: int | None, rng=None) -> list[PushforwardCheck]:
    """Compare the frequency of ``g(a) in B`` for ``g ~ nu`` with ``mu(B)``.

    With ``n_samples=None`` the (finite) group is enumerated and frequencies
    are exact rationals; otherwise ``n_samples`` draws from ``nu`` are used
    and deviations beyond 4 binomial standard errors are flagged.
    """
    if a.space != group.space:
        raise SpaceMismatchError(f"anchor lives in {a.space}, group acts on {group.space}")
    if n_samples is None:
        images = [apply(g, a) for g in enumerate_group(group)]
        arr = np.array([p.index for p in images])
        total = len(images)
        results = []
        for b in test_sets:
            hits = int(np.count_nonzero(b.contains(arr)))
            results.append(PushforwardCheck(b.name, b.measure, Fraction(hits, total), 0.0, total, True))
        return results
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    images = _images(group, a, n_samples, rng)
    results = []
    for b in test_sets:
        freq = float(np.count_nonzero(b.contains(images))) / n_samples
        mu_b = float(b.measure)
        sigma = math.sqrt(mu_b * (1.0 - mu_b) / n_samples)
        results.append(PushforwardCheck(b.name, b.measure, freq, sigma, n_samples, False))
    return results

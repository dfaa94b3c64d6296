"""Random-field realizations and their generators.

A realization is immutable once built and can be evaluated at single
points (``evaluate``) or at arrays of raw coordinates (``evaluate_many``).
Every realization carries its provenance and serializes to JSON.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .group_action import GridShift, SpaceMismatchError
from .param_space import Point, Space, sample_mu_array

DEFAULT_KERNEL_EXPONENT = 0.1
DEFAULT_BRIDGE_GRID = 1000
MAX_TIE_RETRIES = 10


class FieldGenerationError(RuntimeError):
    pass


def kernel_default(x_norm, exponent: float = DEFAULT_KERNEL_EXPONENT):
    """Mountain profile ``1 - (|x|/2)**exponent``; 1 at the summit, 0 at chordal distance 2."""
    if exponent <= 0:
        raise ValueError(f"kernel exponent must be positive, got {exponent}")
    return 1.0 - np.power(np.asarray(x_norm, dtype=float) / 2.0, exponent)


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class KernelField:
    """``X(t) = sum_k K(|t - U_k|)`` on a sphere, optionally plus ``bump * K(|t - a|)``."""

    summits: np.ndarray
    exponent: float = DEFAULT_KERNEL_EXPONENT
    bump: float = 0.0
    bump_anchor: np.ndarray | None = None
    kernel: Callable | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        s = _readonly(self.summits)
        if s.ndim != 2 or s.shape[1] < 2:
            raise ValueError(f"summits must have shape (n, d) with d >= 2, got {s.shape}")
        object.__setattr__(self, "summits", s)
        if self.bump_anchor is not None:
            object.__setattr__(self, "bump_anchor", _readonly(self.bump_anchor))
        elif self.bump != 0.0:
            raise ValueError("a nonzero bump needs a bump_anchor")

    @property
    def space(self) -> Space:
        return Space.sphere(self.summits.shape[1])

    def _k(self, r):
        if self.kernel is not None:
            return self.kernel(r)
        return kernel_default(r, self.exponent)

    def evaluate_many(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, self.summits.shape[1])
        if len(self.summits):
            dist = np.linalg.norm(pts[:, None, :] - self.summits[None, :, :], axis=-1)
            vals = self._k(dist).sum(axis=1)
        else:
            vals = np.zeros(len(pts))
        if self.bump != 0.0:
            vals = vals + self.bump * self._k(np.linalg.norm(pts - self.bump_anchor, axis=-1))
        return vals


@dataclass(frozen=True, eq=False)
class CircleGridField:
    """Values at the circle grid ``u_i = i/m``, ``i = 0..m-1``; ``X(1)`` wraps to ``X(0)``."""

    values: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        v = _readonly(self.values)
        if v.ndim != 1 or len(v) < 1:
            raise ValueError("circle grid values must be a nonempty 1-d array")
        object.__setattr__(self, "values", v)

    @property
    def space(self) -> Space:
        return Space.circle()

    @property
    def m(self) -> int:
        return len(self.values)

    @property
    def wrapped(self) -> np.ndarray:
        """Values at ``0, 1/m, ..., 1`` including the wrap point."""
        return np.append(self.values, self.values[0])

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.wrapped)

    def grid_index(self, u: np.ndarray) -> np.ndarray:
        m = self.m
        u = np.asarray(u, dtype=float)
        idx = np.floor(u * m).astype(np.int64)
        # u*m can round below an exact grid point i/m; compare against i/m itself
        idx = np.where((idx + 1) / m <= u, idx + 1, idx)
        idx = np.where(idx / m > u, idx - 1, idx)
        return np.clip(idx, 0, m - 1)

    def evaluate_many(self, pts: np.ndarray) -> np.ndarray:
        return self.values[self.grid_index(pts)]


@dataclass(frozen=True, eq=False)
class MatrixField:
    values: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        v = _readonly(self.values)
        if v.ndim != 2 or min(v.shape) < 1:
            raise ValueError(f"matrix field needs a 2-d array with positive shape, got {v.shape}")
        object.__setattr__(self, "values", v)

    @property
    def space(self) -> Space:
        return Space.grid(*self.values.shape)

    def evaluate_many(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.int64).reshape(-1, 2)
        return self.values[pts[:, 0] - 1, pts[:, 1] - 1]

    def has_ties(self) -> bool:
        flat = self.values.ravel()
        return len(np.unique(flat)) != len(flat)

    def compose(self, g: GridShift) -> MatrixField:
        """The field ``t -> X(g(t))``."""
        if g.space != self.space:
            raise SpaceMismatchError(f"{g} does not act on {self.space}")
        m, n = self.values.shape
        i, j = np.meshgrid(np.arange(1, m + 1), np.arange(1, n + 1), indexing="ij")
        gi, gj = g.apply_indices(i, j)
        prov = dict(self.provenance, composed_with=[g.row_shift, g.col_shift])
        return MatrixField(self.values[gi - 1, gj - 1], prov)


FieldRealization = KernelField | CircleGridField | MatrixField


def evaluate(X: FieldRealization, t: Point) -> float:
    if t.space != X.space:
        raise SpaceMismatchError(f"point of {t.space} given to a field on {X.space}")
    return float(X.evaluate_many(t.as_array()[None, ...])[0])


# ---------------------------------------------------------------------------
# Generators


def _seed_of(rng):
    """Entropy (plus spawn key, if any) of the stream's SeedSequence."""
    seed_seq = getattr(rng.bit_generator, "seed_seq", None)
    entropy = getattr(seed_seq, "entropy", None)
    spawn_key = tuple(getattr(seed_seq, "spawn_key", ()))
    if spawn_key:
        return [entropy, *spawn_key]
    return entropy


def gen_kernel_field(d: int, n: int, rng: np.random.Generator, exponent: float = DEFAULT_KERNEL_EXPONENT,
                     kernel: Callable | None = None) -> KernelField:
    """Sum of ``n`` kernel mountains with summits i.i.d. uniform on ``S^{d-1}``.

    ``kernel`` maps chordal distances to heights and overrides the default
    profile with ``exponent``.
    """
    if d < 2 or n < 0:
        raise ValueError(f"need d >= 2 and n >= 0, got d={d}, n={n}")
    summits = sample_mu_array(Space.sphere(d), n, rng)
    prov = {"generator": "kernel", "dim": d, "summits": n, "kernel_exponent": exponent,
            "kernel": "default" if kernel is None else "custom", "seed": _seed_of(rng)}
    return KernelField(summits, exponent=exponent, kernel=kernel, provenance=prov)


def gen_biased_field(d: int, n: int, bump: float, a: Point, rng: np.random.Generator,
                     exponent: float = DEFAULT_KERNEL_EXPONENT) -> KernelField:
    """Kernel field plus a deterministic mountain of height ``bump`` at ``a``.

    The extra term is pinned to ``a`` so the law is no longer rotation
    invariant; used as a negative control.
    """
    if a.space != Space.sphere(d):
        raise SpaceMismatchError(f"anchor must lie on Sphere({d})")
    base = gen_kernel_field(d, n, rng, exponent)
    prov = dict(base.provenance, generator="biased-kernel", bump=bump)
    return KernelField(base.summits, exponent=exponent, bump=bump, bump_anchor=a.vector, provenance=prov)


def gen_bridge_field(m: int, rng: np.random.Generator) -> CircleGridField:
    """Gaussian random-walk bridge on the circle grid, scaled by ``1/sqrt(m)``."""
    if m < 2:
        raise ValueError(f"bridge grid needs m >= 2, got {m}")
    steps = rng.standard_normal(m)
    walk = np.concatenate(([0.0], np.cumsum(steps)))
    i = np.arange(m + 1)
    bridge = (walk - (i / m) * walk[m]) / math.sqrt(m)
    assert bridge[0] == 0.0 and bridge[m] == 0.0
    prov = {"generator": "bridge", "grid_size": m, "seed": _seed_of(rng)}
    return CircleGridField(bridge[:m], prov)


def shift_field(X: CircleGridField, u: float) -> CircleGridField:
    """``t -> X(u + t mod 1) - X(u) + X(0)`` for ``u`` on the grid."""
    m = X.m
    steps = u * m
    s = round(steps)
    if abs(steps - s) > 1e-9:
        raise ValueError(f"shift {u} is not a multiple of 1/{m}")
    s %= m
    v = X.values
    shifted = np.roll(v, -s) - v[s] + v[0]
    return CircleGridField(shifted, dict(X.provenance, shift=s / m))


def center_field(X: CircleGridField) -> CircleGridField:
    """Subtract the grid average, the discrete counterpart of ``X - int_0^1 X``."""
    return CircleGridField(X.values - X.values.mean(), dict(X.provenance, centered=True))


def gen_matrix_field(m: int, n: int, rng: np.random.Generator) -> MatrixField:
    if m < 1 or n < 1:
        raise ValueError(f"matrix shape must be positive, got {m}x{n}")
    prov = {"generator": "matrix", "rows": m, "cols": n, "seed": _seed_of(rng)}
    for _ in range(MAX_TIE_RETRIES):
        X = MatrixField(rng.standard_normal((m, n)), prov)
        if not X.has_ties():
            return X
    raise FieldGenerationError(f"tied entries persisted after {MAX_TIE_RETRIES} draws")


# ---------------------------------------------------------------------------
# JSON


def _jsonable(v):
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


def to_dict(X: FieldRealization) -> dict:
    prov = {k: _jsonable(v) for k, v in X.provenance.items()}
    if isinstance(X, KernelField):
        if X.kernel is not None:
            raise ValueError("fields with a custom kernel callable cannot be serialized")
        return {
            "type": "kernel", "provenance": prov, "summits": X.summits.tolist(), "exponent": X.exponent,
            "bump": X.bump, "bump_anchor": None if X.bump_anchor is None else X.bump_anchor.tolist(),
        }
    if isinstance(X, CircleGridField):
        return {"type": "circle-grid", "provenance": prov, "values": X.values.tolist()}
    return {"type": "matrix", "provenance": prov, "values": X.values.tolist()}


def from_dict(doc: dict) -> FieldRealization:
    kind = doc["type"]
    prov = doc.get("provenance", {})
    if kind == "kernel":
        d = doc.get("bump_anchor")
        summits = np.array(doc["summits"], dtype=float)
        if summits.size == 0:
            summits = summits.reshape(0, prov.get("dim", 3))
        return KernelField(summits, doc["exponent"], doc["bump"], None if d is None else np.array(d), provenance=prov)
    if kind == "circle-grid":
        return CircleGridField(np.array(doc["values"]), prov)
    if kind == "matrix":
        return MatrixField(np.array(doc["values"]), prov)
    raise ValueError(f"unknown field type {kind!r}")


def to_json(X: FieldRealization) -> str:
    return json.dumps(to_dict(X), sort_keys=True)


def from_json(text: str) -> FieldRealization:
    return from_dict(json.loads(text))


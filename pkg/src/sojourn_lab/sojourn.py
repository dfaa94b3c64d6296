"""Sojourn measures ``F(X, x) = mu{t : X(t) <= x}`` and the anchored statistic
``F(X, X(a))``.

Exact on grids, a Riemann sum on circle grids and plain or antithetic Monte
Carlo on continuous spaces. The weak inequality ``<=`` is used throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .fields import CircleGridField, MatrixField, evaluate
from .group_action import SpaceMismatchError
from .param_space import Point, sample_antithetic_array, sample_mu_array

EXACT = "exact"
GRID_RIEMANN = "grid"
MC_PLAIN = "mc-plain"
MC_ANTITHETIC = "mc-antithetic"


class TieError(ValueError):
    """A field that must have distinct values has ties."""


class QuantileCheckError(RuntimeError):
    """The sampled level-set identity ``F(X, q(p)) ~= p`` failed."""


@dataclass(frozen=True)
class SojournEstimate:
    value: float
    method: str
    eval_points: int
    anchor: Point | None
    anchor_value: float
    count: int
    total: int
    ties: int = 0

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"sojourn value {self.value} outside [0, 1]")

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.count, self.total)


def _rank_sorted(values: np.ndarray, x: float) -> int:
    return int(np.searchsorted(np.sort(values, axis=None), x, side="right"))


def sojourn_exact_discrete(X: MatrixField, a: Point) -> SojournEstimate:
    """``card{t : X(t) <= X(a)} / N``, via a sorted search."""
    if a.space != X.space:
        raise SpaceMismatchError(f"anchor in {a.space}, field on {X.space}")
    if X.has_ties():
        raise TieError("matrix entries must be pairwise distinct")
    x = evaluate(X, a)
    n = X.values.size
    count = _rank_sorted(X.values, x)
    return SojournEstimate(count / n, EXACT, 0, a, x, count, n)


def sojourn_grid_circle(X: CircleGridField, x: float) -> SojournEstimate:
    """Riemann approximation of the Lebesgue sojourn time below ``x``."""
    count = int(np.count_nonzero(X.values <= x))
    return SojournEstimate(count / X.m, GRID_RIEMANN, X.m, None, float(x), count, X.m)


def sojourn_mc(X, a: Point, k: int, antithetic: bool, rng: np.random.Generator) -> SojournEstimate:
    """Fraction of ``k`` random evaluation points where ``X`` does not exceed ``X(a)``.

    Plain draws ``k`` i.i.d. mu-points; antithetic draws ``k/2`` and appends
    their antipodes. ``ties`` counts points whose value equals ``X(a)``
    exactly, a cheap monitor of the continuity assumption.
    """
    space = X.space
    if not space.is_continuous:
        raise ValueError("Monte Carlo sojourn needs a continuous space")
    if a.space != space:
        raise SpaceMismatchError(f"anchor in {a.space}, field on {space}")
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if antithetic:
        if k % 2:
            raise ValueError(f"antithetic sampling needs an even k, got {k}")
        pts = sample_antithetic_array(space, k // 2, rng)
    else:
        pts = sample_mu_array(space, k, rng)
    anchor_value = evaluate(X, a)
    vals = X.evaluate_many(pts)
    count = int(np.count_nonzero(vals <= anchor_value))
    ties = int(np.count_nonzero(vals == anchor_value))
    method = MC_ANTITHETIC if antithetic else MC_PLAIN
    return SojournEstimate(count / k, method, k, a, anchor_value, count, k, ties)


def _values_at(X, eval_points) -> np.ndarray:
    if len(eval_points) == 0:
        raise ValueError("eval_points must be nonempty")
    if isinstance(eval_points, np.ndarray):
        return X.evaluate_many(eval_points)
    return np.array([evaluate(X, p) for p in eval_points])


def empirical_F(X, x: float, eval_points) -> float:
    """Fraction of ``eval_points`` (Points or a raw coordinate array) with ``X <= x``."""
    vals = _values_at(X, eval_points)
    return np.count_nonzero(vals <= x) / len(vals)


def quantile_rank(p, k: int) -> int:
    """``ceil(p*k)`` robust to ``p*k`` landing a rounding error above an integer."""
    if isinstance(p, Fraction):
        return math.ceil(p * k)
    return math.ceil(p * k - 1e-9)


def empirical_quantile(X, p, eval_points) -> float:
    """The ``ceil(p*k)``-th order statistic of ``X`` over the ``k`` evaluation points.

    Checks the sampled level-set identity ``|F(X, q) - p| <= 1/k`` before
    returning and raises ``QuantileCheckError`` if it fails (ties).
    """
    if not 0 < p <= 1:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    vals = np.sort(_values_at(X, eval_points))
    k = len(vals)
    j = min(max(quantile_rank(p, k), 1), k)
    q = float(vals[j - 1])
    f = np.count_nonzero(vals <= q) / k
    if abs(f - float(p)) > 1.0 / k + 1e-12:
        raise QuantileCheckError(f"F(X, q({p})) = {f}, off by more than 1/{k}")
    return q


def level_set(X: MatrixField, p) -> set[tuple[int, int]]:
    """``Q_X(p) = {t : X(t) <= q_X(p)}`` over every atom of a grid field."""
    pts = X.space.points()
    q = empirical_quantile(X, p, pts)
    return {t.index for t in pts if evaluate(X, t) <= q}

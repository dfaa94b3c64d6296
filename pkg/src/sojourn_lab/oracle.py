"""Exact laws of the anchored rank by enumerating cyclic-shift orbits.

Ranks here are counted by pairwise comparison rather than sorting so the
oracle shares no code path with ``sojourn.sojourn_exact_discrete``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .group_action import GroupSpec, enumerate_group
from .param_space import Point, Space
from .sojourn import TieError


@dataclass(frozen=True)
class OrbitLaw:
    N: int
    pmf: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.pmf) != self.N:
            raise ValueError(f"pmf has {len(self.pmf)} entries for N = {self.N}")
        if any(p < 0 for p in self.pmf) or sum(self.pmf) != 1:
            raise ValueError("pmf must be nonnegative and sum to exactly 1")

    @property
    def is_uniform(self) -> bool:
        return all(p == Fraction(1, self.N) for p in self.pmf)

    def as_strings(self) -> list[str]:
        return [str(p) for p in self.pmf]


def _pairwise_ranks(flat: np.ndarray) -> np.ndarray:
    # rank[t] = #{s : X(s) <= X(t)}
    return np.count_nonzero(flat[None, :] <= flat[:, None], axis=1)


def _check_distinct(flat: np.ndarray):
    if np.count_nonzero(flat[None, :] == flat[:, None]) != flat.size:
        raise TieError("base entries must be pairwise distinct")


def _law(rank_counts: np.ndarray, total: int) -> OrbitLaw:
    return OrbitLaw(len(rank_counts), tuple(Fraction(int(c), total) for c in rank_counts))


def orbit_rank_table(base) -> np.ndarray:
    """``table[g, t]``: rank at anchor ``t`` of the base shifted by the ``g``-th cyclic shift.

    Anchors are row-major flat indices; shifts follow ``enumerate_group``.
    """
    base = np.asarray(base, dtype=float)
    if base.ndim != 2:
        raise ValueError("base must be a 2-d matrix")
    _check_distinct(base.ravel())
    m, n = base.shape
    i, j = np.meshgrid(np.arange(1, m + 1), np.arange(1, n + 1), indexing="ij")
    rows = []
    for g in enumerate_group(GroupSpec(Space.grid(m, n))):
        gi, gj = g.apply_indices(i, j)
        shifted = base[gi - 1, gj - 1].ravel()
        rows.append(_pairwise_ranks(shifted))
    return np.array(rows)


def enumerate_orbit_law(base, a: Point) -> OrbitLaw:
    """Law of ``card{t : Y(t) <= Y(a)}`` for ``Y = base o g``, ``g`` uniform on cyclic shifts."""
    base = np.asarray(base, dtype=float)
    if a.space != Space.grid(*base.shape):
        raise ValueError(f"anchor {a.index} does not index a {base.shape} matrix")
    i, j = a.index
    ranks = orbit_rank_table(base)[:, (i - 1) * base.shape[1] + (j - 1)]
    n = base.size
    return _law(np.bincount(ranks - 1, minlength=n), len(ranks))


def enumerate_orbit_laws(base) -> dict[tuple[int, int], OrbitLaw]:
    """``enumerate_orbit_law`` for every anchor at once, sharing the shifted matrices."""
    base = np.asarray(base, dtype=float)
    table = orbit_rank_table(base)
    m, n = base.shape
    out = {}
    for flat in range(m * n):
        counts = np.bincount(table[:, flat] - 1, minlength=m * n)
        out[(flat // n + 1, flat % n + 1)] = _law(counts, table.shape[0])
    return out


def circle_shift_orbit_law(values) -> OrbitLaw:
    """Law of ``card{i : v[(i+s) mod N] <= v[s]}`` over a uniform shift ``s``, anchor index 0."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size < 1:
        raise ValueError("need at least one value")
    _check_distinct(v)
    n = v.size
    ranks = []
    for s in range(n):
        shifted = np.roll(v, -s)
        ranks.append(int(np.count_nonzero(shifted <= shifted[0])))
    return _law(np.bincount(np.array(ranks) - 1, minlength=n), n)

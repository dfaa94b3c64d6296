"""Histograms and goodness-of-fit tests against the uniform law."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special

DEFAULT_ALPHA = 0.001
SERIES_TOL = 1e-12
_MAX_TERMS = 100_000


@dataclass(frozen=True)
class Histogram:
    edges: list[float]
    counts: list[int]

    @property
    def bins(self) -> int:
        return len(self.counts)

    @property
    def density(self) -> list[float]:
        n = sum(self.counts)
        if n == 0:
            return [0.0] * self.bins
        return [c * self.bins / n for c in self.counts]


def histogram(samples, bins: int) -> Histogram:
    """Equal-width bins on [0, 1]; the last bin is closed on the right.

    Edges are ``i/bins`` so a sample that equals an exact rational ``j/k``
    lands on the same side as the real number would.
    """
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    x = np.asarray(samples, dtype=float).ravel()
    if x.size and (np.isnan(x).any() or x.min() < 0.0 or x.max() > 1.0):
        raise ValueError("samples must lie in [0, 1]")
    edges = np.arange(bins + 1) / bins
    idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, bins - 1)
    counts = np.bincount(idx, minlength=bins)
    return Histogram(edges.tolist(), [int(c) for c in counts])


def kolmogorov_sf(x: float) -> float:
    """``P(sup|B| > x)`` for the Brownian bridge (asymptotic KS tail).

    Uses ``2 sum (-1)^(j-1) exp(-2 j^2 x^2)`` for ``x >= 1``; below that the
    alternating series cancels badly and the dual theta series is summed.
    Both are truncated once terms fall below 1e-12.
    """
    if x < 0.04:
        # leading theta term is below exp(-770): the tail is 1 in double precision
        return 1.0
    if x >= 1.0:
        total = 0.0
        for j in range(1, _MAX_TERMS):
            term = math.exp(-2.0 * j * j * x * x)
            total += term if j % 2 else -term
            if term < SERIES_TOL:
                break
        return min(max(2.0 * total, 0.0), 1.0)
    cdf = 0.0
    for j in range(1, _MAX_TERMS):
        term = math.exp(-((2 * j - 1) ** 2) * math.pi**2 / (8.0 * x * x))
        cdf += term
        if term < SERIES_TOL:
            break
    cdf *= math.sqrt(2.0 * math.pi) / x
    return min(max(1.0 - cdf, 0.0), 1.0)


def ks_uniform(samples) -> tuple[float, float]:
    """One-sample KS distance to U(0,1) and its asymptotic p-value."""
    u = np.sort(np.asarray(samples, dtype=float).ravel())
    n = u.size
    if n < 1:
        raise ValueError("KS test needs at least one sample")
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - u), np.max(u - (i - 1) / n)))
    return d, kolmogorov_sf(math.sqrt(n) * d)


def chi_square_uniform(counts, expected_pmf=None) -> tuple[float, int, float]:
    """Pearson statistic, degrees of freedom and survival-function p-value."""
    obs = np.asarray(counts, dtype=float).ravel()
    if obs.size == 0 or (obs < 0).any():
        raise ValueError("counts must be a nonempty list of nonnegative integers")
    total = obs.sum()
    if total < 1:
        raise ValueError("chi-square needs at least one observation")
    if expected_pmf is None:
        pmf = np.full(obs.size, 1.0 / obs.size)
    else:
        pmf = np.asarray([float(p) for p in expected_pmf])
        if pmf.size != obs.size:
            raise ValueError("expected_pmf must have one entry per cell")
        if abs(pmf.sum() - 1.0) > 1e-9:
            raise ValueError(f"expected_pmf sums to {pmf.sum()}, not 1")
    expected = total * pmf
    if (expected <= 0).any():
        raise ValueError("zero expected cell count")
    stat = float(np.sum((obs - expected) ** 2 / expected))
    df = obs.size - 1
    p = 1.0 if df == 0 else float(special.chdtrc(df, stat))
    return stat, df, p


@dataclass(frozen=True)
class UniformityReport:
    sample_size: int
    histogram: Histogram
    ks_D: float
    ks_p: float
    chi2_stat: float
    chi2_df: int
    chi2_p: float
    chi2_cells: str
    verdict_test: str
    alpha: float
    metadata: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        p = self.chi2_p if self.verdict_test == "chi2" else self.ks_p
        return "pass" if p >= self.alpha else "fail"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        out = asdict(self)
        out["histogram"]["density"] = self.histogram.density
        out["verdict"] = self.verdict
        return out


def uniformity_report(samples, bins: int = 50, alpha: float = DEFAULT_ALPHA, atom_counts=None,
                      metadata: dict | None = None) -> UniformityReport:
    """Histogram, KS and chi-square summary of a sojourn sample.

    When ``atom_counts`` is given the law is treated as atomic: chi-square
    runs over the atoms against the uniform pmf and decides the verdict.
    Otherwise chi-square runs over the histogram bins and KS decides.
    """
    x = np.asarray(samples, dtype=float).ravel()
    hist = histogram(x, bins)
    ks_d, ks_p = ks_uniform(x)
    if atom_counts is not None:
        if sum(atom_counts) != x.size:
            raise ValueError("atom counts must add up to the sample size")
        stat, df, p = chi_square_uniform(atom_counts)
        cells, test = "atoms", "chi2"
    else:
        stat, df, p = chi_square_uniform(hist.counts)
        cells, test = "bins", "ks"
    return UniformityReport(int(x.size), hist, ks_d, ks_p, stat, df, p, cells, test, alpha, dict(metadata or {}))

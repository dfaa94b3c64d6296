import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from sojourn_lab.stats import (
    chi_square_uniform,
    histogram,
    kolmogorov_sf,
    ks_uniform,
    uniformity_report,
)


def test_histogram_examples():
    assert histogram([0.1, 0.9], 2).counts == [1, 1]
    assert histogram([1.0], 4).counts == [0, 0, 0, 1]
    assert histogram([0.0], 4).counts == [1, 0, 0, 0]
    assert histogram([], 3).counts == [0, 0, 0]
    assert histogram([], 3).density == [0.0, 0.0, 0.0]
    with pytest.raises(ValueError):
        histogram([1.2], 2)
    with pytest.raises(ValueError):
        histogram([0.5], 0)


def test_histogram_exact_rational_boundaries():
    # j/100 for even j sits exactly on an edge of a 50-bin grid
    samples = np.arange(101) / 100
    h = histogram(samples, 50)
    assert h.counts[:49] == [2] * 49
    assert h.counts[49] == 3
    assert sum(h.counts) == 101


def test_histogram_density_scaling():
    h = histogram(np.linspace(0, 1, 1000, endpoint=False), 10)
    assert h.density == [1.0] * 10


def test_ks_examples():
    assert ks_uniform([0.5])[0] == 0.5
    n = 37
    d, _ = ks_uniform((np.arange(1, n + 1) - 0.5) / n)
    assert d == pytest.approx(0.5 / n)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=50), st.randoms())
def test_ks_permutation_invariant(xs, r):
    ys = list(xs)
    r.shuffle(ys)
    assert ks_uniform(xs) == ks_uniform(ys)


@pytest.mark.parametrize("x", [0.05, 0.3, 0.6, 0.9, 1.0, 1.2, 1.63, 2.0, 3.0])
def test_kolmogorov_series_matches_scipy(x):
    assert kolmogorov_sf(x) == pytest.approx(sps.kstwobign.sf(x), rel=1e-9, abs=1e-14)


def test_kolmogorov_series_critical_value():
    for n in (1_000, 10_000, 100_000):
        d = 1.63 / math.sqrt(n)
        assert abs(kolmogorov_sf(math.sqrt(n) * d) - 0.01) <= 0.001


@given(st.floats(0, 5), st.floats(0, 5))
def test_kolmogorov_sf_monotone(a, b):
    lo, hi = sorted((a, b))
    assert kolmogorov_sf(hi) <= kolmogorov_sf(lo)


def test_ks_rejection_rate_on_jittered_discrete_uniform():
    """Jittered discrete-uniform samples are exactly U(0,1); the 1% test should pass ~99%."""
    rng = np.random.default_rng(4)
    n, runs, atoms = 100_000, 300, 101
    crit = 1.63 / math.sqrt(n)
    passed = 0
    for _ in range(runs):
        j = rng.integers(0, atoms, n)
        d, _ = ks_uniform((j + rng.random(n)) / atoms)
        passed += d < crit
    # exact-run requirement is >= 99%; allow 3 binomial sd of run-to-run noise
    assert passed / runs >= 0.99 - 3 * math.sqrt(0.01 * 0.99 / runs)


def test_chi_square_examples():
    assert chi_square_uniform([5, 5]) == (0.0, 1, 1.0)
    stat, df, p = chi_square_uniform([10, 0])
    assert stat == 10.0 and df == 1
    assert p == pytest.approx(sps.chi2.sf(10, 1))
    assert chi_square_uniform([25] * 4)[0] == 0.0
    with pytest.raises(ValueError):
        chi_square_uniform([3, 4], [1.0, 0.0])
    with pytest.raises(ValueError):
        chi_square_uniform([0, 0])
    with pytest.raises(ValueError):
        chi_square_uniform([1, 2], [0.3, 0.3])


def test_chi_square_custom_pmf():
    stat, df, p = chi_square_uniform([20, 30, 50], [0.2, 0.3, 0.5])
    assert stat == 0.0 and p == 1.0
    ref = sps.chisquare([10, 30, 60], [20, 30, 50])
    stat, _, p = chi_square_uniform([10, 30, 60], [0.2, 0.3, 0.5])
    assert stat == pytest.approx(ref.statistic)
    assert p == pytest.approx(ref.pvalue)


@settings(max_examples=50)
@given(st.lists(st.integers(0, 50), min_size=2, max_size=12).filter(lambda c: sum(c) > 0))
def test_chi_square_zero_iff_exact(counts):
    stat, df, p = chi_square_uniform(counts)
    total, cells = sum(counts), len(counts)
    exact = all(c * cells == total for c in counts)
    assert (stat == 0.0) == exact
    assert 0.0 <= p <= 1.0 and df == cells - 1


def test_chi_square_p_decreases_with_stat():
    ps = [chi_square_uniform([50 + d, 50 - d])[2] for d in range(0, 50, 5)]
    assert all(a >= b for a, b in zip(ps, ps[1:]))


def test_uniformity_report_invariants(rng):
    x = rng.random(5000)
    r = uniformity_report(x, bins=20, metadata={"generator": "test"})
    assert sum(r.histogram.counts) == r.sample_size == 5000
    assert 0 <= r.ks_D <= 1 and 0 <= r.ks_p <= 1 and 0 <= r.chi2_p <= 1
    assert r.chi2_cells == "bins" and r.chi2_df == 19
    assert r.verdict == "pass"
    d = r.to_dict()
    assert d["verdict"] == "pass" and len(d["histogram"]["density"]) == 20


def test_uniformity_report_atoms_drive_verdict():
    x = np.repeat(np.arange(1, 5) / 4, 10)
    r = uniformity_report(x, 4, atom_counts=[10, 10, 10, 10])
    assert r.chi2_stat == 0.0 and r.verdict_test == "chi2" and r.passed
    bad = uniformity_report(np.full(40, 0.25), 4, atom_counts=[40, 0, 0, 0])
    assert not bad.passed
    with pytest.raises(ValueError):
        uniformity_report(x, 4, atom_counts=[1, 2])


def test_ks_verdict_rejects_non_uniform(rng):
    r = uniformity_report(rng.random(5000) ** 2)
    assert r.verdict == "fail"


def test_fifty_bins_cannot_be_flat_for_a_hundred_point_proportion():
    """Exact law of a 100-point proportion uniform on {0, 1/100, ..., 1}.

    Its last 50-bin cell holds three atoms (0.98, 0.99, 1.0), so the population
    density there is 150/101, and its sup-distance to U(0,1) is 1/101.
    """
    from fractions import Fraction

    atoms = [Fraction(j, 100) for j in range(101)]
    h = histogram([float(a) for a in atoms], 50)
    assert h.counts[-1] == 3
    assert Fraction(h.counts[-1] * 50, 101) == Fraction(150, 101)
    cdf_jump = max(max(Fraction(j + 1, 101) - atoms[j], atoms[j] - Fraction(j, 101)) for j in range(101))
    assert cdf_jump == Fraction(1, 101)

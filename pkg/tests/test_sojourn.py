from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from sojourn_lab import fields as fld
from sojourn_lab.group_action import GroupSpec, apply, enumerate_group
from sojourn_lab.param_space import Space, sample_mu_array
from sojourn_lab.sojourn import (
    QuantileCheckError,
    TieError,
    empirical_F,
    empirical_quantile,
    level_set,
    sojourn_exact_discrete,
    sojourn_grid_circle,
    sojourn_mc,
)

G22 = Space.grid(2, 2)
M = fld.MatrixField(np.array([[1.0, 2.0], [3.0, 4.0]]))


@pytest.mark.parametrize("a, expected", [((1, 1), Fraction(1, 4)), ((2, 2), Fraction(1)), ((2, 1), Fraction(3, 4))])
def test_exact_discrete_examples(a, expected):
    est = sojourn_exact_discrete(M, G22.point(a))
    assert est.fraction == expected
    assert est.value == float(expected)
    assert est.method == "exact" and est.eval_points == 0


def test_exact_discrete_rejects_ties():
    with pytest.raises(TieError):
        sojourn_exact_discrete(fld.MatrixField(np.array([[1.0, 1.0]])), Space.grid(1, 2).point((1, 1)))


def test_exact_discrete_equals_sort_rank(rng):
    for _ in range(50):
        X = fld.gen_matrix_field(3, 5, rng)
        order = np.argsort(X.values, axis=None)
        rank = np.empty(15, dtype=int)
        rank[order] = np.arange(1, 16)
        for t in X.space.points():
            i, j = t.index
            assert sojourn_exact_discrete(X, t).count == rank[(i - 1) * 5 + j - 1]
            assert sojourn_exact_discrete(X, t).value >= 1 / 15


def test_grid_circle_examples(rng):
    assert sojourn_grid_circle(fld.CircleGridField(np.zeros(10)), 0.0).value == 1.0
    alt = fld.CircleGridField(np.tile([-1.0, 1.0], 5))
    assert sojourn_grid_circle(alt, 0.0).value == 0.5
    X = fld.gen_bridge_field(100, rng)
    assert sojourn_grid_circle(X, X.values.max()).value == 1.0


def test_mc_constant_field(rng):
    const = fld.KernelField(np.zeros((0, 3)))
    a = Space.sphere(3).north_pole()
    for anti in (True, False):
        assert sojourn_mc(const, a, 10, anti, rng).value == 1.0


def test_mc_value_lattice(rng):
    X = fld.gen_kernel_field(3, 20, rng)
    a = Space.sphere(3).north_pole()
    est = sojourn_mc(X, a, 100, True, rng)
    assert est.count / 100 == est.value and est.method == "mc-antithetic"
    assert est.ties == 0
    with pytest.raises(ValueError):
        sojourn_mc(X, a, 7, True, rng)
    with pytest.raises(ValueError):
        sojourn_mc(X, a, 1, False, rng)


def test_mc_uses_batch_in_documented_order():
    """Antithetic MC must consume the stream as half_k draws then antipodes."""
    from sojourn_lab.param_space import sample_antithetic_array

    X = fld.gen_kernel_field(3, 20, np.random.default_rng(3))
    a = Space.sphere(3).north_pole()
    est = sojourn_mc(X, a, 100, True, np.random.default_rng(11))
    pts = sample_antithetic_array(Space.sphere(3), 50, np.random.default_rng(11))
    assert est.count == np.count_nonzero(X.evaluate_many(pts) <= fld.evaluate(X, a))


@pytest.mark.parametrize("k", range(1, 11))
def test_beta_integral_identity_by_quadrature(k):
    # P(count = j) = C(k,j) * int_0^1 F^j (1-F)^(k-j) dF = 1/(k+1)
    for j in range(k + 1):
        val, err = integrate.quad(lambda f: f**j * (1 - f) ** (k - j), 0, 1, epsabs=1e-14, epsrel=1e-12)
        assert comb(k, j) * val == pytest.approx(1 / (k + 1), rel=1e-10)


def test_plain_mc_marginal_is_discrete_uniform_for_bridge():
    """Plain MC with k=4 on the circle bridge: the count is uniform on {0..4}."""
    from scipy import stats

    c = Space.circle()
    a = c.point(0.0)
    k, n = 4, 20_000
    counts = np.zeros(k + 1, dtype=int)
    rng = np.random.default_rng(77)
    for _ in range(n):
        # centered field removes the X(0)=0 pin; grid fine enough that ties have tiny mass
        X = fld.center_field(fld.gen_bridge_field(2000, rng))
        counts[sojourn_mc(X, a, k, False, rng).count] += 1
    assert stats.chisquare(counts).pvalue > 0.001


def test_empirical_F_examples(rng):
    X = fld.gen_kernel_field(3, 20, rng)
    pts = sample_mu_array(Space.sphere(3), 101, rng)
    vals = X.evaluate_many(pts)
    assert empirical_F(X, vals.min() - 1, pts) == 0.0
    assert empirical_F(X, vals.max(), pts) == 1.0
    assert empirical_F(X, np.median(vals), pts) == 51 / 101
    with pytest.raises(ValueError):
        empirical_F(X, 0.0, pts[:0])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.lists(st.floats(-5, 30), min_size=2, max_size=10))
def test_empirical_F_monotone(seed, xs):
    rng = np.random.default_rng(seed)
    X = fld.gen_kernel_field(3, 10, rng)
    pts = sample_mu_array(Space.sphere(3), 50, rng)
    Fs = [empirical_F(X, x, pts) for x in sorted(xs)]
    assert all(a <= b for a, b in zip(Fs, Fs[1:]))


def test_empirical_quantile_order_statistics():
    X = fld.MatrixField(np.arange(1.0, 101.0).reshape(10, 10))
    pts = X.space.points()
    assert empirical_quantile(X, 0.3, pts) == 30.0
    assert empirical_F(X, 30.0, pts) == 0.30
    for j in (1, 2, 57, 100):
        p = (j - 1) / 100 + 1e-6
        assert empirical_quantile(X, p, pts) == float(j)
    with pytest.raises(ValueError):
        empirical_quantile(X, 0.0, pts)


def test_empirical_quantile_check_catches_ties():
    X = fld.MatrixField(np.ones((2, 2)))
    with pytest.raises(QuantileCheckError):
        empirical_quantile(X, 0.25, X.space.points())


def test_level_set_identity_and_shift_equivariance(rng):
    """{F(X, X(t)) <= p} = {t in Q(p)}, and a in Q_{X_g}(p) iff g(a) in Q_X(p)."""
    for _ in range(10):
        X = fld.gen_matrix_field(4, 4, rng)
        pts = X.space.points()
        for j in range(1, 17):
            p = Fraction(j, 16)
            Q = level_set(X, p)
            assert {t.index for t in pts if sojourn_exact_discrete(X, t).fraction <= p} == Q
            for g in enumerate_group(GroupSpec(X.space)):
                Qg = level_set(X.compose(g), p)
                for a in pts:
                    assert (a.index in Qg) == (apply(g, a).index in Q)


def test_shift_equivariance_of_exact_sojourn(rng):
    X = fld.gen_matrix_field(3, 4, rng)
    for g in enumerate_group(GroupSpec(X.space)):
        Y = X.compose(g)
        for a in X.space.points():
            assert sojourn_exact_discrete(Y, a).count == sojourn_exact_discrete(X, apply(g, a)).count


def test_plain_and_antithetic_are_unbiased(rng):
    X = fld.gen_kernel_field(3, 20, rng)
    a = Space.sphere(3).north_pole()
    reference = empirical_F(X, fld.evaluate(X, a), sample_mu_array(Space.sphere(3), 2_000_000, rng))
    for anti in (False, True):
        est = np.array([sojourn_mc(X, a, 100, anti, rng).value for _ in range(4000)])
        se = est.std(ddof=1) / np.sqrt(len(est))
        assert abs(est.mean() - reference) <= 4 * se + 4 * np.sqrt(reference * (1 - reference) / 2e6)

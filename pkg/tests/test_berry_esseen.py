import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from quantaub.berry_esseen import (Distribution, DistributionPair, be_rhs, distribution_from_dict, integral_term,
                                   kernel_constants, kernel_rhs, load_corpus, modulus_term, pair_from_dict,
                                   sup_diff, verify_be)
from quantaub.errors import InequalityViolated, SchemaError, SingularAtZero

NORMAL = {"kind": "normal"}
BIN50 = {"F": {"kind": "binomial", "n": 50, "p": 0.3, "standardized": True}, "G": NORMAL}


@pytest.fixture(scope="module")
def corpus():
    return load_corpus()


def test_identical_pair():
    pair = pair_from_dict({"F": NORMAL, "G": NORMAL})
    assert sup_diff(pair) == 0.0
    assert integral_term(pair, 5.0) == 0.0
    assert be_rhs(pair, 5.0) == pytest.approx(10.0 * modulus_term(pair, 5.0), rel=1e-15)
    (row,) = verify_be(pair, [5.0])
    assert row["pass"] and row["margin"] == pytest.approx(10.0 * modulus_term(pair, 5.0))


def test_point_masses():
    pair = pair_from_dict({"F": {"kind": "point", "at": 0.0}, "G": {"kind": "point", "at": 1.0}})
    assert sup_diff(pair) == 1.0


def test_normal_modulus_closed_form():
    pair = pair_from_dict({"F": NORMAL, "G": NORMAL})
    assert modulus_term(pair, 10.0) == pytest.approx(2 * stats.norm.cdf(0.05) - 1, abs=1e-4)
    assert modulus_term(pair, 1e6) < 1e-6


@given(st.floats(0.5, 1.0), st.floats(0.1, 100.0))
def test_atom_mass_bounds_modulus(a, T):
    # mixture: mass a at 0 and 1 - a spread as N(0, 1)
    G = Distribution("mix", lambda x: a * (np.asarray(x) >= 0) + (1 - a) * stats.norm.cdf(x),
                     lambda t: a + (1 - a) * np.exp(-0.5 * np.asarray(t) ** 2), 0.0, np.array([0.0]), -40.0, 40.0)
    pair = DistributionPair(G, G)
    assert modulus_term(pair, T) >= a


def test_binomial_sup_diff_against_refined_grid():
    pair = pair_from_dict(BIN50)
    coarse = sup_diff(pair)
    # oracle: scipy binomial cdf against the normal cdf on a 10x finer grid, plus both sides of every atom
    n, p = 50, 0.3
    mu, sd = n * p, math.sqrt(n * p * (1 - p))
    z = np.linspace(-40.0, 40.0, 200001)
    k = np.arange(n + 1)
    za = (k - mu) / sd
    F = lambda zz: stats.binom.cdf(np.floor(mu + sd * zz + 1e-9), n, p)
    ref = max(np.max(np.abs(F(z) - stats.norm.cdf(z))),
              np.max(np.abs(stats.binom.cdf(k, n, p) - stats.norm.cdf(za))),
              np.max(np.abs(stats.binom.cdf(k - 1, n, p) - stats.norm.cdf(za))))
    assert coarse == pytest.approx(ref, abs=1e-6)


def test_binomial_rhs_dominates():
    pair = pair_from_dict(BIN50)
    rhs = be_rhs(pair, 5.0)
    assert math.isfinite(rhs) and rhs >= sup_diff(pair)


@given(st.floats(0.5, 20.0), st.floats(1.01, 4.0))
def test_terms_monotone_in_T(T, factor):
    pair = pair_from_dict(BIN50)
    assert integral_term(pair, T * factor) >= integral_term(pair, T) - 1e-9
    assert modulus_term(pair, T * factor) <= modulus_term(pair, T) + 1e-9


def test_rhs_continuous_in_T():
    pair = pair_from_dict(BIN50)
    Ts = np.linspace(1.0, 10.0, 91)
    vals = np.array([be_rhs(pair, T) for T in Ts])
    h = Ts[1] - Ts[0]
    # modulus has slope at most phi(0) / T**2 in T; the integrand is at most 2 / T
    lip = 10.0 * stats.norm.pdf(0.0) / Ts[:-1] ** 2 + 0.2 * 2.0 * 2.0 / Ts[:-1]
    assert np.all(np.abs(np.diff(vals)) <= lip * h + 1e-8)


def test_poisson_pair_passes():
    pair = pair_from_dict({"F": {"kind": "poisson", "mu": 4}, "G": {"kind": "normal", "mu": 4, "sigma": 2}})
    assert all(r["pass"] for r in verify_be(pair, [1.0, 5.0, 10.0]))


def test_different_means_are_integrable():
    pair = pair_from_dict({"F": NORMAL, "G": {"kind": "normal", "mu": 0.5}})
    val = integral_term(pair, 3.0)
    assert math.isfinite(val) and val > 0


def test_defective_characteristic_function_is_singular():
    G = distribution_from_dict(NORMAL)
    bad = Distribution("bad", G.cdf, lambda t: 0.5 * np.exp(-0.5 * np.asarray(t) ** 2), 0.0, None, -40.0, 40.0)
    with pytest.raises(SingularAtZero):
        integral_term(DistributionPair(bad, G), 1.0)


def test_violation_raises():
    # an inconsistent pair: point-mass CDF paired with the normal characteristic function
    G = distribution_from_dict(NORMAL)
    F = Distribution("fake", distribution_from_dict({"kind": "point"}).cdf, G.cf, 0.0, np.array([0.0]), -1.0, 1.0)
    pair = DistributionPair(F, G, "inconsistent")
    rows = verify_be(pair, [100.0], strict=False)
    assert not rows[0]["pass"] and rows[0]["margin"] < 0
    with pytest.raises(InequalityViolated):
        verify_be(pair, [100.0])


def test_schema_errors():
    with pytest.raises(SchemaError):
        distribution_from_dict({"kind": "binomial", "n": 0, "p": 0.5})
    with pytest.raises(SchemaError):
        distribution_from_dict({"kind": "student_t", "df": 3, "standardized": True})
    with pytest.raises(SchemaError):
        pair_from_dict({"F": NORMAL})


def test_corpus_shape(corpus):
    assert len(corpus) == 20
    kinds = {p.F.kind for p in corpus}
    assert kinds == {"binomial", "poisson", "uniform_sum", "student_t"}


@given(st.integers(0, 19), st.floats(-6.0, 6.0), st.floats(0.0, 3.0), st.floats(-50.0, 50.0))
def test_corpus_distribution_invariants(corpus, k, x, dx, t):
    pair = corpus[k]
    for D in (pair.F, pair.G):
        a, b = D(np.array([x, x + dx]))
        assert 0.0 <= a <= b <= 1.0
        assert abs(complex(D.cf(np.array([0.0]))[0]) - 1.0) <= 1e-12
        assert abs(complex(D.cf(np.array([t]))[0])) <= 1.0 + 1e-12


def test_kernel_route_dominates(corpus):
    m1, m0, mh = kernel_constants()
    assert (m1, m0, mh) == pytest.approx((8.19, 1.61, 1.22), abs=0.01)
    for pair in corpus[::4]:
        lhs = sup_diff(pair)
        for T in (1.0, 5.0):
            assert kernel_rhs(pair, T) >= lhs
            assert be_rhs(pair, T) >= lhs

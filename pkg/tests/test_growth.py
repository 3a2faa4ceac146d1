import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import gammaln

from quantaub.errors import OutOfRange, SchemaError
from quantaub.growth import (CompositeWeight, GrowthSequence, WeightFunction, associated_function,
                             check_log_convex, check_non_quasianalytic, check_positive_increase,
                             check_regular_growth, geometric_grid, inverse_monotone, log_convex_minorant,
                             regular_growth_threshold, sequence_from_rule)

LOG_E = {"kind": "log", "shift": math.e}


def brute_associated(log_m, x):
    n = np.arange(log_m.size)
    return float(np.max(n * math.log(x) - log_m))


# -- associated function ----------------------------------------------------------


def test_nn_associated_function_near_x_over_e():
    assert abs(associated_function(GrowthSequence.power_nn(), 100.0) - 100.0 / math.e) <= 1.0


def test_below_first_term_gives_zero():
    for seq in (GrowthSequence.power_nn(), GrowthSequence.gevrey(2.0)):
        assert associated_function(seq, 0.5) == 0.0
        assert associated_function(seq, 1.0) == 0.0


def test_gevrey2_associated_function_matches_expansion():
    val = associated_function(GrowthSequence.gevrey(2.0), 50.0)
    assert abs(val - (50.0**2 / 2 - math.log(50.0) / 2)) <= 2.0
    # independent oracle: direct sup over n of n log x - log(n!)/2
    n = np.arange(20000)
    assert val == pytest.approx(brute_associated(0.5 * gammaln(n + 1.0), 50.0), abs=1e-8)


def test_associated_function_vectorised_matches_scalar():
    seq = GrowthSequence.nlogn()
    xs = np.geomspace(2.0, 1e4, 13)
    vec = associated_function(seq, xs)
    assert vec.shape == xs.shape
    assert np.allclose(vec, [associated_function(seq, x) for x in xs], rtol=0, atol=1e-12)


def test_non_positive_x_rejected():
    with pytest.raises(ValueError):
        associated_function(GrowthSequence.power_nn(), 0.0)


@given(st.floats(0.0, 1.0), st.sampled_from(["nn", "gevrey2", "nlogn"]))
def test_associated_function_monotone_and_convex_in_log_x(frac, kind):
    # gevrey(2) needs about x**2 terms, so its window stops near x = e**7
    u0 = frac * (5.0 if kind == "gevrey2" else 12.0)
    seq = {"nn": GrowthSequence.power_nn(), "gevrey2": GrowthSequence.gevrey(2.0),
           "nlogn": GrowthSequence.nlogn()}[kind]
    u = u0 + np.linspace(0.0, 2.0, 41)
    m = associated_function(seq, np.exp(u))
    assert np.all(np.diff(m) >= -1e-9)
    assert np.all(m[:-2] - 2 * m[1:-1] + m[2:] >= -1e-9 * np.maximum(1.0, np.abs(m[1:-1])))


@pytest.mark.parametrize("seq", [GrowthSequence.power_nn(), GrowthSequence.gevrey(2.0), GrowthSequence.nlogn()])
def test_legendre_duality_reconstructs_sequence(seq):
    # M_n = sup_x x^n exp(-M(x)); the sup over a fine x-grid is the oracle
    u = np.linspace(-1.0, 6.0, 70001)
    m = associated_function(seq, np.exp(u))
    lv = seq.log_values(30)
    for n in range(31):
        rec = float(np.max(n * u - m))
        assert abs(rec - lv[n]) <= math.log1p(1e-6)


# -- log-convexity and quasianalyticity ---------------------------------------------


def test_log_convex_examples():
    assert check_log_convex(GrowthSequence.constant(1.0), 100)
    assert not check_log_convex(GrowthSequence.from_table(np.log([1.0, 3.0, 2.0])), 2)
    assert check_log_convex(GrowthSequence.power_nn(), 5000)
    n = np.arange(2, 5000, dtype=float)
    assert np.all(2 * n * np.log(n) <= (n - 1) * np.log(n - 1) + (n + 1) * np.log(n + 1))


def test_non_quasianalytic_examples():
    assert check_non_quasianalytic(GrowthSequence.gevrey(0.5))
    assert not check_non_quasianalytic(GrowthSequence.power_nn())
    assert not check_non_quasianalytic(GrowthSequence.nlogn())


def test_minorant_examples():
    spike = log_convex_minorant(GrowthSequence.from_table(np.log([1.0, 10.0, 1.0])), 2)
    assert np.allclose(np.exp(spike.log_values(2)), [1.0, 1.0, 1.0])
    seq = GrowthSequence.power_nn()
    assert np.array_equal(log_convex_minorant(seq, 200).log_values(200), seq.log_values(200))


def _hull_by_chords(lv):
    # O(n^2) oracle: value at k is the least chord value over pairs i <= k <= j
    n = lv.size
    out = lv.copy()
    for i in range(n):
        for j in range(i + 1, n):
            k = np.arange(i, j + 1)
            chord = lv[i] + (lv[j] - lv[i]) * (k - i) / (j - i)
            out[k] = np.minimum(out[k], chord)
    return out


@given(st.lists(st.floats(-5.0, 5.0), min_size=64, max_size=64))
def test_minorant_matches_chord_oracle(vals):
    lv = np.asarray(vals)
    hull = log_convex_minorant(GrowthSequence.from_table(lv), 63).log_values(63)
    assert np.allclose(hull, _hull_by_chords(lv), atol=1e-12)
    again = log_convex_minorant(GrowthSequence.from_table(hull), 63).log_values(63)
    assert np.array_equal(again, hull)


def test_sequence_rules():
    assert sequence_from_rule({"kind": "gevrey", "alpha": 2}).log_values(3)[3] == pytest.approx(0.5 * math.log(6))
    assert sequence_from_rule({"kind": "nn", "L": 2.0}).L == 2.0
    with pytest.raises(SchemaError):
        sequence_from_rule({"kind": "nope"})
    with pytest.raises(SchemaError):
        sequence_from_rule({"kind": "gevrey"})


# -- growth hypotheses ----------------------------------------------------------------


def test_positive_increase_examples():
    assert check_positive_increase(WeightFunction.from_rule({"kind": "power", "exp": 1.0}), 1.0, 1.0)
    assert not check_positive_increase(WeightFunction.from_rule(LOG_E), 1.0, 1.0)
    assert not check_positive_increase(WeightFunction.from_rule(LOG_E), 0.25, 1.0)
    sq_log = WeightFunction.from_rule({"kind": "product", "of": [{"kind": "power", "exp": 0.5}, LOG_E]})
    assert check_positive_increase(sq_log, 0.5, 1.0)


def test_regular_growth_examples():
    ident = WeightFunction.from_rule({"kind": "power", "exp": 1.0})
    assert check_regular_growth(ident, ident, 2.0, 1.0)
    assert not check_regular_growth(WeightFunction.constant(1.0), ident, 2.0, 1.0)
    M = WeightFunction.from_rule(LOG_E)
    V = CompositeWeight(M, M, "MK_log").as_weight()
    eta = lambda t: np.asarray(t) * M(t) / 675.0
    t0 = regular_growth_threshold(V, eta, math.e, math.e)
    assert t0 is not None and 100.0 < t0 < 1000.0
    assert check_regular_growth(V, eta, math.e, t0)
    assert not check_regular_growth(V, eta, math.e, t0 / 1.1)


# -- inversion --------------------------------------------------------------------------


def test_inverse_examples():
    ident = WeightFunction.from_rule({"kind": "power", "exp": 1.0})
    assert inverse_monotone(ident, 7.0) == pytest.approx(7.0, rel=1e-10)
    sq = WeightFunction.from_rule({"kind": "power", "exp": 2.0})
    assert abs(inverse_monotone(sq, 9.0) - 3.0) <= 1e-9
    M = WeightFunction.from_rule(LOG_E)
    V = CompositeWeight(M, M, "MK_log").as_weight()
    x = inverse_monotone(V, 100.0)
    assert abs(float(V(x)) - 100.0) <= 1e-8


def test_inverse_out_of_range():
    V = CompositeWeight(WeightFunction.constant(1.0), WeightFunction.constant(1.0), "MK_log").as_weight()
    with pytest.raises(OutOfRange):
        inverse_monotone(V, -5.0)


@given(st.floats(1.0, 1e6))
def test_inverse_round_trip(x):
    M = WeightFunction.from_rule(LOG_E)
    V = CompositeWeight(M, M, "MK_log").as_weight()
    x = max(x, math.e)
    assert inverse_monotone(V, float(V(x))) == pytest.approx(x, rel=1e-8)


def test_geometric_grid_covers_interval():
    g = geometric_grid(1.0, 1e8, cap=500)
    assert g[0] == 1.0 and g[-1] >= 1e8 and g.size <= 501

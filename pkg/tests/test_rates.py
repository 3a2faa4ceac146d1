import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from quantaub.errors import FlatObjective, OutOfRange, SchemaError
from quantaub.growth import GrowthSequence, associated_function
from quantaub.rates import (BoundaryClass, class_from_dict, error_term, log_error_term, optimize_rate,
                            theorem_1_4_rate, wiener_ikehara_rate, x_grid_from_dict)

ONE = {"kind": "const", "value": 1.0}
ZERO = {"kind": "const", "value": 0.0}
LOG_E = {"kind": "log", "shift": math.e}
INV1P = {"kind": "power", "exp": -1.0, "shift": 1.0}


def _t_star(y):
    # log t + log log t = y for M = K = 1, solved in u = log t
    return math.exp(brentq(lambda u: u + math.log(u) - y, 1e-9, y + 1.0, xtol=1e-14))


# -- error terms ---------------------------------------------------------------------------


def test_dif_vanishing_weight():
    cls = BoundaryClass("Dif", N=2, G=ZERO)
    assert error_term(cls, 10.0, 5.0) == pytest.approx(0.01, rel=1e-14)


def test_an_closed_form():
    cls = BoundaryClass("An", G=ONE, H=ONE)
    assert cls.kappa == 675.0
    # exp(-x / (G (1 + kappa/lambda))) * int_0^lambda H
    expected = math.exp(-100.0 / 1.675) * 1000.0
    assert error_term(cls, 100.0, 1000.0) == pytest.approx(expected, rel=1e-9)
    assert expected == pytest.approx(1.18e-23, rel=0.01)


def test_an_below_threshold_is_infinite():
    cls = BoundaryClass("An", G=ONE, H=ONE)
    assert error_term(cls, 100.0, 1.0) == math.inf


def test_lambda_below_one_rejected():
    with pytest.raises(ValueError):
        error_term(BoundaryClass("Dif", N=1, G=ONE), 10.0, 0.5)


def test_dif_norm_matches_quadrature():
    # ||G chi||_q for G(t) = 1 + t, p = 2 (q = 2): (2 int_0^lam (1+t)^2)^(1/2)
    cls = BoundaryClass("Dif", N=1, G={"kind": "power", "exp": 1.0, "shift": 1.0}, p=2.0)
    lam = 37.0
    norm = math.sqrt(2.0 * ((1 + lam) ** 3 - 1) / 3.0)
    assert error_term(cls, 3.0, lam) == pytest.approx((1.0 + norm) / 3.0, rel=1e-6)


def test_hc_includes_modulus():
    cls = BoundaryClass("HC", N=1, G=ONE, omega={"kind": "power", "exp": 0.5})
    x, lam = 10.0, 4.0
    assert error_term(cls, x, lam) == pytest.approx((1.0 + 2 * lam) / x * math.sqrt(math.pi / x), rel=1e-6)


@pytest.mark.parametrize("cls", [
    BoundaryClass("Dif", N=2, G=ONE),
    BoundaryClass("HC", N=1, G=INV1P, omega={"kind": "power", "exp": 0.5}),
    BoundaryClass("An", G=ONE, H=INV1P),
    BoundaryClass("SA", Mn=GrowthSequence.power_nn(), H=ONE),
    BoundaryClass("DifI", N=3, G={"kind": "power", "exp": 2.0}),
])
@given(lam=st.floats(2.0, 1e4), x0=st.floats(2.0, 500.0))
def test_error_term_non_increasing_in_x(cls, lam, x0):
    xs = x0 * np.geomspace(1.0, 50.0, 12)
    E = np.array([log_error_term(cls, x, math.log(lam)) for x in xs], dtype=float)
    assert np.all(np.diff(E) <= 1e-9 * np.maximum(1.0, np.abs(E[1:])))


@given(st.floats(5.0, 300.0))
def test_sa_large_lambda_limit(x):
    cls = BoundaryClass("SA", Mn=GrowthSequence.power_nn(), H=ONE)
    lim = float(log_error_term(cls, x, math.log(1e15)))
    assert lim == pytest.approx(-associated_function(GrowthSequence.power_nn(), x), abs=1e-9)
    assert abs(lim + x / math.e) <= 1.0 + 0.5 * math.log(x)


# -- optimisation ----------------------------------------------------------------------------


@pytest.mark.parametrize("x", [10.0, 100.0, 1e4])
def test_dif_optimum_closed_form(x):
    cls = BoundaryClass("Dif", N=2, G=ONE)
    r = optimize_rate(cls, 1.0, x)
    assert r.lambda_star == pytest.approx(x / math.sqrt(2.0), rel=1e-6)
    assert r.bound == pytest.approx(1.0 / x**2 + 2.0 * math.sqrt(2.0) / x, rel=1e-9)
    assert r.bound == pytest.approx(r.E_at_star + r.penalty_at_star, rel=1e-12)


def test_dif_rate_exponent():
    cls = BoundaryClass("Dif", N=2, G=ONE)
    xs = np.geomspace(1e3, 1e6, 10)
    lb = [optimize_rate(cls, 1.0, x).log_bound for x in xs]
    assert np.polyfit(np.log(xs), lb, 1)[0] == pytest.approx(-1.0, abs=0.02)


def test_zero_penalty_goes_to_lambda_max():
    cls = BoundaryClass("Dif", N=2, G=ZERO)
    r = optimize_rate(cls, 0.0, 10.0, lambda_max=1e6)
    assert r.lambda_star == pytest.approx(1e6, rel=1e-9)
    assert r.bound == pytest.approx(0.01, rel=1e-12)


def test_flat_objective_warns_at_the_end():
    cls = BoundaryClass("Dif", N=2, G=ZERO)
    with pytest.warns(FlatObjective):
        optimize_rate(cls, 1.0, 10.0, lambda_max=1e3)


def test_an_exponential_decay_slope():
    cls = BoundaryClass("An", G=ONE, H=INV1P)
    xs = np.linspace(50.0, 200.0, 16)
    with warnings.catch_warnings():
        warnings.simplefilter("error", FlatObjective)
        lb = [optimize_rate(cls, 1.0, x, lambda_max="auto").log_bound for x in xs]
    assert np.polyfit(xs, lb, 1)[0] == pytest.approx(-1.0, abs=0.02)


@pytest.mark.parametrize("cls", [
    BoundaryClass("Dif", N=2, G={"kind": "power", "exp": 1.0, "shift": 1.0}),
    BoundaryClass("An", G=ONE, H=INV1P),
    BoundaryClass("SA", Mn=GrowthSequence.power_nn(), H={"kind": "power", "exp": 1.0, "shift": 1.0}),
])
@given(x=st.floats(20.0, 2000.0), m=st.integers(1, 3))
def test_local_minimum_certificate(cls, x, m):
    # compared in log space: the optimum can sit far below the smallest double
    r = optimize_rate(cls, 1.0, x, m=m, lambda_max="auto")
    for s in (r.log_lambda_star - math.log(1.05), r.log_lambda_star + math.log(1.05)):
        if s >= 0.0:
            obj = float(np.logaddexp(log_error_term(cls, x, s), -m * s))
            assert r.log_bound <= obj + 1e-9 * abs(obj)


@given(s=st.floats(1.0, 1e3), x=st.floats(20.0, 2000.0))
def test_scaling_f_comparative_statics(s, x):
    cls = BoundaryClass("Dif", N=2, G={"kind": "power", "exp": 1.0, "shift": 1.0})
    base = optimize_rate(cls, 1.0, x)
    scaled = optimize_rate(cls, s, x)
    assert scaled.lambda_star >= base.lambda_star * (1 - 1e-6)
    assert scaled.penalty_at_star <= s * base.penalty_at_star * (1 + 1e-6)


def test_as_row_keys():
    r = optimize_rate(BoundaryClass("Dif", N=2, G=ONE), 1.0, 10.0)
    assert list(r.as_row()) == ["x", "lambda_star", "E", "penalty", "bound"]
    assert r.trace.shape[1] == 2


# -- theorem-level rates -------------------------------------------------------------------------


def test_constant_weights_rate():
    r = theorem_1_4_rate(ONE, ONE, 1.0, 100.0)
    assert r.rate == pytest.approx(1.0 / _t_star(100.0), rel=1e-8)


def test_log_weights_rate():
    r = theorem_1_4_rate(LOG_E, LOG_E, 1.0, 300.0)
    assert r.rate_MK is not None and r.log_beta == 0.5
    t = 1.0 / r.rate_MK
    MK = math.log(t + math.e) * (math.log(t) + math.log(math.log(t + math.e)))
    assert MK == pytest.approx(300.0, rel=1e-9)
    assert r.best == r.rate_MK


def test_rate_out_of_range():
    with pytest.raises(OutOfRange):
        theorem_1_4_rate(ONE, ONE, 1.0, 0.5)


def test_wiener_ikehara_example():
    val = wiener_ikehara_rate(ONE, ONE, 1.0, 0.9, 50.0)
    assert val == pytest.approx(math.exp(50.0) / _t_star(45.0), rel=1e-8)
    with pytest.raises(ValueError):
        wiener_ikehara_rate(ONE, ONE, 0.0, 0.9, 50.0)


def test_wiener_ikehara_monotonicity():
    xs = np.linspace(20.0, 200.0, 19)
    env = np.array([wiener_ikehara_rate(LOG_E, LOG_E, 1.0, 0.9, x) / math.exp(x) for x in xs])
    assert np.all(np.diff(env) <= 0)
    for x in (30.0, 80.0):
        assert wiener_ikehara_rate(ONE, ONE, 1.0, 0.9, x) < wiener_ikehara_rate(ONE, ONE, 1.0, 0.45, x)


# -- request parsing -------------------------------------------------------------------------------


def test_class_from_dict():
    cls = class_from_dict({"tag": "Dif", "N": 2, "G": ONE, "p": "inf"})
    assert cls.q == 1.0 and cls.N == 2
    with pytest.raises(SchemaError):
        class_from_dict({"tag": "Dif", "N": 2, "G": ONE, "bogus": 1})
    with pytest.raises(SchemaError):
        class_from_dict({"tag": "An", "G": ONE})
    with pytest.raises(SchemaError):
        class_from_dict({"N": 2})


def test_x_grid_from_dict():
    assert np.allclose(x_grid_from_dict({"start": 1, "stop": 100, "num": 3, "spacing": "geometric"}), [1, 10, 100])
    assert np.allclose(x_grid_from_dict([3, 4]), [3, 4])
    with pytest.raises(SchemaError):
        x_grid_from_dict({"start": 1})


def test_validate_reports_hypotheses():
    assert BoundaryClass("An", G=ONE, H=INV1P).validate()["pass"]
    assert BoundaryClass("SA", Mn=GrowthSequence.power_nn(), H=ONE).validate()["log_convex"]
    hc = BoundaryClass("HC", N=1, G=ONE, omega={"kind": "power", "exp": 0.5}).validate()
    assert hc["omega_monotone"] and hc["omega_linear_floor"]

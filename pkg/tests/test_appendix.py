import csv
import math

import numpy as np
import pytest

from quantaub.appendix import ROWS, appendix_table, fit_form, row_class, write_row_csv
from quantaub.errors import FitUnstable, SchemaError


def test_row1_exponent():
    fitted, ref, ok = appendix_table({"row": 1, "N": 2, "M": 1.0, "gamma": 0.0})
    assert ref["a"] == pytest.approx(-2.0 / 3.0)
    assert abs(fitted["a"] - ref["a"]) <= 0.02 and ok


def test_row9_exponential_rate():
    fitted, ref, ok = appendix_table({"row": 9, "c": 1.0, "M": 0.0, "gamma": 0.0})
    assert ref["a"] == -0.5
    assert abs(fitted["a"] + 0.5) <= 0.05 and ok


@pytest.mark.xfail(strict=True, reason="N=1, C=1 carries a log log x correction that dominates below x = 1e7")
def test_row3_unit_constants_log_rate():
    fitted, ref, ok = appendix_table({"row": 3, "N": 1, "gamma": 1.0, "C": 1.0})
    assert abs(fitted["a"] - ref["a"]) <= 0.05


def test_unknown_row_rejected():
    with pytest.raises(SchemaError):
        appendix_table(99)


def test_row_class_overrides():
    cls, P = row_class(1, {"N": 5})
    assert cls.tag == "Dif" and cls.N == 5 and P["M"] == ROWS[1].params["M"]


def test_every_row_builds_a_valid_class():
    for k, r in ROWS.items():
        cls, _ = row_class(k)
        assert cls.tag in ("Dif", "HC", "SA", "An")
        assert r.form in ("power", "logpower", "exp", "stretched")


@pytest.mark.parametrize("form,a,ref", [
    ("power", -0.75, {"a": -0.75, "s": 0.5}),
    ("logpower", -2.0, {"a": -2.0}),
    ("exp", -0.3, {"a": -0.3, "s": 1.0}),
    ("stretched", 0.5, {"a": 0.5, "s": 0.25, "r": -0.5}),
])
def test_fit_form_recovers_synthetic_exponent(form, a, ref):
    xs = np.geomspace(1e3, 1e7, 25)
    lx, llx = np.log(xs), np.log(np.log(xs))
    s, r = ref.get("s", 0.0), ref.get("r", 0.0)
    if form == "power":
        lb = a * lx + s * llx + 1.3
    elif form == "logpower":
        lb = a * llx - 0.7
    elif form == "exp":
        lb = a * xs + s * lx + 2.0
    else:
        lb = -2.0 * xs**a * lx**r + s * lx
    fitted, resid = fit_form(form, xs, lb, ref)
    assert fitted == pytest.approx(a, abs=1e-9) and resid < 1e-6


def test_fit_form_rejects_noise():
    rng = np.random.default_rng(0)
    xs = np.geomspace(1e3, 1e7, 25)
    with pytest.raises(FitUnstable):
        fit_form("power", xs, rng.normal(size=xs.size), {"a": -1.0})


def test_row_csv(tmp_path):
    res = appendix_table(1, xs=np.geomspace(1e3, 1e5, 5))
    path = tmp_path / "row.csv"
    write_row_csv(res, path)
    rows = list(csv.DictReader(path.open()))
    assert len(rows) == 5
    assert rows[0]["pass"] in ("pass", "fail")
    assert float(rows[-1]["bound"]) == pytest.approx(math.exp(float(rows[-1]["log_bound"])), rel=1e-12)

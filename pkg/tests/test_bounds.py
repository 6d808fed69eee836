import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from invdetect.bounds import (
    bound_table,
    boundary_case1_asymptotic,
    boundary_case1_nonasymptotic,
    c_delta,
    d_alpha_delta,
    gaussian_quantile,
    lower_bound_case2,
    separation_rate_case2,
    upper_bound_case2,
    write_bound_table_csv,
)

# reference values computed with mpmath at 40 significant digits
Z95 = 1.644853626951472714863848908
NONASYM_64 = 5.427608008857245578742637464
D_005_010 = 5.030357472910144545804598649
C_HALF = 0.9124443057840285280417547853
LOWER_16 = 1.824888611568057056083509571
ASYM_54 = 2.824529711850903643668894417
NONASYM_54 = 5.382424046386607686014079479


def test_mpmath_oracles():
    assert gaussian_quantile(0.95) == pytest.approx(Z95, rel=1e-12)
    assert boundary_case1_nonasymptotic(1.0, 64, 0.05) == pytest.approx(NONASYM_64, rel=1e-8)
    assert boundary_case1_nonasymptotic(1.0, 54, 0.05) == pytest.approx(NONASYM_54, rel=1e-8)
    assert boundary_case1_asymptotic(1.0, 54) == pytest.approx(ASYM_54, rel=1e-8)
    assert d_alpha_delta(0.05, 0.10) == pytest.approx(D_005_010, rel=1e-8)
    assert c_delta(0.5) == pytest.approx(C_HALF, rel=1e-8)
    assert lower_bound_case2(1.0, 4.0, 0.5) == pytest.approx(LOWER_16, rel=1e-8)


def test_simple_values():
    assert c_delta(1.0) == 0.0
    assert c_delta(0.5) ** 4 == pytest.approx(np.log(2))
    assert separation_rate_case2(2.0, 16) == pytest.approx(4.0)
    assert boundary_case1_asymptotic(1.0, 1) == 0.0
    assert upper_bound_case2(1.0, 1.0, 0.05, 0.1) == pytest.approx(D_005_010, rel=1e-12)
    assert upper_bound_case2(1.0, 1.0, 0.05, 0.1, "complex") == pytest.approx(np.sqrt(2) * D_005_010, rel=1e-12)


@given(st.floats(0.01, 100), st.floats(0.01, 100))
def test_homogeneity_in_sigma(s, k):
    assert upper_bound_case2(k * s, 9.0, 0.05, 0.1) == pytest.approx(k * upper_bound_case2(s, 9.0, 0.05, 0.1))
    assert lower_bound_case2(k * s, 9.0, 0.3) == pytest.approx(k * lower_bound_case2(s, 9.0, 0.3))
    assert boundary_case1_asymptotic(k * s, 50) == pytest.approx(k * boundary_case1_asymptotic(s, 50))
    assert separation_rate_case2(k * s, 50) == pytest.approx(k * separation_rate_case2(s, 50))


@given(st.floats(0.001, 0.999), st.floats(0.001, 0.999))
def test_c_delta_decreasing(d1, d2):
    lo, hi = sorted((d1, d2))
    assert c_delta(lo) >= c_delta(hi)


@given(st.floats(0.001, 0.2), st.floats(0.25, 0.99))
def test_d_alpha_decreasing_in_delta(a, d):
    assert d_alpha_delta(a, d) >= d_alpha_delta(a, min(0.995, d + 0.005)) - 1e-12


@given(st.integers(1, 10**6), st.integers(1, 10**6))
def test_case1_monotone_in_N(n1, n2):
    lo, hi = sorted((n1, n2))
    assert boundary_case1_asymptotic(1.0, lo) <= boundary_case1_asymptotic(1.0, hi)
    assert boundary_case1_nonasymptotic(1.0, lo, 0.05) <= boundary_case1_nonasymptotic(1.0, hi, 0.05)


def test_domain_errors():
    for bad in (0.0, -0.1, 1.2, np.nan):
        with pytest.raises(ValueError):
            c_delta(bad)
    with pytest.raises(ValueError):
        d_alpha_delta(0.1, 0.05)
    with pytest.raises(ValueError):
        d_alpha_delta(0.05, 1.0)
    with pytest.raises(ValueError):
        lower_bound_case2(1.0, 0.0, 0.5)
    with pytest.raises(ValueError):
        upper_bound_case2(-1.0, 1.0, 0.05, 0.1)
    with pytest.raises(ValueError):
        boundary_case1_asymptotic(1.0, 0)
    with pytest.raises(ValueError):
        gaussian_quantile(1.0)


def test_bound_table_csv(tmp_path):
    rows = bound_table([16, 64], [0.05], [0.02, 0.1, 0.5])
    assert len(rows) == 6
    r = next(r for r in rows if r["N"] == 64 and r["delta"] == 0.1)
    assert r["case1_nonasymptotic"] == pytest.approx(NONASYM_64, rel=1e-8)
    assert r["case2_upper"] == pytest.approx(D_005_010 * 64**0.25, rel=1e-10)
    assert np.isnan(next(r for r in rows if r["delta"] == 0.02)["case2_upper"])
    p = tmp_path / "b.csv"
    write_bound_table_csv(p, rows)
    back = list(csv.DictReader(open(p)))
    assert len(back) == 6 and float(back[0]["case2_rate"]) == rows[0]["case2_rate"]

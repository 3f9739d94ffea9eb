import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from teichfun.errors import InputError, InvalidK, InvalidM
from teichfun.qs_bounds import (
    DyadicQsMap, M_of_K, chi, lambda_bound, sample_dyadic_qs, sd_harness, verify_sd_bound, zeta,
    zeta_closed_form, zeta_closed_form_printed, zeta_partial_sums,
)


def test_zeta_at_one_and_validation():
    assert zeta(1.0) == 0.0
    assert zeta_closed_form(1.0) == 0.0
    for bad in (0.5, float("nan"), float("inf")):
        with pytest.raises(InvalidM):
            zeta(bad)


def test_series_matches_closed_form():
    grid = np.linspace(1.0, 4.0, 100)
    assert max(abs(zeta(M) - zeta_closed_form(M)) for M in grid) <= 1e-12


def test_printed_closed_form_disagrees_with_series():
    # the printed lower branch uses (1/M)^n; summing 2^-k - (1/(M+1))^k gives (1/(M+1))^n
    assert zeta_closed_form_printed(1.0) == pytest.approx(1.0)
    assert abs(zeta_closed_form_printed(1.1) - zeta(1.1)) > 0.1


def test_series_value_is_m_minus_one():
    # the upper branch dominates term by term (convexity of x^k), so the sup is sum of (M/(M+1))^k - 2^-k
    for M in (1.1, 1.5, 2.0, 3.0):
        assert zeta(M) == pytest.approx(M - 1, abs=1e-13)
        k = np.arange(1, 60)
        # equality at k = 1
        assert ((M / (M + 1)) ** k - 0.5 ** k >= 0.5 ** k - (1 / (M + 1)) ** k - 1e-15).all()


def test_monotone_and_decreasing_to_zero():
    vals = [zeta(M) for M in (1.1, 1.5, 2, 3)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    seq = [zeta(1 + 2.0**-j) for j in range(1, 11)]
    assert all(a > b for a, b in zip(seq, seq[1:]))
    assert seq[-1] < 1e-3


@given(st.floats(1.0, 4.0), st.integers(1, 40))
def test_chi_increasing_in_M(M, k):
    assert chi(M + 0.1, k) >= chi(M, k)
    sums = zeta_partial_sums(M, k)
    assert (np.diff(sums) >= 0).all()


def test_K_bounds():
    assert M_of_K(1.0) == 1.0 and lambda_bound(1.0) == 1.0
    assert M_of_K(1.2) == pytest.approx(math.e**2)
    assert lambda_bound(1.2) == pytest.approx(math.e)
    for K in (1.0, 1.3, 2.0):
        assert M_of_K(K) == pytest.approx(lambda_bound(K) ** 2)
    with pytest.raises(InvalidK):
        M_of_K(0.9)


def test_sampler_identity_at_M1():
    h = sample_dyadic_qs(1.0, 8)
    assert h.sup_deviation == pytest.approx(0.0, abs=1e-15)


@given(st.floats(1.0, 3.0), st.integers(1, 10), st.integers(0, 1000),
       st.sampled_from(["uniform", "extremal"]))
@settings(max_examples=40, deadline=None)
def test_sampled_maps_satisfy_ratio_condition_and_bound(M, depth, seed, mode):
    h = sample_dyadic_qs(M, depth, seed, mode)
    r = h.midpoint_ratios()
    assert r.min() >= 1 / M * (1 - 1e-9) and r.max() <= M * (1 + 1e-9)
    assert verify_sd_bound(h)


def test_invalid_map_rejected():
    with pytest.raises(InputError):
        DyadicQsMap(1, np.array([0.0, 0.7, 0.6]), 2.0)


def test_harness_no_violation():
    rep = sd_harness(1.5, 12, 2000, seed=3, mode="extremal")
    assert rep.violations == 0 and 0 < rep.ratio < 1

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from teichfun.errors import CombinatoricsMismatch, DepthMismatch, InputError, NotIrreducible
from teichfun.scaling import distortion_constants
from teichfun.symbolic import WordGraph, cylinder_lengths
from teichfun.thermo import (
    Potential, birkhoff_variance, check_zero_pressure, coboundary, gibbs, mean,
    potential_from_scaling, pressure, pressure_bracket, pressure_metric, surface_area, variance,
)

FULL2 = np.ones((2, 2), dtype=np.uint8)


def zero(A, n):
    g = WordGraph(A, n)
    return Potential(g, n, np.zeros(g.count(n)))


def test_full_shift_pressure_is_log2():
    for n in (0, 1, 3):
        assert pressure(zero(FULL2, n)) == pytest.approx(math.log(2), abs=1e-12)


def test_zero_potential_pressure_is_log_spectral_radius(std):
    oracle = math.log(max(abs(np.linalg.eigvals(std.A.astype(float)))))
    for n in (0, 2):
        assert pressure(zero(std.A, n)) == pytest.approx(oracle, abs=1e-11)


def test_bracket_contains_value(std):
    r = pressure_bracket(zero(std.A, 1))
    assert r.lower <= r.value <= r.upper and r.upper - r.lower < 1e-12


def test_reducible_graph_rejected():
    A = np.array([[1, 1], [0, 1]], dtype=np.uint8)
    with pytest.raises(NotIrreducible):
        pressure(zero(A, 1))


def test_potential_validation(std):
    g = WordGraph(std.A, 1)
    with pytest.raises(InputError):
        Potential(g, 1, np.zeros(3))
    with pytest.raises(InputError):
        Potential(g, 1, np.full(g.count(1), np.nan))
    with pytest.raises(DepthMismatch):
        zero(std.A, 1) + zero(std.A, 2)
    with pytest.raises(CombinatoricsMismatch):
        zero(std.A, 1) + zero(FULL2, 1)


@given(st.integers(0, 10**6), st.floats(-5, 5))
@settings(max_examples=15, deadline=None)
def test_pressure_shift_and_monotonicity(seed, c):
    rng = np.random.default_rng(seed)
    A = (rng.random((5, 5)) < 0.6).astype(np.uint8)
    A[np.arange(5), (np.arange(5) + 1) % 5] = 1       # a 5-cycle keeps it irreducible
    g = WordGraph(A, 2)
    phi = Potential(g, 2, rng.normal(size=g.count(2)))
    bump = Potential(g, 2, np.abs(rng.normal(size=g.count(2))))
    assert pressure(phi + c) == pytest.approx(pressure(phi) + c, abs=1e-12)
    assert pressure(phi + bump) >= pressure(phi) - 1e-12


def test_scaling_potential_values(std):
    n = 3
    g = WordGraph(std.A, n + 1)
    L = cylinder_lengths(std, g)
    phi = potential_from_scaling(std, n, g, L)
    deeper = potential_from_scaling(std, n + 1, g, L)
    c = distortion_constants(std)
    # S <= 1, with equality (up to the partition error) on words with a single child
    assert phi.values.max() <= c.base_rel_error
    # a depth-(n+1) value refines the depth-n value of its suffix within the certified log error
    bound = c.M_log * c.R * L[n - 1][g.parent[n]][g.suffix[n + 1]] + 1e-8
    assert (np.abs(deeper.values - phi.values[g.suffix[n + 1]]) <= bound).all()
    # children of every word partition it: exp(values) sum to one
    sums = np.bincount(g.parent[n], weights=np.exp(phi.values), minlength=g.count(n - 1))
    assert np.abs(sums - 1).max() < 1e-10


def test_zero_pressure_small_depths(std):
    for n in (2, 3):
        r = check_zero_pressure(std, n)
        assert r.residual < 1e-12
        assert r.geometric_residual < 1e-10
        assert r.geometric_bracket[0] <= r.geometric_pressure <= r.geometric_bracket[1]


def test_gibbs_uniform_on_full_shift():
    g = gibbs(zero(FULL2, 3))
    assert np.allclose(g.measure, 1 / 16, atol=1e-14)


def test_gibbs_consistency(std):
    g = WordGraph(std.A, 5)
    L = cylinder_lengths(std, g)
    g5 = gibbs(potential_from_scaling(std, 5, g, L))
    g4 = gibbs(potential_from_scaling(std, 4, g, L))
    assert g5.measure.sum() == pytest.approx(1.0, abs=1e-10)
    assert (g5.measure > 0).all() and (g5.left_vec > 0).all() and (g5.right_vec > 0).all()
    # shift invariance at the word level: both marginals agree
    assert np.abs(g5.marginal("last") - g5.marginal("first")).max() < 1e-9
    # the depth-4 marginal of the depth-5 measure matches the depth-4 Gibbs measure
    assert np.abs(g5.marginal("last") - g4.measure).max() < 1e-6


@pytest.fixture(scope="module")
def gibbs3(std):
    g = WordGraph(std.A, 3)
    return gibbs(potential_from_scaling(std, 3, g))


def test_variance_zero_and_coboundary(gibbs3):
    pot = gibbs3.potential
    z = Potential(pot.graph, 3, np.zeros(len(pot.values)))
    assert abs(variance(z, gibbs3)) < 1e-10
    assert birkhoff_variance(z, gibbs3, 1000, 16)[0] == 0.0
    u = np.random.default_rng(4).normal(size=pot.graph.count(2))
    cb = coboundary(pot.graph, 3, u)
    assert abs(variance(cb, gibbs3)) <= 1e-3 * np.abs(u).max()


def test_variance_estimators_agree(gibbs3):
    pot = gibbs3.potential
    psi = Potential(pot.graph, 3, np.random.default_rng(7).normal(size=len(pot.values)))
    va = variance(psi, gibbs3, "pressure")
    vb = variance(psi, gibbs3, "birkhoff", n_samples=100_000, seed=1)
    assert vb == pytest.approx(va, rel=0.05)
    with pytest.raises(InputError):
        variance(psi, gibbs3, "bogus")


def test_pressure_expansion_is_quadratic(gibbs3):
    phi = gibbs3.potential
    psi = Potential(phi.graph, 3, np.random.default_rng(9).normal(size=len(phi.values)))
    psi = psi + (-mean(psi, gibbs3))
    var = variance(psi, gibbs3)
    p0 = pressure(phi)

    def remainder(t):
        return pressure(phi + t * psi) - p0 - 0.5 * t * t * var

    # halving t divides the remainder by about 8, and its odd part by exactly 8 to leading order
    for t in (0.1, 0.05):
        r1, r2 = remainder(t), remainder(t / 2)
        assert 6.0 < r1 / r2 < 10.0
        odd1 = 0.5 * (r1 - remainder(-t))
        odd2 = 0.5 * (r2 - remainder(-t / 2))
        assert 7.5 < odd1 / odd2 < 8.5
    assert abs(remainder(0.1)) < 1e-2 * 0.5 * 0.01 * var


def test_pressure_metric_constant_path_is_zero(std):
    r = pressure_metric((std, std, std), 2, 1e-2)
    assert r.value == 0.0 and r.psi_norm == 0.0


def test_pressure_metric_twist_positive(std):
    from teichfun.bowen_series import conjugated_system
    from teichfun.fuchsian import twist_deform

    def at(d):
        path = tuple(conjugated_system(std, twist_deform(std.rep, "a1", t)[1]) for t in (-d, 0.0, d))
        return pressure_metric(path, 3, d)

    a, b = at(1e-2), at(5e-3)
    assert a.value > 0 and math.isfinite(a.value)
    assert b.value == pytest.approx(a.value, rel=0.1)
    assert a.mean_residual <= 1e-3
    assert a.denominator > 0


def test_surface_area():
    assert surface_area(2) == pytest.approx(4 * math.pi)

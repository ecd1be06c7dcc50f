import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import hermite_e

from isostencil.grid_quadrature import (
    GridQuadrature1D,
    QuadratureError,
    gauss_hermite,
    grid_weights_1d,
    moment_matrix,
    solve_elimination_scale,
    solve_moment_system,
    verify_orthogonality_1d,
)
from isostencil.integer_stencil import default_scale


def test_gauss_hermite_small_rules():
    r1 = gauss_hermite(1)
    assert r1.abscissae.tolist() == [0.0] and r1.weights.tolist() == [1.0]
    r2 = gauss_hermite(2)
    np.testing.assert_allclose(r2.abscissae, [-1, 1], atol=1e-14)
    np.testing.assert_allclose(r2.weights, [0.5, 0.5], atol=1e-14)
    r3 = gauss_hermite(3)
    np.testing.assert_allclose(r3.abscissae, [-math.sqrt(3), 0, math.sqrt(3)], atol=1e-13)
    np.testing.assert_allclose(r3.weights, [1 / 6, 2 / 3, 1 / 6], atol=1e-14)


@pytest.mark.parametrize("count", [4, 7, 12])
def test_gauss_hermite_matches_numpy(count):
    x, w = hermite_e.hermegauss(count)
    rule = gauss_hermite(count)
    np.testing.assert_allclose(rule.abscissae, x, atol=1e-12)
    np.testing.assert_allclose(rule.weights, w / w.sum(), atol=1e-13)
    assert rule.weights.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(rule.abscissae, -rule.abscissae[::-1], atol=1e-12)


def test_gauss_hermite_rejects_empty():
    with pytest.raises(ValueError):
        gauss_hermite(0)


def test_classic_three_velocity_rule():
    rule = grid_weights_1d(2, math.sqrt(3.0))
    np.testing.assert_allclose(rule.weights, [2 / 3, 1 / 6, 0.0], atol=1e-13)
    assert verify_orthogonality_1d(rule).max_residual < 1e-12


def test_trivial_rule():
    rule = grid_weights_1d(0, 1.0)
    assert rule.weights.tolist() == [1.0]
    assert verify_orthogonality_1d(rule).max_residual == 0.0


@pytest.mark.parametrize("n_q", range(0, 9))
def test_moment_conditions_default_scale(n_q):
    rule = grid_weights_1d(n_q, default_scale(n_q))
    offsets, w = rule.full()
    for n in range(n_q + 1):
        total = float(np.sum(w * hermite_e.hermeval(rule.a * offsets, [0] * n + [1]) ** 2))
        assert total == pytest.approx(math.factorial(n), rel=1e-10)


@pytest.mark.parametrize("n_q", range(1, 9))
@pytest.mark.parametrize("a", [0.8, 1.0])
def test_orthogonality_fixed_scales(n_q, a):
    assert verify_orthogonality_1d(grid_weights_1d(n_q, a)).max_residual <= 1e-10


@pytest.mark.parametrize("n_q", range(1, 9))
def test_lagrange_agrees_with_linear_solve(n_q):
    a = default_scale(n_q)
    np.testing.assert_allclose(grid_weights_1d(n_q, a).weights, solve_moment_system(n_q, a), atol=1e-9)


def test_monomial_variant_oracle():
    # monomial moments of the unit Gaussian: E[x^(2n)] = (2n-1)!!
    for n_q in (2, 4):
        a = default_scale(n_q)
        w = grid_weights_1d(n_q, a).weights
        k = np.arange(n_q + 1)
        mult = np.where(k == 0, 1.0, 2.0)
        for n in range(n_q + 1):
            got = float(np.sum(mult * w * (a * k) ** (2 * n)))
            assert got == pytest.approx(math.prod(range(1, 2 * n, 2)), rel=1e-10)


@pytest.mark.parametrize("n_q, expected", [(2, math.sqrt(3.0)), (4, 1.1969797703930742), (6, 0.9700084987394435)])
def test_elimination_scales(n_q, expected):
    a = solve_elimination_scale(n_q)
    assert a == pytest.approx(expected, abs=1e-12)
    rule = grid_weights_1d(n_q, a)
    assert abs(rule.weights[-1]) <= 1e-10
    assert verify_orthogonality_1d(rule).max_residual <= 1e-10


def test_elimination_scale_order_eight():
    a = solve_elimination_scale(8)
    assert a == pytest.approx(0.8369, abs=1e-4)
    assert abs(grid_weights_1d(8, a).weights[-1]) <= 1e-10


@pytest.mark.parametrize("n_q", [2, 4, 6])
def test_eliminated_rule_reduces_to_lower_order(n_q):
    a = solve_elimination_scale(n_q)
    high = grid_weights_1d(n_q, a).weights
    low = grid_weights_1d(n_q - 1, a).weights
    np.testing.assert_allclose(high[:-1], low, atol=1e-9)


def test_odd_elimination_rejected():
    with pytest.raises(ValueError):
        solve_elimination_scale(3)


def test_no_root_in_bracket_reports_interval():
    with pytest.raises(QuadratureError, match="a in"):
        solve_elimination_scale(2, lo=2.0, hi=3.0)


def test_corrupted_weight_detected():
    rule = grid_weights_1d(4, default_scale(4))
    bad = GridQuadrature1D(rule.n_q, rule.a, rule.weights + np.array([0, 0.01, 0, 0, 0]))
    assert verify_orthogonality_1d(bad).max_residual > 1e-3


def test_invalid_inputs():
    with pytest.raises(ValueError):
        grid_weights_1d(-1, 1.0)
    with pytest.raises(ValueError):
        grid_weights_1d(2, 0.0)


def test_moment_matrix_multiplicity():
    m = moment_matrix(2, 1.0)
    assert m[0].tolist() == [1.0, 2.0, 2.0]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 6), st.floats(0.6, 2.5))
def test_zeroth_moment_any_scale(n_q, a):
    rule = grid_weights_1d(n_q, a)
    _, w = rule.full()
    assert float(np.sum(w)) == pytest.approx(1.0, abs=1e-10)
    assert verify_orthogonality_1d(rule).max_residual <= 1e-8

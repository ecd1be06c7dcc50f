import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isostencil.fractional_stencil import closed_form_1d
from isostencil.integer_stencil import symbol_1d
from isostencil.kernels import filon_moments
from isostencil.spectral_integrators import (
    IntegratorConfig,
    IntegratorError,
    asymmetric_tanhsinh_grid,
    build_rule,
    coefficients_1d,
    composite_rule,
    default_k_g,
    default_n_f,
    fft_inverse_dtft,
    fft_sample_grid,
    filon_plan,
    one_minus_psi,
    psi,
    psi_prime,
    symmetric_tanhsinh_grid,
    tanhsinh_coefficient,
    tanhsinh_endpoint,
    vandermonde,
)
from oracles import cosine_moment

BASE = np.array([-2.0, 1.0])


def second_order_symbol(w):
    return symbol_1d(BASE, np.atleast_1d(w))


def exact(alpha, n):
    return np.array([closed_form_1d(alpha, k) for k in range(n + 1)])


# --- tanh-sinh ---


def test_psi_shape():
    x = np.linspace(-3, 3, 301)
    p = psi(x)
    assert np.all(np.diff(p) > 0)
    # saturates in double precision but never leaves [-1, 1]
    assert np.all(np.abs(psi(np.linspace(-8, 8, 33))) <= 1)
    assert np.all(np.abs(p) <= 1)
    assert np.all(psi_prime(x) > 0)
    np.testing.assert_allclose(one_minus_psi(x[200:260]), 1 - p[200:260], atol=1e-15)


def test_endpoint_constant_integrand():
    x_star = tanhsinh_endpoint(0.0).x_star
    assert 3.2 < x_star < 3.35
    assert tanhsinh_endpoint(0.0, eps=1e-8).x_star < x_star


def test_endpoint_truncation_floor():
    eps = 2.0**-53
    for alpha in (0.0, 1.0, 2.0):
        x = tanhsinh_endpoint(alpha, eps).x_star
        w = math.pi * float(one_minus_psi(x))
        ratio = float(psi_prime(x)) * abs(2 * math.sin(w / 2)) ** alpha / (float(psi_prime(0.0)) * 2.0**alpha)
        assert ratio == pytest.approx(eps, rel=1e-6)


def test_asymmetric_endpoints_match_ratio_definition():
    h_g = math.pi / 4
    ends = tanhsinh_endpoint(1.0, h_g=h_g)
    ref = float(psi_prime(0.0)) * abs(2 * math.sin(h_g / 4))
    w_pos = h_g * (1 - 0.5 * float(one_minus_psi(ends.x_star)))
    w_neg = 0.5 * h_g * float(one_minus_psi(ends.x_neg))
    eps = 2.0**-53
    for x, w in ((ends.x_star, w_pos), (ends.x_neg, w_neg)):
        ratio = float(psi_prime(x)) * abs(2 * math.sin(w / 2)) / ref
        assert eps / 10 <= ratio <= eps * 10
    # the closed-form guesses land close to the refined roots
    assert abs(ends.guess - ends.x_star) < 0.3
    assert abs(ends.guess_neg - ends.x_neg) < 0.3


def test_endpoint_validation():
    with pytest.raises(IntegratorError):
        tanhsinh_endpoint(2.5)
    with pytest.raises(IntegratorError):
        tanhsinh_endpoint(1.0, eps=0.0)
    with pytest.raises(IntegratorError):
        tanhsinh_endpoint(1.0, h_g=4.0)
    with pytest.raises(IntegratorError):
        symmetric_tanhsinh_grid(1.0, 0)


def test_tanhsinh_integer_power_exact():
    grid = symmetric_tanhsinh_grid(2.0, 40)
    got = [tanhsinh_coefficient(second_order_symbol, 2.0, n, grid) for n in range(4)]
    np.testing.assert_allclose(got, [-2.0, 1.0, 0.0, 0.0], atol=1e-12)


def test_tanhsinh_alpha_one_centre():
    grid = symmetric_tanhsinh_grid(1.0, 200)
    assert tanhsinh_coefficient(second_order_symbol, 1.0, 0, grid) == pytest.approx(-4 / math.pi, abs=1e-10)


def test_tanhsinh_constant_symbol():
    grid = symmetric_tanhsinh_grid(0.0, 100)
    for n in range(1, 6):
        assert abs(tanhsinh_coefficient(lambda w: np.ones_like(w), 1.0, n, grid)) <= 1e-12


def test_tanhsinh_geometric_convergence():
    errs = []
    for n_t in (25, 50, 100, 200):
        grid = symmetric_tanhsinh_grid(1.0, n_t)
        errs.append(max(abs(tanhsinh_coefficient(second_order_symbol, 1.0, n, grid) - closed_form_1d(1.0, n)) for n in range(5)))
    floor = 1e-14
    for a, b in zip(errs, errs[1:]):
        if a > floor:
            assert b <= a / 4 or b <= floor


def test_asymmetric_grid_covers_split_interval():
    grid = asymmetric_tanhsinh_grid(1.0, math.pi / 8, 64)
    assert grid.nodes.min() > 0 and grid.nodes.max() <= math.pi / 8
    # truncation is sized for an integrand vanishing like w^alpha at w = 0
    h_g = math.pi / 8
    got = float(np.sum(grid.weights * grid.nodes))
    assert got == pytest.approx(h_g**2 / 2, rel=1e-13)


# --- Filon ---


@pytest.mark.parametrize("q", [1, 2])
def test_moments_against_adaptive_quadrature(q):
    h = math.pi / 64
    s = 0.5 * q * h
    centres = np.array([1.5 * h, 17 * h, math.pi - s])
    mom = filon_moments(np.arange(0, 65, 3), centres, s, 6)
    for i, n in enumerate(range(0, 65, 3)):
        for m, c in enumerate(centres):
            for k in range(7):
                ref = cosine_moment(n, -s, s, k, c)
                assert abs(mom[i, m, k] - ref) <= 1e-12 * 2 * s ** (k + 1) / (k + 1)


def test_zero_frequency_moments():
    s = 0.3
    mom = filon_moments(np.array([0]), np.array([1.0]), s, 5)[0, 0]
    want = [2 * s ** (k + 1) / (k + 1) if k % 2 == 0 else 0.0 for k in range(6)]
    np.testing.assert_allclose(mom, want, atol=1e-16)


def test_plan_zeroth_moment_identity():
    plan = filon_plan(32, 4, 4)
    s = 0.5 * plan.q * plan.h
    for n in (1, 5, 20):
        for r in range(plan.regions):
            a, b = plan.centres[r] - s, plan.centres[r] + s
            assert plan.weights[n, r].sum() == pytest.approx((math.sin(n * b) - math.sin(n * a)) / n, abs=1e-13)


@pytest.mark.parametrize("n_f", [1, 2, 3, 4, 6])
def test_plan_exact_for_polynomials(n_f):
    n = 32
    plan = filon_plan(n, default_k_g(n, n_f), n_f)
    raw = plan.centres[:, None] / plan.h + (np.arange(n_f + 1) - 0.5 * n_f)[None, :]
    x_nodes = plan.h * raw
    s = 0.5 * plan.q * plan.h
    for freq in (0, 3, 17):
        for deg in range(n_f + 1):
            for r in (0, plan.regions // 2, plan.regions - 1):
                c = plan.centres[r]
                got = float(np.sum(plan.weights[freq, r] * (x_nodes[r] - c) ** deg))
                want = cosine_moment(freq, -s, s, deg, c)
                assert abs(got - want) <= 1e-11 * max(abs(want), 2 * s ** (deg + 1) / (deg + 1))


def test_plan_validation():
    with pytest.raises(IntegratorError, match="ill-conditioned"):
        filon_plan(32, 4, 11)
    with pytest.raises(IntegratorError):
        filon_plan(32, 0, 4)
    with pytest.raises(IntegratorError):
        filon_plan(32, 3, 4)
    with pytest.raises(IntegratorError, match="branch point"):
        filon_plan(32, 2, 8)


def test_vandermonde_layout():
    v = vandermonde(2)
    np.testing.assert_array_equal(v, [[1, 1, 1], [-1, 0, 1], [1, 0, 1]])


def test_defaults():
    assert default_n_f(2, 4) == 4
    assert default_n_f(2, 5) == 4
    assert default_n_f(1, 2) == 2
    k = default_k_g(64, 4)
    assert (64 - k) % 2 == 0 and abs(k * math.pi / 64 - math.pi / 8) < 0.1


def test_composite_integer_power():
    rule = composite_rule(128, 2.0, n_f=4)
    c = coefficients_1d(rule, symbol_1d(BASE, rule.nodes), 2.0)
    want = np.zeros(129)
    want[:2] = [-2.0, 1.0]
    np.testing.assert_allclose(c, want, atol=1e-10)


def test_composite_alpha_half():
    rule = composite_rule(64, 0.5, n_f=4)
    c = coefficients_1d(rule, symbol_1d(BASE, rule.nodes), 0.5)
    np.testing.assert_allclose(c[:3], exact(0.5, 2), atol=1e-9)


def test_composite_order_fixed_coefficients():
    errs = []
    for n in (32, 64, 128):
        rule = composite_rule(n, 1.5, n_f=4)
        c = coefficients_1d(rule, symbol_1d(BASE, rule.nodes), 1.5)[:17]
        errs.append(np.max(np.abs(c - exact(1.5, 16))))
    rates = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(rates) >= 6.0


def test_odd_degree_order():
    errs = []
    for n in (32, 64, 128):
        rule = composite_rule(n, 1.5, n_f=3)
        c = coefficients_1d(rule, symbol_1d(BASE, rule.nodes), 1.5)[:17]
        errs.append(np.max(np.abs(c - exact(1.5, 16))))
    rates = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(rates) >= 3.8


def _naive_symbol(w):
    return -2.0 + 2.0 * np.cos(w)


def test_stable_symbol_beats_naive_near_branch_point():
    # tanh-sinh puts nodes within 1e-10 of w = 0, where -2 + 2 cos w cancels
    alpha = 0.3
    grid = symmetric_tanhsinh_grid(alpha, 200)

    def err(f):
        return max(abs(tanhsinh_coefficient(f, alpha, n, grid) - closed_form_1d(alpha, n)) for n in range(5))

    stable = err(second_order_symbol)
    naive = err(_naive_symbol)
    assert stable <= 1e-14
    assert naive > 100 * stable


# --- FFT baseline and assembly ---


def test_fft_integer_power():
    w = fft_sample_grid(16)
    c = fft_inverse_dtft(symbol_1d(BASE, w), 2.0)
    want = np.zeros(33)
    want[15:18] = [1, -2, 1]
    np.testing.assert_allclose(c, want, atol=1e-13)


def test_fft_zero_symbol():
    assert not np.any(fft_inverse_dtft(np.zeros(16), 1.0))


def test_fft_alpha_one_centre_converges_algebraically():
    errs = []
    for n in (64, 128, 256, 512):
        c = fft_inverse_dtft(symbol_1d(BASE, fft_sample_grid(n)), 1.0)
        errs.append(abs(c[n] + 4 / math.pi))
    rates = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    np.testing.assert_allclose(rates, 2.0, atol=0.05)
    assert errs[-1] > 1e-7


def test_fft_shape_validation():
    with pytest.raises(IntegratorError):
        fft_inverse_dtft(np.zeros(7), 1.0)
    with pytest.raises(IntegratorError):
        fft_inverse_dtft(np.zeros((4, 6)), 1.0)


def test_config_roundtrip_and_validation():
    cfg = IntegratorConfig("tanh-sinh", n_t=300, k_g=None, n_f=6)
    assert IntegratorConfig.from_dict(json.loads(cfg.to_json())) == cfg
    with pytest.raises(IntegratorError):
        IntegratorConfig("simpson")
    with pytest.raises(IntegratorError):
        IntegratorConfig(eps=2.0)
    with pytest.raises(IntegratorError):
        build_rule(8, 1.0, IntegratorConfig("fft"))


def test_two_dimensional_rule_sized_for_flat_integrand():
    rule1 = build_rule(16, 1.0, IntegratorConfig("tanh-sinh"), dimension=1)
    rule2 = build_rule(16, 1.0, IntegratorConfig("tanh-sinh"), dimension=2)
    assert rule2.info["x_star"] > rule1.info["x_star"]
    # the m = 0 row integrates a constant over [0, pi]
    assert float(rule2.matrix[0].sum()) == pytest.approx(math.pi, abs=1e-14)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 2.0), st.integers(0, 6))
def test_integrators_agree(alpha, n):
    ts = build_rule(64, alpha, IntegratorConfig("tanh-sinh"))
    fi = build_rule(64, alpha, IntegratorConfig("filon", n_f=6))
    a = coefficients_1d(ts, symbol_1d(BASE, ts.nodes), alpha)[n]
    b = coefficients_1d(fi, symbol_1d(BASE, fi.nodes), alpha)[n]
    assert a == pytest.approx(closed_form_1d(alpha, n), abs=1e-10)
    assert b == pytest.approx(closed_form_1d(alpha, n), abs=1e-10)

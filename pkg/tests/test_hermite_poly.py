import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isostencil.hermite_poly import (
    hermite_array,
    hermite_tensor_entry,
    hermite_values,
    kernel_coefficients,
    laplacian_hermite_arrays,
    laplacian_hermite_table,
    laplacian_kernel,
    laplacian_kernel_radial,
    parity_counts,
)
from oracles import he, he_monomial, laplacian_hermite_bruteforce


@pytest.mark.parametrize(
    "x, order, expected",
    [(0.0, 2, [1, 0, -1]), (2.0, 3, [1, 2, 3, 2]), (math.sqrt(3.0), 2, [1, math.sqrt(3.0), 2])],
)
def test_hermite_values_small_cases(x, order, expected):
    np.testing.assert_allclose(hermite_values(x, order).values, expected, atol=1e-14)


def test_hermite_sequence_indexing():
    seq = hermite_values(1.5, 4)
    assert len(seq) == 5
    assert seq[3] == pytest.approx(1.5**3 - 3 * 1.5)


@given(st.floats(-6, 6), st.integers(0, 12))
def test_recurrence_matches_monomial_form(x, n):
    got = hermite_array(x, n)[n]
    want = he_monomial(n, x)
    scale = max(1.0, sum(abs(t) for t in [he_monomial(n, abs(x))]))
    assert abs(got - want) <= 1e-10 * scale


def test_hermite_array_vectorised_against_numpy():
    x = np.linspace(-4, 4, 17)
    table = hermite_array(x, 10)
    for n in range(11):
        np.testing.assert_allclose(table[n], he(n, x), rtol=1e-12, atol=1e-10)


def test_negative_order_rejected():
    with pytest.raises(ValueError):
        hermite_array(0.0, -1)


@pytest.mark.parametrize(
    "index, x, expected",
    [([], [5.0, -2.0], 1.0), ([0, 0], [2.0, 7.0], 3.0), ([0, 1], [2.0, 3.0], 6.0)],
)
def test_tensor_entries(index, x, expected):
    assert hermite_tensor_entry(index, x) == pytest.approx(expected)


def test_tensor_entry_is_permutation_invariant():
    x = [0.3, -1.1, 2.0]
    assert hermite_tensor_entry([0, 2, 2, 1], x) == pytest.approx(hermite_tensor_entry([2, 1, 0, 2], x))


def test_parity_counts_rejects_bad_axis():
    assert parity_counts([0, 1, 1], 2) == [1, 2]
    with pytest.raises(IndexError):
        parity_counts([2], 2)


def test_laplacian_hermite_low_orders():
    t = laplacian_hermite_table(0.0, 2, 1)
    assert t.even[0] == 1.0 and t.odd[0] == 0.0
    assert t.even[1] == -2.0
    t = laplacian_hermite_table(2.0, 3, 1)
    assert t.even[1] == pytest.approx(1.0)
    assert t.odd[1] == pytest.approx(-2.0)


def test_one_dimension_reduces_to_hermite():
    r = 1.5
    even, odd = laplacian_hermite_arrays(r, 1, 3)
    for m in range(4):
        assert even[m] == pytest.approx(he(2 * m, r), rel=1e-13)
        assert odd[m] == pytest.approx(he(2 * m + 1, r), rel=1e-13)


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("r", [0.0, 0.5, 1.0, 2.0])
def test_tables_match_multinomial_expansion(d, r):
    rng = np.random.default_rng(d * 10 + int(4 * r))
    direction = rng.normal(size=d)
    point = direction / np.linalg.norm(direction) * r
    even, odd = laplacian_hermite_arrays(r, d, 4)
    for m in range(5):
        be, bo = laplacian_hermite_bruteforce(point, m)
        assert abs(even[m] - be) <= 1e-9 * max(1.0, abs(be))
        if r > 0:
            assert abs(odd[m] - bo) <= 1e-9 * max(1.0, abs(bo))


def test_shifted_odd_recurrence_disagrees_with_oracle():
    # H_{1,m+1} = r H_{0,m} - 2m H_{1,m-1} (left index shifted); the oracle rejects it
    r, d = 1.3, 2
    even, _ = laplacian_hermite_arrays(r, d, 3)
    odd_shifted = [r, r * even[0]]
    odd_shifted.append(r * even[1] - 2 * 1 * odd_shifted[0])
    _, bo = laplacian_hermite_bruteforce(np.array([r, 0.0]), 2)
    assert abs(odd_shifted[2] - bo) > 1e-3


def test_negative_radius_rejected():
    with pytest.raises(ValueError):
        laplacian_hermite_table(-1.0, 2, 2)


# N_c = 2 at the origin: H_{0,1} - H_{0,2}/2 = -2 - d(d+2)/2 = -6 in 2D. The
# correction weight -1/2 is fixed by the fourth-order 1D stencil test.
@pytest.mark.parametrize(
    "v, n_c, expected", [((0.0, 0.0), 1, -2.0), ((math.sqrt(3.0), 0.0), 1, 1.0), ((0.0, 0.0), 2, -6.0)]
)
def test_kernel_examples(v, n_c, expected):
    assert laplacian_kernel(v, n_c) == pytest.approx(expected)


def test_kernel_coefficients():
    np.testing.assert_allclose(kernel_coefficients(3), [1.0, -0.5, 1.0 / 8.0])
    with pytest.raises(ValueError):
        laplacian_kernel_radial(1.0, 2, 0)


@settings(max_examples=40)
@given(st.floats(0, 4), st.integers(1, 3), st.integers(1, 4))
def test_radial_derivative_identity(r, d, m):
    # d/dr H_{0,m} = r H_{0,m} - H_{1,m}, checked by central differences
    h = 1e-5
    even_p, _ = laplacian_hermite_arrays(r + h, d, m)
    even_m, _ = laplacian_hermite_arrays(abs(r - h), d, m)
    even, odd = laplacian_hermite_arrays(r, d, m)
    if r < 2 * h:
        return
    deriv = (even_p[m] - even_m[m]) / (2 * h)
    assert deriv == pytest.approx(r * even[m] - odd[m], rel=1e-5, abs=1e-5)

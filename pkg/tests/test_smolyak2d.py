import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isostencil.grid_quadrature import grid_weights_1d
from isostencil.integer_stencil import default_scale
from isostencil.smolyak2d import (
    SparseWeights2D,
    condition_count,
    expand_full,
    implicit_weights,
    multiplicity,
    node_set,
    orthogonality_residual,
    smolyak_weights,
)

LISTED_NQ4 = {(0, 0), (1, 0), (1, 1), (2, 0), (2, 1), (2, 2), (3, 0), (3, 3), (4, 0)}


def test_node_sets():
    assert set(node_set(4)) == LISTED_NQ4
    assert node_set(0) == [(0, 0)]
    assert set(node_set(2)) == {(0, 0), (1, 0), (1, 1), (2, 0)}


@pytest.mark.parametrize("n_q", range(0, 7))
def test_node_count_is_triangle_formula(n_q):
    assert len(node_set(n_q)) == condition_count(n_q)


def test_tensor_consistent_second_order():
    w = implicit_weights(2, math.sqrt(3.0)).entries
    expected = {(0, 0): 4 / 9, (1, 0): 1 / 9, (1, 1): 1 / 36, (2, 0): 0.0}
    for k, v in expected.items():
        assert w[k] == pytest.approx(v, abs=1e-13)


def test_eliminated_corner_weight():
    a = default_scale(4)
    assert abs(implicit_weights(4, a).entries[(4, 0)]) < 1e-10


def test_trivial_rule():
    w = implicit_weights(0, 1.0)
    assert w.entries == {(0, 0): pytest.approx(1.0)}
    assert expand_full(w).tolist() == [[1.0]]


@pytest.mark.parametrize("n_q", range(0, 7))
def test_constructions_agree(n_q):
    a = default_scale(n_q)
    imp = implicit_weights(n_q, a)
    smo = smolyak_weights(n_q, a)
    assert set(smo.entries) <= set(node_set(n_q))
    for node in node_set(n_q):
        assert smo.entries.get(node, 0.0) == pytest.approx(imp.entries[node], abs=1e-9)
    assert orthogonality_residual(imp) <= 1e-9
    assert orthogonality_residual(smo) <= 1e-9


def test_odd_closure_is_symmetric_at_unit_scale():
    w = smolyak_weights(5, 1.0)
    full = expand_full(w)
    np.testing.assert_allclose(full, full.T, atol=1e-12)
    assert orthogonality_residual(w) <= 1e-9


@pytest.mark.parametrize("n_q", range(0, 7))
def test_total_mass(n_q):
    full = expand_full(implicit_weights(n_q, default_scale(n_q)))
    assert float(full.sum()) == pytest.approx(1.0, abs=1e-10)


def test_second_order_field_is_three_by_three():
    full = expand_full(implicit_weights(2, math.sqrt(3.0)))
    assert np.count_nonzero(np.abs(full) > 1e-14) == 9


def test_second_order_is_tensor_product():
    w1 = grid_weights_1d(2, math.sqrt(3.0))
    _, full1 = w1.full()
    np.testing.assert_allclose(expand_full(implicit_weights(2, math.sqrt(3.0))), np.outer(full1, full1), atol=1e-14)


@given(st.integers(0, 6), st.integers(0, 6))
def test_multiplicities(i, j):
    i, j = max(i, j), min(i, j)
    m = multiplicity(i, j)
    if i == 0:
        assert m == 1
    elif j == 0 or i == j:
        assert m == 4
    else:
        assert m == 8


@given(st.dictionaries(st.sampled_from(node_set(4)), st.floats(-1, 1), min_size=1))
def test_full_sum_equals_weighted_canonical_sum(entries):
    sparse = SparseWeights2D(4, 1.0, entries)
    total = sum(v * multiplicity(*k) for k, v in entries.items())
    assert float(expand_full(sparse).sum()) == pytest.approx(total, abs=1e-12)


def test_stray_weight_makes_residual_infinite():
    w = implicit_weights(2, math.sqrt(3.0))
    bad = SparseWeights2D(2, w.a, {**w.entries, (2, 2): 0.1})
    assert orthogonality_residual(bad) == math.inf


def test_negative_order_rejected():
    with pytest.raises(ValueError):
        node_set(-1)
    with pytest.raises(ValueError):
        smolyak_weights(-1, 1.0)

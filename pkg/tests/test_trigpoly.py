import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fiberindex.trigpoly import RankMismatch, SizeMismatch, TrigPoly, coefficient_floor

freqs = st.lists(st.tuples(st.integers(-3, 3), st.floats(-2, 2), st.floats(-2, 2)), min_size=1, max_size=5)


def _poly(entries):
    table = {}
    for f, re, im in entries:
        table[(f,)] = table.get((f,), 0) + complex(re, im)
    return TrigPoly.from_dict(table, 1, 1)


def _grid_values(t, grid=32):
    x = 2 * np.pi * np.arange(grid) / grid
    out = np.zeros(grid, dtype=complex)
    for (f,), c in t.to_dict().items():
        out += c[0, 0] * np.exp(1j * f * x)
    return out


@given(freqs, freqs)
def test_product_is_pointwise_product(a, b):
    p, q = _poly(a), _poly(b)
    assert np.allclose(_grid_values(p.matmul(q)), _grid_values(p) * _grid_values(q), atol=1e-10)


@given(freqs, freqs)
def test_addition_and_scaling(a, b):
    p, q = _poly(a), _poly(b)
    assert np.allclose(_grid_values(p + q.scale(2j)), _grid_values(p) + 2j * _grid_values(q), atol=1e-12)


def test_monomial_product_adds_frequencies():
    t = TrigPoly.monomial((2, -1)).matmul(TrigPoly.monomial((-1, 3)))
    assert set(t.to_dict(1e-12)) == {(1, 2)}


def test_derivative_multiplies_by_i_frequency():
    t = TrigPoly.monomial((3,), 2.0).deriv(0)
    assert np.allclose(t.coefficient((3,)), 6j)


def test_matrix_valued_product_is_noncommutative():
    A = TrigPoly.constant(np.array([[0, 1], [0, 0]]), 1)
    B = TrigPoly.constant(np.array([[0, 0], [1, 0]]), 1)
    assert not A.matmul(B).allclose(B.matmul(A))


def test_rank_and_size_mismatch():
    with pytest.raises(RankMismatch):
        TrigPoly.monomial((1,)).matmul(TrigPoly.monomial((1, 0)))
    with pytest.raises(SizeMismatch):
        TrigPoly.identity(1, 2).matmul(TrigPoly.identity(1, 3))


def test_partial_eval_freezes_base_variables():
    t = TrigPoly.monomial((1, 2))
    s = t.partial_eval([0], [0.5])
    assert s.rank == 1
    assert np.allclose(s.coefficient((2,)), np.exp(0.5j))


def test_coefficient_floor_trims_small_products():
    t = TrigPoly.from_dict({(0,): 1.0, (1,): 1e-15}, 1)
    with coefficient_floor(1e-13):
        u = t.matmul(t)
    assert set(u.trim(1e-13).to_dict()) == {(0,)}


def test_adjoint_conjugates_and_flips():
    t = TrigPoly.monomial((2,), 1 + 1j)
    assert np.allclose(t.adjoint().coefficient((-2,)), 1 - 1j)

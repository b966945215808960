import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fiberindex.oracle import truncate_op
from fiberindex.sampling import random_symbol
from fiberindex.symbols import (
    DSpec,
    EllipticityError,
    WatermarkError,
    branch_symbol,
    constant_symbol,
    diag_symbol_value,
    log_commutator,
    log_commutator_closed_form,
    multiplication_symbol,
    parametrix,
    sym_add,
    sym_commutator,
    sym_compose,
    sym_mul,
    sym_scale,
    sym_sub,
    symbol,
)
from fiberindex.trigpoly import TrigPoly

E1 = TrigPoly.monomial((1,))
ONE = TrigPoly.identity(1)


def _comp_max(s):
    return max(max(p.max_abs(), m.max_abs()) for p, m in s.components)


def test_add_zero_is_identity(rng):
    a = random_symbol(rng, 0)
    z = sym_scale(a, 0.0)
    b = sym_add(a, z)
    assert b.order == a.order
    for (p, m), (q, n) in zip(a.components, b.components):
        assert p.allclose(q) and m.allclose(n)


def test_scale_zero_keeps_order_and_watermark(rng):
    a = random_symbol(rng, 1)
    z = sym_scale(a, 0.0)
    assert (z.order, z.watermark) == (a.order, a.watermark)
    assert _comp_max(z) == 0


def test_cancellation_keeps_recorded_order():
    D = DSpec().symbol
    z = sym_sub(D, D)
    assert z.order == 1
    assert _comp_max(z) == 0


def test_compose_multiplication_symbols_is_exact_product():
    f = TrigPoly.from_dict({(0,): 1.0, (1,): 0.5}, 1)
    g = TrigPoly.from_dict({(-2,): 2.0, (1,): 1j}, 1)
    c = sym_compose(multiplication_symbol(f), multiplication_symbol(g), 3)
    p, m = c.components[0]
    assert p.allclose(f.matmul(g)) and m.allclose(f.matmul(g))
    assert all(q.max_abs() < 1e-15 and n.max_abs() < 1e-15 for q, n in c.components[1:])


def test_commutator_of_D_with_shift_matches_matrix():
    c = sym_commutator(DSpec().symbol, multiplication_symbol(E1), 3)
    p, m = c.components[1]
    assert p.allclose(E1) and m.allclose(E1.scale(-1))
    N = 10
    T = truncate_op(c, N).matrix
    n = np.arange(-N, N + 1)
    exact = np.zeros_like(T)
    for i in range(2 * N):
        exact[i + 1, i] = max(abs(n[i] + 1), 1) - max(abs(n[i]), 1)
    assert np.abs(T - exact).max() == 0


def test_compose_with_zero(rng):
    a = random_symbol(rng, 0)
    c = sym_compose(a, sym_scale(a, 0.0), 2)
    assert _comp_max(c) == 0


def test_parametrix_of_identity():
    p = parametrix(constant_symbol(1.0), 3)
    assert p.components[0][0].allclose(ONE) and p.components[0][1].allclose(ONE)
    assert _comp_max(type(p)(p.order, p.components[1:] or [(ONE.scale(0), ONE.scale(0))])) < 1e-15


def test_parametrix_of_shift_is_branchwise_inverse():
    p = parametrix(branch_symbol(E1, ONE), 4)
    plus, minus = p.components[0]
    assert plus.allclose(TrigPoly.monomial((-1,))) and minus.allclose(ONE)
    assert all(q.max_abs() == 0 and n.max_abs() == 0 for q, n in p.components[1:])


def test_parametrix_residual_small():
    f = TrigPoly.from_dict({(0,): 1.0, (1,): 0.25, (-1,): 0.25}, 1)
    q = symbol(0, [(f, f), (1.0, 1.0)], zero_mode=f)
    p = parametrix(q, 4)
    r = sym_sub(sym_compose(q, p, 4), constant_symbol(1.0))
    assert _comp_max(r) < 1e-10


def test_parametrix_rejects_non_elliptic():
    f = TrigPoly.from_dict({(0,): 1.0, (1,): 0.5, (-1,): 0.5}, 1)  # vanishes at x = pi
    with pytest.raises(EllipticityError):
        parametrix(branch_symbol(f, f), 2)


def test_compose_refuses_requests_below_watermark():
    a = symbol(0, [(1.0, 1.0)])  # no exact completion, watermark -1
    a = type(a)(0, a.components, -1)
    with pytest.raises(WatermarkError):
        sym_compose(a, multiplication_symbol(E1), 5)


def test_log_commutator_constant_vanishes():
    c = log_commutator(constant_symbol(np.array([[1.0, 2.0], [3.0, 4.0]]), 1, 2), 4)
    assert _comp_max(c) == 0


def test_log_commutator_shift_series_and_matrix():
    lc = log_commutator(multiplication_symbol(E1), 6)
    expected = [1, -0.5, 1 / 3, -0.25]
    for j, c in enumerate(expected):
        p, m = lc.components[j]
        assert np.allclose(p.coefficient((1,)), c)
        assert np.allclose(m.coefficient((1,)), c * (-1) ** (j + 1))
    # expansion against ln max(|n+1|, 1) - ln max(|n|, 1) for n >= 16
    for n in range(16, 40):
        v = lc.expansion_value(n, 6).coefficient((1,))[0, 0]
        assert abs(v - (np.log(n + 1) - np.log(n))) <= 1e-8
    N = 30
    L = truncate_op(lc, N).matrix
    ln = np.log(np.maximum(np.abs(np.arange(-N, N + 1)), 1))
    for i in range(2 * N):
        assert abs(L[i + 1, i] - (ln[i + 1] - ln[i])) < 1e-12


@given(st.integers(0, 10_000))
def test_log_commutator_linear(seed):
    rng = np.random.default_rng(seed)
    a, b = random_symbol(rng, 0), random_symbol(rng, 0)
    lhs = log_commutator(sym_add(a, b), 3)
    rhs = sym_add(log_commutator(a, 3), log_commutator(b, 3))
    assert _comp_max(sym_sub(lhs, rhs)) < 1e-12


def test_log_commutator_closed_form_agrees(rng):
    a = random_symbol(rng, 0)
    d = sym_sub(log_commutator(a, 4), log_commutator_closed_form(a, 4))
    assert _comp_max(d) < 1e-12


def test_diag_value_examples():
    assert diag_symbol_value(multiplication_symbol(E1), 5).max_abs() == 0
    D = DSpec().symbol
    for n in (-3, 0, 4):
        assert np.allclose(diag_symbol_value(D, n).coefficient(()), max(abs(n), 1))
    t = TrigPoly.constant(7.0, 1)
    a = symbol(-1, [(1.0, 1.0)], zero_mode=0.0, correction={1: t, -1: t})
    # the table is a smoothing perturbation added to |n|^-1
    assert np.allclose(diag_symbol_value(a, 1).coefficient(()), 1.0 + 7.0)
    assert np.allclose(diag_symbol_value(a, 2).coefficient(()), 0.5)


def test_sym_mul_scales_components():
    f = TrigPoly.monomial((2,), 3.0)
    a = sym_mul(f, DSpec().symbol)
    assert a.components[0][0].allclose(f)


@given(st.integers(0, 10_000))
def test_composition_matches_truncated_matrices(seed):
    rng = np.random.default_rng(seed)
    a, b = random_symbol(rng, 0, depth=0, corrections=True), random_symbol(rng, -1, depth=0, corrections=True)
    c = sym_compose(a, b, 4)
    N, inner = 24, slice(8, 41)
    A, B, C = (truncate_op(s, N).matrix for s in (a, b, c))
    assert np.abs((A @ B - C)[inner, inner]).max() < 1e-8

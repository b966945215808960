import numpy as np
import pytest

from fiberindex.connecting import quantize_symbol
from fiberindex.families import qwz_vector
from fiberindex.oracle import (
    chern_number,
    index_idempotent,
    index_idempotent_pairing,
    truncate_op,
    winding_number,
)
from fiberindex.symbols import constant_symbol, multiplication_symbol, parametrix, sym_compose
from fiberindex.sampling import random_symbol
from fiberindex.trigpoly import TrigPoly


def _shift(wp, wm=0):
    return quantize_symbol(TrigPoly.monomial((wp,)), TrigPoly.monomial((wm,)))


def test_truncate_identity():
    T = truncate_op(constant_symbol(1.0), 5).matrix
    assert np.array_equal(T, np.eye(11))


def test_truncate_shift_is_subdiagonal():
    T = truncate_op(multiplication_symbol(TrigPoly.monomial((1,))), 5).matrix
    assert np.array_equal(T, np.eye(11, k=-1))


def test_truncation_respects_composition(rng):
    a, b = random_symbol(rng, 0, depth=1, corrections=True), random_symbol(rng, 0, depth=1)
    c = sym_compose(a, b, 6)
    N, inner = 40, slice(10, 71)
    A, B, C = (truncate_op(s, N).matrix for s in (a, b, c))
    assert np.abs((A @ B - C)[inner, inner]).max() <= 1e-8


def test_identity_has_zero_index():
    o = index_idempotent_pairing(constant_symbol(1.0), 64)
    assert abs(o.e_trace) < 1e-12 and o.rounded == 0


@pytest.mark.parametrize("wp,expect", [(1, 1), (2, 2), (-1, -1)])
def test_shift_indices(wp, expect):
    o = index_idempotent_pairing(_shift(wp), 128)
    assert abs(o.e_trace - expect) < 1e-3 and o.rounded == expect


def test_idempotent_is_idempotent():
    q = _shift(1)
    Q = truncate_op(q, 40).matrix
    P = truncate_op(parametrix(q, 4), 40).matrix
    e = index_idempotent(Q, P)
    assert np.abs(e @ e - e).max() < 1e-10


def test_power_and_plain_trace_agree():
    q = _shift(2, -1)
    a = index_idempotent_pairing(q, 64).e_trace
    b = index_idempotent_pairing(q, 64, power=3).e_trace
    assert abs(a - b) < 1e-6


@pytest.mark.parametrize("f,w", [
    (TrigPoly.monomial((1,)), 1),
    (TrigPoly.from_dict({(0,): 2.0, (1,): 0.5, (-1,): 0.5}, 1), 0),
    (TrigPoly.from_dict({(2,): 1.0, (3,): 0.15, (1,): 0.15}, 1), 2),
])
def test_winding_numbers(f, w):
    assert winding_number(f) == w


def test_winding_rejects_zero_crossing():
    with pytest.raises(ValueError):
        winding_number(TrigPoly.from_dict({(0,): 1.0, (1,): 0.5, (-1,): 0.5}, 1))


def _qwz_grid(grid, mass=1.0, wrap=1):
    h = qwz_vector(mass, wrap)
    sx = np.array([[0, 1], [1, 0]], complex)
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.diag([1.0, -1.0]).astype(complex)
    out = np.zeros((grid, grid, 2, 2), complex)
    for i in range(grid):
        for j in range(grid):
            v = np.asarray(h(2 * np.pi * i / grid, 2 * np.pi * j / grid), float)
            v = v / np.linalg.norm(v)
            out[i, j] = 0.5 * (np.eye(2) - (v[0] * sx + v[1] * sy + v[2] * sz))
    return out


def test_constant_projector_has_zero_chern():
    e = np.zeros((8, 8, 2, 2), complex)
    e[..., 0, 0] = 1
    assert chern_number(e) == 0


def test_complementary_bundles_cancel():
    e = _qwz_grid(24)
    c = chern_number(e)
    assert c != 0
    assert c + chern_number(np.eye(2) - e) == 0


def test_chern_number_stable_under_refinement():
    assert chern_number(_qwz_grid(16)) == chern_number(_qwz_grid(32))

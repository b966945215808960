import numpy as np
import pytest
from scipy.special import zeta as hurwitz

from fiberindex.fedosov import (
    ParityError,
    ThetaMismatch,
    TraceClassError,
    VElement,
    fedosov_product,
    trace_tau,
    trace_tau_R,
    v_differential,
    v_product,
)
from fiberindex.forms import ConnectionSpec, Cycle, FormSymbol
from fiberindex.oracle import truncate_op
from fiberindex.sampling import random_connection, random_even_velement, random_symbol, random_velement
from fiberindex.symbols import DSpec, constant_symbol, symbol
from fiberindex.trigpoly import TrigPoly


def _sym_form(s, b=0):
    return FormSymbol.scalar(s, b)


def test_product_with_zero(rng):
    conn = random_connection(rng, 2)
    a = random_velement(rng, conn)
    assert v_product(a, VElement(conn)).max_abs() == 0
    assert fedosov_product(random_even_velement(rng, conn), VElement(conn)).max_abs() == 0


def test_v_rewriting_rule(rng):
    conn = ConnectionSpec.flat(0)
    w, w2 = (_sym_form(random_symbol(rng, 0, rank=1)) for _ in range(2))
    a = VElement(conn, w21=w)  # v w
    b = VElement(conn, w12=w2)  # w' v
    prod = v_product(a, b)
    assert (prod.w22 - w.wedge(w2)).max_abs() < 1e-14
    assert max(prod.w11.max_abs(), prod.w12.max_abs(), prod.w21.max_abs()) == 0


def test_associativity(rng):
    conn = random_connection(rng, 2)
    a, b, c = (random_velement(rng, conn, depth=0) for _ in range(3))
    lhs = v_product(v_product(a, b, 3), c, 3)
    rhs = v_product(a, v_product(b, c, 3), 3)
    assert (lhs - rhs).max_abs() < 1e-10


def test_d_squared_vanishes(rng):
    conn = random_connection(rng, 2)
    a = random_velement(rng, conn, depth=1)
    assert v_differential(v_differential(a, 4), 4).max_abs() < 1e-10


def test_d_of_degree_zero_flat():
    conn = ConnectionSpec.flat(0)
    w = _sym_form(DSpec().symbol)
    d = v_differential(VElement(conn, w11=w))
    # v w + w v
    assert (d.w12 - w).max_abs() == 0 and (d.w21 - w).max_abs() == 0
    assert d.w11.max_abs() == 0 and d.w22.max_abs() == 0


def test_d_is_graded_derivation(rng):
    conn = random_connection(rng, 2)
    a = random_even_velement(rng, conn, depth=0)
    b = random_velement(rng, conn, depth=0)
    lhs = v_differential(v_product(a, b, 3), 3)
    rhs = v_product(v_differential(a, 3), b, 3) + v_product(a, v_differential(b, 3), 3)
    assert (lhs - rhs).max_abs() < 1e-10


def test_fedosov_product_definition(rng):
    conn = random_connection(rng, 2)
    a, b = (random_even_velement(rng, conn, depth=0) for _ in range(2))
    lhs = fedosov_product(a, b, 3)
    rhs = v_product(a, b, 3) - v_product(v_differential(a, 3), v_differential(b, 3), 3)
    assert (lhs - rhs).max_abs() == 0


def test_fedosov_associative_on_even(rng):
    conn = random_connection(rng, 2)
    a, b, c = (random_even_velement(rng, conn, depth=0) for _ in range(3))
    lhs = fedosov_product(fedosov_product(a, b, 2), c, 2)
    rhs = fedosov_product(a, fedosov_product(b, c, 2), 2)
    assert (lhs - rhs).max_abs() < 1e-9


def test_fedosov_rejects_odd(rng):
    conn = ConnectionSpec.flat(0)
    odd = VElement(conn, w12=_sym_form(DSpec().symbol))
    with pytest.raises(ParityError):
        fedosov_product(odd, odd)


def test_mixed_connections_rejected():
    a = VElement.one(ConnectionSpec.flat(1))
    with pytest.raises(ThetaMismatch):
        v_product(a, VElement.one(ConnectionSpec.flat(1)))


def test_trace_of_zero():
    assert trace_tau(VElement(ConnectionSpec.flat(0)), Cycle.at()) == 0


def test_trace_against_matrix_plus_tail():
    f = TrigPoly.from_dict({(0,): 1.5, (1,): 0.7, (-2,): 0.2j}, 1)
    s = symbol(-2, [(f, f)], zero_mode=f)
    a = VElement(ConnectionSpec.flat(0), w11=_sym_form(s))
    N = 512
    mat = np.trace(truncate_op(s, N).matrix)
    # modes |n| > N contribute 1.5 n^-2 each on both sides
    tail = 2 * 1.5 * hurwitz(2, N + 1)
    assert abs(trace_tau(a, Cycle.at()) - (mat + tail)) <= 1e-6
    assert abs(trace_tau_R(a, Cycle.at()) - trace_tau(a, Cycle.at())) <= 1e-9


def test_trace_requires_trace_class():
    a = VElement(ConnectionSpec.flat(0), w11=_sym_form(DSpec().power(-1)))
    with pytest.raises(TraceClassError):
        trace_tau(a, Cycle.at())


def test_renormalized_trace_values():
    conn = ConnectionSpec.flat(0)
    one = VElement(conn, w11=_sym_form(constant_symbol(1.0)))
    D = VElement(conn, w11=_sym_form(DSpec().symbol))
    assert abs(trace_tau_R(one, Cycle.at())) <= 1e-12
    assert abs(trace_tau_R(D, Cycle.at()) - 5 / 6) <= 1e-12


def test_trace_of_fedosov_commutator(rng):
    conn = random_connection(rng, 2)
    C = Cycle.torus2()
    a = random_even_velement(rng, conn, order=-1, depth=2)
    b = random_even_velement(rng, conn, order=-1, depth=2)
    comm = fedosov_product(a, b, 4) - fedosov_product(b, a, 4)
    assert abs(trace_tau_R(comm, C, 4)) < 1e-9

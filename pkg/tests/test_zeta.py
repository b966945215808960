import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import zeta as hurwitz

from fiberindex.connecting import quantize_symbol
from fiberindex.sampling import random_symbol
from fiberindex.symbols import DSpec, constant_symbol, multiplication_symbol, parametrix, sym_commutator, symbol
from fiberindex.trigpoly import TrigPoly
from fiberindex.zeta import (
    euler_maclaurin_zeta,
    hurwitz_tail,
    radul_pairing,
    trace_defect_identity,
    wodzicki_residue,
    zeta_finite_part,
    zeta_special,
)

# frozen reference values: Bernoulli numbers give zeta(1 - 2k) = -B_2k / 2k
ZETA_TABLE = {0: -0.5, -1: -1 / 12, -2: 0.0, -3: 1 / 120, -5: -1 / 252, 2: math.pi ** 2 / 6, 4: math.pi ** 4 / 90}


@pytest.mark.parametrize("s,value", sorted(ZETA_TABLE.items()))
def test_zeta_special_values(s, value):
    assert abs(zeta_special(s) - value) <= 1e-13


@pytest.mark.parametrize("s", [0, -1, -3, -5])
def test_euler_maclaurin_continuation_matches_table(s):
    assert abs(euler_maclaurin_zeta(float(s)) - ZETA_TABLE[s]) <= 1e-9


@pytest.mark.parametrize("s,q", [(2, 5), (3, 1), (4, 17), (6, 3)])
def test_hurwitz_tail_matches_scipy(s, q):
    assert abs(hurwitz_tail(s, q) - hurwitz(s, q)) <= 1e-13


def test_residue_convention():
    a = DSpec().power(-1)
    assert abs(complex(wodzicki_residue(a)) - 2) < 1e-15
    assert complex(wodzicki_residue(DSpec().power(-2))) == 0


@given(st.integers(0, 10_000))
def test_residue_of_commutator_vanishes(seed):
    rng = np.random.default_rng(seed)
    a = random_symbol(rng, int(rng.integers(-1, 2)))
    b = random_symbol(rng, int(rng.integers(-1, 2)))
    assert abs(complex(wodzicki_residue(sym_commutator(a, b, 6)))) <= 1e-10


def test_finite_part_of_identity_and_D():
    one = zeta_finite_part(constant_symbol(1.0))
    assert abs(complex(one.finite_part)) <= 1e-12 and abs(complex(one.residue)) == 0
    D = zeta_finite_part(DSpec().symbol)
    assert abs(complex(D.finite_part) - 5 / 6) <= 1e-12 and abs(complex(D.residue)) == 0


def test_finite_part_of_trace_class_is_mode_sum():
    # |n|^-2 with zero mode 1: 1 + 2 zeta(2)
    r = zeta_finite_part(DSpec().power(-2))
    assert abs(complex(r.finite_part) - (1 + math.pi ** 2 / 3)) <= 1e-12
    assert complex(r.residue) == 0


def test_finite_part_with_corrections_adds_table():
    t = TrigPoly.constant(0.25, 1)
    a = symbol(-2, [(1.0, 1.0)], zero_mode=1.0, correction={3: t, -5: t})
    r = zeta_finite_part(a)
    assert abs(complex(r.finite_part) - (1 + math.pi ** 2 / 3 + 0.5)) <= 1e-12


def test_breakdown_record_lists_degrees():
    rec = zeta_finite_part(DSpec().symbol).to_record()
    assert rec["breakdown"] and all("degree" in b for b in rec["breakdown"])


def test_radul_pairing_values():
    E1, ONE = TrigPoly.monomial((1,)), TrigPoly.identity(1)
    one = constant_symbol(1.0)
    assert abs(radul_pairing(one, one)) < 1e-15
    for wp, expect in ((1, 1), (2, 2)):
        q = quantize_symbol(TrigPoly.monomial((wp,)), ONE)
        assert abs(radul_pairing(parametrix(q, 4), q) - expect) < 1e-10


def test_trace_defect_x_independent_is_zero():
    a = DSpec().symbol
    b = DSpec().power(-1)
    lhs, rhs = trace_defect_identity(a, b)
    assert abs(complex(lhs)) < 1e-14 and abs(complex(rhs)) < 1e-14


def test_trace_defect_shift_pair():
    a = multiplication_symbol(TrigPoly.monomial((1,)))
    b = multiplication_symbol(TrigPoly.monomial((-1,)))
    lhs, rhs = trace_defect_identity(a, b)
    assert abs(complex(lhs) - complex(rhs)) <= 1e-8


def test_trace_defect_shift_against_parametrix():
    q = quantize_symbol(TrigPoly.monomial((1,)), TrigPoly.identity(1))
    lhs, rhs = trace_defect_identity(q, parametrix(q, 4))
    assert abs(complex(lhs) - complex(rhs)) <= 1e-8
    assert abs(complex(lhs)) > 0.5  # a nonzero defect, so the comparison is not vacuous


def test_trace_defect_random_trials(rng):
    dev = 0.0
    for _ in range(10):
        a = random_symbol(rng, int(rng.integers(-1, 2)), corrections=True)
        b = random_symbol(rng, int(rng.integers(-1, 2)), corrections=True)
        lhs, rhs = trace_defect_identity(a, b)
        dev = max(dev, abs(complex(lhs) - complex(rhs)))
    assert dev <= 1e-8

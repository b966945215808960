import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fiberindex.connecting import (
    boundary_cocycle_eval,
    calibrate,
    chern_simons_pairing,
    fedosov_inverse,
    index_from_pairing,
    pairing_terms,
    quantize,
    quantize_symbol,
)
from fiberindex.constants import KAPPA
from fiberindex.fedosov import VElement, fedosov_product
from fiberindex.forms import ConnectionSpec, Cycle
from fiberindex.sampling import random_connection, random_trigpoly
from fiberindex.symbols import constant_symbol, multiplication_symbol, parametrix
from fiberindex.trigpoly import TrigPoly
from fiberindex.zeta import radul_pairing

POINT = Cycle.at()
FLAT0 = ConnectionSpec.flat(0)
ONE1 = TrigPoly.identity(1)


def _shift(wp=1, wm=0, style="plus"):
    return quantize_symbol(TrigPoly.monomial((wp,)), TrigPoly.monomial((wm,)), style)


def test_quantize_identity():
    e = quantize(ONE1, ONE1, FLAT0)
    s = e.w11.coefficient(())
    assert s.components[0][0].allclose(ONE1) and s.zero_mode.allclose(ONE1)
    assert max(e.w12.max_abs(), e.w21.max_abs(), e.w22.max_abs()) == 0


def test_quantize_section_property(rng):
    plus, minus = random_trigpoly(rng, 3), random_trigpoly(rng, 3)
    s = quantize(plus, minus, ConnectionSpec.flat(2)).w11.coefficient(())
    assert s.components[0][0].allclose(plus) and s.components[0][1].allclose(minus)


def test_quantization_defect_lands_in_ideal(rng):
    conn = random_connection(rng, 2)
    a = (random_trigpoly(rng, 3), random_trigpoly(rng, 3))
    b = (random_trigpoly(rng, 3), random_trigpoly(rng, 3))
    ab = quantize(a[0].matmul(b[0]), a[1].matmul(b[1]), conn)
    x = ab - fedosov_product(quantize(*a, conn), quantize(*b, conn), 4)
    lead = x.w11.coefficient(()).components[0]
    assert max(lead[0].max_abs(), lead[1].max_abs()) < 1e-13  # order <= -1 in degree 0
    assert x.part(1).max_abs() < 1e-13
    assert x.part(2).max_abs() > 1e-3  # the d sigma d sigma term is really there


def test_fedosov_inverse_of_one():
    Q, Qi, _ = fedosov_inverse(constant_symbol(1.0), FLAT0)
    assert (Qi - VElement.one(FLAT0)).max_abs() < 1e-15


def test_fedosov_inverse_point_shift():
    Q, Qi, _ = fedosov_inverse(_shift(), FLAT0)
    one = VElement.one(FLAT0)
    assert (fedosov_product(Q, Qi, 4) - one).max_abs() < 1e-10
    assert (fedosov_product(Qi, Q, 4) - one).max_abs() < 1e-10


def test_fedosov_inverse_torus_with_connection(rng):
    conn = random_connection(rng, 2)
    plus = TrigPoly.from_dict({(0, 0, 1): 1.0, (1, 0, 1): 0.2, (0, 1, 0): 0.1}, 3)
    q = quantize_symbol(plus, TrigPoly.identity(3))
    Q, Qi, _ = fedosov_inverse(q, conn, 4)
    assert (fedosov_product(Q, Qi, 4) - VElement.one(conn)).max_abs() < 1e-10
    # a single Neumann term is not enough on a 2-dimensional base
    Q, Qi1, _ = fedosov_inverse(q, conn, 4, terms=1)
    assert (fedosov_product(Q, Qi1, 4) - VElement.one(conn)).max_abs() > 1e-3


def test_boundary_of_element_with_itself(rng):
    conn = random_connection(rng, 2)
    a = quantize(random_trigpoly(rng, 3), random_trigpoly(rng, 3), conn)
    assert abs(boundary_cocycle_eval((a, a), conn, Cycle.torus2())) < 1e-12


@pytest.mark.parametrize("wp,wm", [(1, 0), (0, 1), (2, -1)])
def test_point_paths_agree_with_radul(wp, wm):
    q = _shift(wp, wm)
    t = pairing_terms(q, FLAT0, POINT, 4)
    rad = radul_pairing(parametrix(q, 4), q)
    for key in ("chern_simons", "radul", "boundary"):
        assert abs(t[key] - (wp - wm)) < 1e-10
    assert abs(rad - (wp - wm)) < 1e-10


@settings(max_examples=8)
@given(st.integers(0, 10_000), st.sampled_from([2, 4]))
def test_sigma_word_paths_agree(seed, length):
    rng = np.random.default_rng(seed)
    conn = random_connection(rng, 2)
    # s0 ds1 ... d s_last needs an even number of d's before the last letter
    sig = [quantize_symbol(random_trigpoly(rng, 3), random_trigpoly(rng, 3)) for _ in range(length)]
    C = Cycle.torus2()
    f = boundary_cocycle_eval(sig, conn, C, head=True, path="formula")
    d = boundary_cocycle_eval(sig, conn, C, head=True, path="direct")
    assert abs(f - d) <= 1e-8 * max(1.0, abs(d))


def test_chern_simons_trivial_and_shift():
    assert abs(chern_simons_pairing(constant_symbol(1.0), FLAT0, POINT)) == 0
    assert abs(chern_simons_pairing(_shift(), FLAT0, POINT) - 1) < 1e-12


def test_multiplication_symbol_pairs_to_zero():
    f = TrigPoly.from_dict({(0,): 2.0, (1,): 0.5}, 1)  # invertible, winding 0
    assert abs(chern_simons_pairing(multiplication_symbol(f), FLAT0, POINT)) < 1e-12
    g = TrigPoly.monomial((1,))  # same winding on both branches: still a multiplication
    assert abs(chern_simons_pairing(multiplication_symbol(g), FLAT0, POINT)) < 1e-12


@pytest.mark.parametrize("wp,wm", [(1, 0), (-2, 1)])
def test_quantization_choice_does_not_matter(wp, wm):
    a = chern_simons_pairing(_shift(wp, wm, "plus"), FLAT0, POINT)
    b = chern_simons_pairing(_shift(wp, wm, "mean"), FLAT0, POINT)
    c = chern_simons_pairing(_shift(wp, wm, {"zero_mode": TrigPoly.constant(3.0, 1)}), FLAT0, POINT)
    assert abs(a - b) < 1e-12 and abs(a - c) < 1e-12


def test_index_from_pairing_normalization():
    assert abs(index_from_pairing(-2j * math.pi, 2) - 1) < 1e-15
    assert index_from_pairing(3.0, 0) == 3.0


def test_calibration_is_frozen_constant():
    assert abs(calibrate() - KAPPA) < 1e-9

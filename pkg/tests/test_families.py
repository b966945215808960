import numpy as np
import pytest

from fiberindex.families import FAMILIES, clutching_symbol, family, projector_family, qwz_vector
from fiberindex.oracle import chern_number, winding_number
from fiberindex.trigpoly import TrigPoly


@pytest.fixture(scope="module")
def fam_a():
    return family("A")


def test_projector_fit_is_idempotent_and_hermitian(fam_a):
    P = fam_a.projector.on_grid(32)
    assert np.abs(P @ P - P).max() < 1e-4
    assert np.abs(P - np.conj(np.swapaxes(P, -1, -2))).max() < 1e-10


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_fitted_projector_bundle_is_nontrivial(name):
    P = family(name).projector.on_grid(32)
    # the fitted projector carries the degree of the normalized QWZ field
    assert abs(chern_number(P)) == FAMILIES[name][1]


def test_trivial_mass_gives_trivial_bundle():
    P = projector_family(3.0).on_grid(24)
    assert chern_number(P) == 0


def test_qwz_field_never_vanishes():
    h = qwz_vector(1.0, 2)
    b = np.linspace(0, 2 * np.pi, 65)
    B1, B2 = np.meshgrid(b, b, indexing="ij")
    assert np.linalg.norm(h(B1, B2), axis=-1).min() > 0.5


def test_clutching_symbol_branches(fam_a):
    q = fam_a.symbol
    plus, minus = q.components[0]
    assert minus.allclose(TrigPoly.identity(3, 2))
    # at a fixed base point the + branch winds once on the image of P
    t = plus.partial_eval([0, 1], [0.4, 1.1])
    assert winding_number(t) == 1


def test_clutching_of_zero_projector_is_identity():
    q = clutching_symbol(TrigPoly.zeros(2, 2))
    assert q.components[0][0].allclose(TrigPoly.identity(3, 2))


def test_unknown_family():
    with pytest.raises(KeyError):
        family("C")

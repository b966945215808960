import numpy as np
import pytest

from fiberindex import checks
from fiberindex.checks import THEOREM_TAG, Row
from fiberindex.sampling import random_connection, random_symbol, random_trigpoly


def test_row_compare_pass_and_fail():
    r = Row.compare("x", 1.0, 1.0 + 1e-4, 1e-3)
    assert r.passed and r.delta == pytest.approx(1e-4)
    assert not Row.compare("x", 1.0, 1.1, 1e-3).passed


def test_row_compare_conditions_recorded():
    r = Row.compare("x", 1.0, 1.0, 1e-3, extra_ok=False)
    assert not r.passed and r.detail["conditions_ok"] is False


def test_row_compare_complex_delta():
    r = Row.compare("x", 1 + 1j, 1.0, 2.0)
    assert r.formula == 1.0 and r.delta == pytest.approx(1.0)


def test_row_deviation():
    assert Row.deviation("d", 1e-12, 1e-10).passed
    assert not Row.deviation("d", 1e-9, 1e-10).passed
    assert Row.deviation("d", 0.0, 0.0).passed


def test_sampling_is_reproducible():
    a = random_symbol(np.random.default_rng(5), corrections=True)
    b = random_symbol(np.random.default_rng(5), corrections=True)
    assert a.correction.keys() == b.correction.keys()
    assert all(x.allclose(y) for (x, _), (y, _) in zip(a.components, b.components))
    t1 = random_trigpoly(np.random.default_rng(1), 2, 2)
    t2 = random_trigpoly(np.random.default_rng(1), 2, 2)
    assert t1.allclose(t2) and t1.k == 2


def test_random_connection_shape(rng):
    conn = random_connection(rng, 2)
    assert conn.base_rank == 2


@pytest.mark.parametrize("suite", [checks.zeta_suite, checks.fedosov_suite, checks.boundary_formula_suite,
                                   checks.xcomplex_suite, checks.finite_model_suite, checks.similarity_suite])
def test_zero_trials_give_no_rows(rng, suite):
    assert suite(rng, 0) == []


def test_pair_row_shift():
    r = checks.pair_row(1, 0, N=64, N_check=96)
    assert r.passed and THEOREM_TAG in r.tags
    assert r.detail["rounded"] == 1 and r.delta <= 1e-3


def test_pair_row_custom_symbol():
    from fiberindex.trigpoly import TrigPoly

    plus = TrigPoly.from_dict({(1,): 1.0, (0,): 0.2}, 1)
    r = checks.pair_row(0, 0, N=64, N_check=96, plus=plus, minus=TrigPoly.identity(1), name="custom")
    assert r.name == "custom" and r.passed and r.detail["rounded"] == 1


def test_zeta_suite_small(rng):
    rec = []
    rows = checks.zeta_suite(rng, 3, record=rec)
    assert [r.name for r in rows] == ["zeta/Pf(1)", "zeta/Pf(D)", "zeta/trace-defect",
                                      "residue/traciality", "residue/smoothing-blind"]
    assert all(r.passed for r in rows)
    assert len(rec) == 3 and [t[0] for t in rec] == [0, 1, 2]


def test_fedosov_suites_small(rng):
    rows = checks.fedosov_suite(rng, 3) + checks.boundary_formula_suite(rng, 4)
    assert len(rows) == 5 and all(r.passed for r in rows)


def test_xcomplex_and_finite_small(rng):
    rows = checks.xcomplex_suite(rng, 4) + checks.finite_model_suite(rng, 3)
    assert all(r.passed for r in rows), [(r.name, r.delta) for r in rows if not r.passed]
    short = [r for r in rows if r.name == "finite/short-truncation-detected"][0]
    assert short.detail["rule"] == "exceeds" and short.delta > short.tolerance


def test_similarity_small(rng):
    rows = checks.similarity_suite(rng, 2, N=64)
    assert [r.name for r in rows] == ["oracle/similarity", "oracle/additivity"]
    assert all(r.passed for r in rows)


def test_tol_scale_tightens(rng):
    rows = checks.zeta_suite(rng, 2, tol_scale=1e-30)
    assert rows[2].tolerance == pytest.approx(1e-38)

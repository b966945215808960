"""Acceptance criteria C1 to C11, each printing one PASS/FAIL line."""

import time

import numpy as np
import pytest

from fiberindex import checks
from fiberindex.checks import THEOREM_TAG
from fiberindex.constants import KAPPA

SEED = 20240917


def _report(capsys, label, ok, info):
    with capsys.disabled():
        print(f"\n[{label}] {'PASS' if ok else 'FAIL'}: {info}")


def _by_name(rows):
    return {r.name: r for r in rows}


@pytest.fixture(scope="module")
def corpus():
    t0 = time.perf_counter()
    rows = checks.shift_corpus(N=128, N_check=256, J=4)
    return rows, time.perf_counter() - t0


@pytest.fixture(scope="module")
def zeta_rows():
    return _by_name(checks.zeta_suite(np.random.default_rng(SEED), 50, residue_trials=100))


@pytest.fixture(scope="module")
def families():
    t0 = time.perf_counter()
    rows = checks.family_rows(("A", "B"), grids=(24, 48), N=64, J=4)
    return rows, time.perf_counter() - t0


def test_c1_radul_corpus(corpus, capsys):
    rows, secs = corpus
    worst = max(r.delta for r in rows)
    consistent = all(r.detail["rounded"] == round(r.formula) == r.detail["windings"][0] - r.detail["windings"][1]
                     for r in rows)
    ok = len(rows) == 25 and all(r.passed for r in rows) and worst <= 1e-3 and consistent and secs <= 10
    _report(capsys, "C1", ok, f"25 symbols, max |delta| {worst:.2e} <= 1e-3, N 128 vs 256 consistent, {secs:.1f} s")
    assert ok


def test_c2_trace_defect(zeta_rows, capsys):
    r = zeta_rows["zeta/trace-defect"]
    ok = r.detail["trials"] == 50 and r.delta <= 1e-8
    _report(capsys, "C2", ok, f"50 pairs, max |lhs - rhs| {r.delta:.2e} <= 1e-8")
    assert ok


def test_c3_residue(zeta_rows, capsys):
    t, s = zeta_rows["residue/traciality"], zeta_rows["residue/smoothing-blind"]
    ok = t.detail["trials"] == 100 and t.delta <= 1e-10 and s.delta == 0.0
    _report(capsys, "C3", ok, f"100 pairs, max |res[a,b]| {t.delta:.2e} <= 1e-10, correction-only residue {s.delta}")
    assert ok


def test_c4_zeta_regressions(zeta_rows, capsys):
    one, D = zeta_rows["zeta/Pf(1)"], zeta_rows["zeta/Pf(D)"]
    em_ok = abs(one.detail["euler_maclaurin"]) <= 1e-9 and abs(D.detail["euler_maclaurin"] - 5 / 6) <= 1e-9
    ok = one.oracle == 0.0 and D.oracle == 5 / 6 and one.delta <= 1e-12 and D.delta <= 1e-12 and em_ok
    _report(capsys, "C4", ok, f"Pf(1) delta {one.delta:.1e}, Pf(D) - 5/6 delta {D.delta:.1e}, "
                              f"Euler-Maclaurin within 1e-9: {em_ok}")
    assert ok


def test_c5_fedosov_laws(capsys):
    rows = checks.fedosov_suite(np.random.default_rng(SEED), 100)
    ok = len(rows) == 4 and all(r.passed and r.delta <= 1e-9 and r.detail["trials"] == 100 for r in rows)
    _report(capsys, "C5", ok, ", ".join(f"{r.name.split('/')[1]} {r.delta:.1e}" for r in rows) + " (<= 1e-9)")
    assert ok


def test_c6_boundary_formulas(capsys):
    (r,) = checks.boundary_formula_suite(np.random.default_rng(SEED), 50)
    ok = r.detail["trials"] == 50 and r.delta <= 1e-8
    _report(capsys, "C6", ok, f"50 sigma-word chains over T^2, residue formulas vs direct {r.delta:.1e} <= 1e-8")
    assert ok


def test_c7_transgression(capsys):
    rows = _by_name(checks.xcomplex_suite(np.random.default_rng(SEED), 100))
    names = ("xcomplex/transgression-n1", "xcomplex/transgression-n3", "xcomplex/transgression-paired")
    ok = all(rows[n].delta <= 1e-10 and rows[n].detail["trials"] == 100 for n in names)
    ok = ok and rows["xcomplex/boundary-squared"].passed
    _report(capsys, "C7", ok, ", ".join(f"{n.split('-', 1)[1]} {rows[n].delta:.1e}" for n in names) + " (<= 1e-10)")
    assert ok


def test_c8_finite_models(capsys):
    rows = _by_name(checks.finite_model_suite(np.random.default_rng(SEED), 20))
    names = ("finite/renormalization-independence", "finite/splitting-independence", "finite/split-vanishing")
    ok = all(rows[n].delta <= 1e-10 for n in names) and rows["finite/short-truncation-detected"].passed
    _report(capsys, "C8", ok, ", ".join(f"{n.split('/')[1]} {rows[n].delta:.1e}" for n in names) + " (<= 1e-10)")
    assert ok


def test_c9_oracle_well_defined(capsys):
    rows = _by_name(checks.similarity_suite(np.random.default_rng(SEED), 20))
    s, a = rows["oracle/similarity"], rows["oracle/additivity"]
    ok = s.detail["trials"] == 20 and s.delta <= 1e-6 and a.delta <= 1e-6
    _report(capsys, "C9", ok, f"20 similarities {s.delta:.1e}, block sums {a.delta:.1e} (<= 1e-6)")
    assert ok


def test_c10_family_index(families, capsys):
    rows, secs = families
    by = _by_name(rows)
    A, B = by["torus2/family-A"], by["torus2/family-B"]
    grids_agree = all(r.detail["chern"]["24"] == r.detail["chern"]["48"] for r in rows)
    nonzero = all(r.oracle != 0 for r in rows)
    ok = (all(r.passed and r.delta <= 1e-3 for r in rows) and grids_agree and nonzero
          and A.oracle != B.oracle and secs <= 600)
    _report(capsys, "C10", ok, f"kappa {KAPPA}: A {A.formula:.6f} vs {A.oracle:g}, B {B.formula:.6f} vs {B.oracle:g}, "
                               f"grids 24/48 agree {grids_agree}, {secs:.0f} s")
    assert ok


def test_c11_theorem_rows(corpus, families, capsys):
    rows = corpus[0] + families[0]
    tagged = [r for r in rows if THEOREM_TAG in r.tags]
    ok = len(tagged) == 27 and all(r.passed for r in tagged)
    _report(capsys, "C11", ok, f"{len(tagged)} rows tagged {THEOREM_TAG!r} (25 point-cycle, 2 on T^2), all pass {ok}")
    assert ok

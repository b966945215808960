"""Check suites: formula-vs-oracle rows and property sweeps.

Every suite returns a list of :class:`Row`; the CLI and the acceptance tests
both consume them.  Rows compare a computed value (``formula``) against a
reference (``oracle``) with an absolute tolerance; property sweeps report
the largest deviation against a zero oracle.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .constants import KAPPA, tolerance
from .trigpoly import TrigPoly, coefficient_floor

log = logging.getLogger(__name__)

__all__ = [
    "Row",
    "THEOREM_TAG",
    "shift_corpus",
    "pair_row",
    "family_rows",
    "zeta_suite",
    "fedosov_suite",
    "boundary_formula_suite",
    "xcomplex_suite",
    "finite_model_suite",
    "similarity_suite",
]

THEOREM_TAG = "theorem-check"


@dataclass
class Row:
    name: str
    formula: float
    oracle: float
    delta: float
    tolerance: float
    passed: bool
    tags: tuple = ()
    detail: dict = field(default_factory=dict)

    @classmethod
    def compare(cls, name, formula, oracle, tol, extra_ok: bool = True, tags=(), **detail) -> "Row":
        f, o = float(np.real(formula)), float(np.real(oracle))
        delta = abs(complex(formula) - complex(oracle))
        if not extra_ok:
            detail["conditions_ok"] = False
        return cls(name, f, o, float(delta), float(tol), bool(delta <= tol and extra_ok), tuple(tags), detail)

    @classmethod
    def deviation(cls, name, dev, tol, tags=(), **detail) -> "Row":
        dev = float(dev)
        return cls(name, dev, 0.0, dev, float(tol), bool(dev <= tol), tuple(tags), detail)


def _c(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


# -- point cycle: Radul corpus -------------------------------------------------------

def pair_row(wp: int, wm: int, *, N: int = 128, N_check: int | None = 256, J: int = 4,
             kappa: float = KAPPA, tol_scale: float = 1.0, plus: TrigPoly | None = None,
             minus: TrigPoly | None = None, name: str | None = None) -> Row:
    """Formula (Chern-Simons and Radul paths) against the idempotent-trace oracle."""
    from .connecting import pairing_terms, quantize_symbol
    from .forms import ConnectionSpec, Cycle
    from .oracle import index_idempotent_pairing
    from .symbols import parametrix

    plus = TrigPoly.monomial((wp,)) if plus is None else plus
    minus = TrigPoly.monomial((wm,)) if minus is None else minus
    q = quantize_symbol(plus, minus)
    p = parametrix(q, J)
    terms = pairing_terms(q, ConnectionSpec.flat(0), Cycle.at(), J, boundary=False, kappa=kappa, p=p)
    cs = kappa * terms["chern_simons"]
    rad = kappa * terms["radul"]
    o1 = index_idempotent_pairing(q, N, J, p=p)
    ok = abs(cs - rad) <= tolerance("identity", tol_scale) and o1.rounded is not None
    detail = {"chern_simons": _c(cs), "radul": _c(rad), "e_trace": _c(o1.e_trace), "rounded": o1.rounded,
              "N": N, "J": J, "windings": [wp, wm]}
    if N_check:
        o2 = index_idempotent_pairing(q, N_check, J, p=p)
        detail["e_trace_check"] = _c(o2.e_trace)
        detail["N_check"] = N_check
        ok = ok and o2.rounded == o1.rounded and round(cs.real) == o1.rounded
    return Row.compare(name or f"point/shift({wp},{wm})", cs, o1.e_trace, tolerance("oracle_delta", tol_scale),
                       ok, tags=(THEOREM_TAG, "radul-corpus"), **detail)


def shift_corpus(*, N: int = 128, N_check: int = 256, J: int = 4, windings=range(-2, 3),
                 tol_scale: float = 1.0) -> list:
    """The 25 scalar symbols with branch windings (w+, w-) in {-2..2}^2."""
    return [pair_row(wp, wm, N=N, N_check=N_check, J=J, tol_scale=tol_scale)
            for wp in windings for wm in windings]


# -- T^2 families ------------------------------------------------------------------

def family_rows(names=("A", "B"), *, grids=(24, 48), N: int = 64, J: int = 4, kappa: float = KAPPA,
                tol_scale: float = 1.0, fit_tol: float = 1e-6) -> list:
    """Chern-Simons pairing over T^2 against the lattice Chern number of the index bundle."""
    from .connecting import chern_simons_pairing, dim2_formula, index_from_pairing
    from .families import family
    from .forms import ConnectionSpec, Cycle
    from .oracle import family_chern_number
    from .symbols import parametrix

    rows = []
    conn = ConnectionSpec.flat(2, 2)
    C = Cycle.torus2()
    for name in names:
        t0 = time.time()
        fam = family(name, tol=fit_tol)
        q = fam.symbol
        with coefficient_floor(1e-13):
            p = parametrix(q, J, tol=1e-9)
            cs = chern_simons_pairing(q, conn, C, J, p)
            d2 = dim2_formula(q, p, conn, C, J)
        t_formula = time.time() - t0
        value = index_from_pairing(cs, 2, kappa)
        chern = {}
        for g in grids:
            chern[g] = family_chern_number(q, N, g, J, p=p)
        first = chern[grids[0]]
        consistent = all(c == first for c in chern.values())
        ok = consistent and abs(cs - d2) <= tolerance("identity", tol_scale) * max(1.0, abs(cs))
        rows.append(Row.compare(
            f"torus2/family-{name}", value, first, tolerance("oracle_delta", tol_scale), ok,
            tags=(THEOREM_TAG, "family"),
            pairing=_c(cs), dim2=_c(d2), chern={str(g): int(c) for g, c in chern.items()},
            mass=fam.mass, wrap=fam.wrap, N=N, J=J, seconds=round(time.time() - t0, 1),
            formula_seconds=round(t_formula, 1)))
    return rows


# -- zeta regressions ------------------------------------------------------------------

def zeta_suite(rng: np.random.Generator, trials: int = 50, *, tol_scale: float = 1.0,
               residue_trials: int | None = None, record: list | None = None) -> list:
    """Zeta special values, the trace-defect identity and residue laws.

    ``record`` (if given) receives one ``(trial, lhs, rhs, delta)`` tuple per
    trace-defect trial.
    """
    from .sampling import random_symbol
    from .symbols import DSpec, constant_symbol, sym_commutator
    from .zeta import euler_maclaurin_zeta, trace_defect_identity, wodzicki_residue, zeta_finite_part

    if trials <= 0:
        return []
    rows = []
    tz = tolerance("zeta_special", tol_scale)
    one = zeta_finite_part(constant_symbol(1.0))
    D = zeta_finite_part(DSpec().symbol)
    # sum_n max(|n|,1)^-z = 1 + 2 zeta(z), sum_n max(|n|,1)^(1-z) = 1 + 2 zeta(z - 1)
    em_one = 1 + 2 * euler_maclaurin_zeta(0.0)
    em_D = 1 + 2 * euler_maclaurin_zeta(-1.0)
    rows.append(Row.compare("zeta/Pf(1)", one.finite_part, 0.0, tz, abs(em_one) <= 1e-9,
                            euler_maclaurin=em_one, breakdown=one.to_record()))
    rows.append(Row.compare("zeta/Pf(D)", D.finite_part, 5.0 / 6.0, tz, abs(em_D - 5 / 6) <= 1e-9,
                            euler_maclaurin=em_D, breakdown=D.to_record()))
    dev = 0.0
    for i in range(trials):
        a = random_symbol(rng, int(rng.integers(-1, 2)), corrections=True)
        b = random_symbol(rng, int(rng.integers(-1, 2)), corrections=True)
        lhs, rhs = trace_defect_identity(a, b)
        d = abs(complex(lhs) - complex(rhs))
        dev = max(dev, d)
        if record is not None:
            record.append((i, complex(lhs), complex(rhs), d))
    rows.append(Row.deviation("zeta/trace-defect", dev, tolerance("identity", tol_scale), trials=trials))
    dev = 0.0
    smooth = 0.0
    rt = trials if residue_trials is None else residue_trials
    for _ in range(rt):
        a = random_symbol(rng, int(rng.integers(-2, 2)), corrections=True)
        b = random_symbol(rng, int(rng.integers(-2, 2)))
        dev = max(dev, abs(complex(wodzicki_residue(sym_commutator(a, b, 6)))))
        c = random_symbol(rng, -1, corrections=True)
        corr_only = type(c)(c.order, [(t.scale(0.0), u.scale(0.0)) for t, u in c.components], None,
                            c.zero_mode, c.correction)
        smooth = max(smooth, abs(complex(wodzicki_residue(corr_only))))
    rows.append(Row.deviation("residue/traciality", dev, tolerance("exact_cancellation", tol_scale), trials=rt))
    rows.append(Row.deviation("residue/smoothing-blind", smooth, 0.0, trials=rt))
    return rows


# -- Fedosov laws ----------------------------------------------------------------------

def _fedosov_configs(rng):
    from .forms import ConnectionSpec, Cycle
    from .sampling import random_connection

    return [
        (random_connection(rng, 2), Cycle.torus2()),
        (random_connection(rng, 2), Cycle.at(0.3, 1.2)),
        (ConnectionSpec.flat(2), Cycle.torus2()),
    ]


def fedosov_suite(rng: np.random.Generator, trials: int = 100, *, tol_scale: float = 1.0, J: int = 4) -> list:
    """Associativity, d^2 = 0, and tau vanishing on Fedosov commutators and d-exact elements."""
    from .fedosov import fedosov_product, trace_tau, v_differential
    from .sampling import random_even_velement, random_velement

    tol = tolerance("fedosov", tol_scale)
    if trials <= 0:
        return []
    configs = _fedosov_configs(rng)
    assoc = dsq = comm = exact = 0.0
    for i in range(trials):
        conn, C = configs[i % len(configs)]
        a = random_even_velement(rng, conn, unit=True, depth=0)
        b = random_even_velement(rng, conn, depth=0)
        c = random_even_velement(rng, conn, depth=0)
        lhs = fedosov_product(fedosov_product(a, b, 2), c, 2)
        rhs = fedosov_product(a, fedosov_product(b, c, 2), 2)
        assoc = max(assoc, (lhs - rhs).max_abs())
        x = random_velement(rng, conn, depth=0)
        dsq = max(dsq, v_differential(v_differential(x, J), J).max_abs())
        a = random_even_velement(rng, conn, order=-1, depth=0)
        b = random_even_velement(rng, conn, order=-1, depth=0)
        comm = max(comm, abs(trace_tau(fedosov_product(a, b, J) - fedosov_product(b, a, J), C, J)))
        y = random_velement(rng, conn, order=-2, depth=0)
        exact = max(exact, abs(trace_tau(v_differential(y, J), C, J)))
    return [
        Row.deviation("fedosov/associativity", assoc, tol, trials=trials),
        Row.deviation("fedosov/d-squared", dsq, tol, trials=trials),
        Row.deviation("fedosov/trace-commutator", comm, tol, trials=trials),
        Row.deviation("fedosov/trace-exact", exact, tol, trials=trials),
    ]


def boundary_formula_suite(rng: np.random.Generator, trials: int = 50, *, tol_scale: float = 1.0, J: int = 4) -> list:
    """Residue formulas for the boundary cocycle against direct Fedosov-commutator evaluation."""
    from .connecting import boundary_cocycle_eval, quantize_symbol
    from .forms import Cycle
    from .sampling import random_connection, random_trigpoly

    if trials <= 0:
        return []
    C = Cycle.torus2()
    dev = 0.0
    conn = random_connection(rng, 2)
    shapes = [(True, 2), (True, 4), (False, 3), (False, 5)]
    for i in range(trials):
        if i % 5 == 0:
            conn = random_connection(rng, 2)
        head, L = shapes[i % len(shapes)]
        sig = [quantize_symbol(random_trigpoly(rng, 3), random_trigpoly(rng, 3), "mean") for _ in range(L)]
        a = boundary_cocycle_eval(sig, conn, C, head=head, J=J, path="formula")
        b = boundary_cocycle_eval(sig, conn, C, head=head, J=J, path="direct")
        dev = max(dev, abs(a - b) / max(1.0, abs(b)))
    return [Row.deviation("fedosov/boundary-formulas", dev, tolerance("boundary_formula", tol_scale), trials=trials)]


# -- finite models -----------------------------------------------------------------------

def xcomplex_suite(rng: np.random.Generator, trials: int = 100, *, tol_scale: float = 1.0) -> list:
    """Transgression relation for n = 1, 3 on random 4 x 4 data plus tau-paired checks."""
    from . import xcomplex as xc

    tol = tolerance("transgression", tol_scale)
    if trials <= 0:
        return []
    A = xc.FiniteAlgebra.full_matrix(2)
    X = xc.build_x_complex(A)
    rows = [Row.deviation("xcomplex/boundary-squared",
                          max(np.abs(X.b_bar @ X.nat_d).max(), np.abs(X.nat_d @ X.b_bar).max()), tol)]
    for n in (1, 3):
        dev = scale = 0.0
        for i in range(trials):
            deg = n + i % 4
            f = xc.random_form(rng, deg, 2, unit=bool((i // 4) % 2), scale=0.5)
            lhs, rhs = xc.transgression_sides(n, f, X)
            dev = max(dev, (lhs - rhs).max_abs())
            scale = max(scale, lhs.max_abs())
        rows.append(Row.deviation(f"xcomplex/transgression-n{n}", dev, tol, trials=trials, lhs_scale=scale))
    # tau-paired scalar identity on a nilpotent model
    ext = xc.triangular_model(3, 1)
    B = ext.algebra
    XB = xc.build_x_complex(B)
    smp = xc.super_sampler(B, ext.N)
    tau = (rng.normal(size=B.d) + 1j * rng.normal(size=B.d), rng.normal(size=XB.odd_dim) + 0j)
    dev = 0.0
    for i in range(trials):
        n = 1 if i % 2 == 0 else 3
        f = xc.random_form(rng, n + (i // 2) % 4, B.k, unit=bool(i % 3 == 0), sampler=smp)
        dev = max(dev, xc.transgression_check(n, f, XB, tau=tau))
    rows.append(Row.deviation("xcomplex/transgression-paired", dev, tol, trials=trials))
    return rows


def finite_model_suite(rng: np.random.Generator, trials: int = 20, *, tol_scale: float = 1.0) -> list:
    """Renormalization and splitting independence, split-extension vanishing."""
    from . import xcomplex as xc

    tol = tolerance("finite_model", tol_scale)
    if trials <= 0:
        return []
    comp = split = vanish = 0.0
    sensitivity = 0.0
    for i in range(trials):
        ext = xc.triangular_model(2 + i % 2, 2)
        A = ext.algebra
        k = i % 3
        # (R + N)^m lies in R^(k+1) once m >= (k + 2) p - 1, p the nilpotency of N
        L = (k + 2) * ext.nilpotency
        tau, dom, cm = xc.trace_on_power(ext, k, rng)
        r1, _ = xc.renormalize_extend(tau, dom, A, trace_check=cm, rng=rng)
        r2, _ = xc.renormalize_extend(tau, dom, A, trace_check=cm, rng=rng)
        # S = sigma(gh) - sigma(g) sigma(h) scales with the perturbation; keep ||S|| < 1
        kd = ext.kernel.shape[1]
        lam = 0.1 * ext.kernel @ (rng.normal(size=(kd, 4)) + 1j * rng.normal(size=(kd, 4))) / np.sqrt(kd)
        s0, s1 = ext.splitting(), ext.splitting(lam)
        g = 0.4 * (rng.normal(size=4) + 1j * rng.normal(size=4))
        G = np.eye(2) + g.reshape(2, 2)
        h = (np.linalg.inv(G) - np.eye(2)).reshape(-1)
        v = {(a, b): xc.connecting_cocycle_finite(ext, r, s, g, h, L)
             for a, r in enumerate((r1, r2)) for b, s in enumerate((s0, s1))}
        comp = max(comp, abs(v[0, 1] - v[1, 1]))
        split = max(split, abs(v[0, 0] - v[0, 1]), abs(v[1, 0] - v[1, 1]))
        vanish = max(vanish, abs(v[0, 0]), abs(v[1, 0]))
        # a too-short truncation is visible as dependence on the choices
        short = [xc.connecting_cocycle_finite(ext, r, s1, g, h, 0) for r in (r1, r2)]
        sensitivity = max(sensitivity, abs(short[0] - short[1]),
                          abs(xc.connecting_cocycle_finite(ext, r1, s1, g, h, 0)
                              - xc.connecting_cocycle_finite(ext, r1, s0, g, h, 0)))
    return [
        Row.deviation("finite/renormalization-independence", comp, tol, trials=trials),
        Row.deviation("finite/splitting-independence", split, tol, trials=trials),
        Row.deviation("finite/split-vanishing", vanish, tol, trials=trials),
        Row("finite/short-truncation-detected", sensitivity, 0.0, sensitivity, tol, bool(sensitivity > tol),
            (), {"trials": trials, "rule": "exceeds"}),
    ]


def _diag_monomials(f1: int, f2: int) -> TrigPoly:
    """diag(e^{i f1 x}, e^{i f2 x}) as a 2 x 2 trig poly."""
    table: dict = {}
    for slot, f in enumerate((f1, f2)):
        E = np.zeros((2, 2), dtype=complex)
        E[slot, slot] = 1.0
        table[(f,)] = table.get((f,), 0) + E
    return TrigPoly.from_dict(table, 1, 2)


def similarity_suite(rng: np.random.Generator, trials: int = 20, *, N: int = 128, J: int = 4,
                     tol_scale: float = 1.0) -> list:
    """Oracle e-trace under similarities supported on the traced modes, and under block sums."""
    from .connecting import quantize_symbol
    from .oracle import buffer_width, index_idempotent_pairing
    from .symbols import parametrix

    tol = tolerance("similarity", tol_scale)
    if trials <= 0:
        return []
    rows = []
    q = quantize_symbol(TrigPoly.monomial((2,)), TrigPoly.monomial((-1,)))
    p = parametrix(q, J)
    base = index_idempotent_pairing(q, N, J, p=p).e_trace
    Nb = N + buffer_width(J)
    n = 2 * Nb + 1
    inner = np.r_[Nb - N:Nb + N + 1]
    idx = np.r_[inner, n + inner]
    dev = 0.0
    for _ in range(trials):
        u = np.eye(2 * n, dtype=complex)
        m = len(idx)
        pert = (rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))) / (4 * np.sqrt(m))
        u[np.ix_(idx, idx)] += pert
        val = index_idempotent_pairing(q, N, J, p=p, u=u).e_trace
        dev = max(dev, abs(val - base))
    rows.append(Row.deviation("oracle/similarity", dev, tol, trials=trials, base=_c(base)))
    # block sums: diag(q1, q2) against q1 and q2 separately
    dev = 0.0
    pairs = [((1, 0), (0, 2)), ((-1, 1), (2, 2)), ((2, -2), (1, -1))]
    for (a1, b1), (a2, b2) in pairs:
        t1, t2 = TrigPoly.monomial((a1,)), TrigPoly.monomial((a2,))
        m1, m2 = TrigPoly.monomial((b1,)), TrigPoly.monomial((b2,))
        plus = _diag_monomials(a1, a2)
        minus = _diag_monomials(b1, b2)
        e12 = index_idempotent_pairing(quantize_symbol(plus, minus), N, J).e_trace
        e1 = index_idempotent_pairing(quantize_symbol(t1, m1), N, J).e_trace
        e2 = index_idempotent_pairing(quantize_symbol(t2, m2), N, J).e_trace
        dev = max(dev, abs(e12 - e1 - e2))
    rows.append(Row.deviation("oracle/additivity", dev, tol, pairs=len(pairs)))
    return rows

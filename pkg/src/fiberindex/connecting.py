"""Quantization, Fedosov inverses, the boundary of the renormalized trace and
the Chern-Simons index pairing.

Throughout, an elliptic symbol g gives the unitalized element
``Q = 1 + (sigma(g) - 1_op)`` of the v-extension, where ``1`` is the formal unit
and ``1_op`` the identity operator; the parametrix P is treated the same way.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .constants import CHERN_WEIL, KAPPA
from .fedosov import (
    VElement,
    cycle_factor,
    fedosov_product,
    fiber_integrand,
    trace_tau_R,
    v_differential,
    v_product,
)
from .forms import (
    ConnectionSpec,
    Cycle,
    FormSymbol,
    delta_derivation,
    delta_log_D,
    integrate_over_cycle,
)
from .symbols import (
    PolyhomSymbol,
    constant_symbol,
    log_commutator,
    parametrix,
    sym_sub,
)
from .trigpoly import TrigPoly
from .zeta import wodzicki_residue, zeta_finite_part

__all__ = [
    "quantize_symbol",
    "quantize",
    "unitalize",
    "fedosov_inverse",
    "residue_integral",
    "log_bracket",
    "sigma_word_11",
    "tau_R_boundary",
    "boundary_formula",
    "boundary_cocycle_eval",
    "EpsilonPair",
    "chern_simons_form",
    "chern_simons_pairing",
    "dim2_formula",
    "radul_formula",
    "PairingTerms",
    "pairing_terms",
    "index_from_pairing",
    "calibrate",
]


# -- quantization ---------------------------------------------------------------

def quantize_symbol(plus: TrigPoly, minus: TrigPoly, style: str | dict = "plus") -> PolyhomSymbol:
    """Order-zero operator with leading symbol (plus, minus).

    ``style`` fixes the completion: "plus" uses the + branch at n = 0, "mean"
    the branch average; a mapping ``{"zero_mode": t, "correction": {n: t}}``
    gives explicit data.
    """
    corr = {}
    if style == "plus":
        zm = plus
    elif style == "mean":
        zm = (plus + minus).scale(0.5)
    elif isinstance(style, dict):
        zm = style.get("zero_mode", plus)
        corr = dict(style.get("correction", {}))
    else:
        raise ValueError(f"unknown quantization style {style!r}")
    return PolyhomSymbol(0, [(plus, minus)], None, zm, corr)


def quantize(plus: TrigPoly, minus: TrigPoly, conn: ConnectionSpec, style="plus") -> VElement:
    """Degree-zero element sigma(a) of the v-extension."""
    return VElement.from_symbol(conn, quantize_symbol(plus, minus, style))


def _one_op(conn: ConnectionSpec) -> PolyhomSymbol:
    return constant_symbol(np.eye(conn.k), conn.base_rank + 1, conn.k)


def unitalize(s: PolyhomSymbol, conn: ConnectionSpec) -> VElement:
    """1 + (s - 1_op): the image of an order-zero operator in the unitalization."""
    return VElement(conn, w11=FormSymbol.scalar(sym_sub(s, _one_op(conn)), conn.base_rank), unit=1.0)


def fedosov_inverse(q: PolyhomSymbol, conn: ConnectionSpec, J: int = 4, terms: int | None = None,
                    p: PolyhomSymbol | None = None):
    """Fedosov inverse of Q = 1 + (q - 1_op) as sum_{n <= terms} P (dQ dP)^n.

    Returns (Q, Qinv, P).  ``terms`` defaults to 1 + base_rank // 2, the number
    of powers of dQ dP that survive on the base (dQ dP has total degree 2 and the
    v-extension has total degree at most base_rank + 2).
    """
    if p is None:
        p = parametrix(q, J)
    Q = unitalize(q, conn)
    P = unitalize(p, conn)
    if terms is None:
        terms = 1 + conn.base_rank // 2
    dQdP = v_product(v_differential(Q), v_differential(P))
    out = P
    power = P
    for _ in range(terms):
        power = v_product(power, dQdP)
        out = out + power
    return Q, out, p


# -- residue functional ---------------------------------------------------------

def residue_integral(x: FormSymbol, C: Cycle) -> complex:
    """Integral over C of the fiberwise residue of x."""
    return complex(wodzicki_residue(integrate_over_cycle(x, C)))


def log_bracket(x: FormSymbol, J: int = 4) -> FormSymbol:
    """[ln D, x] coefficientwise (ln D has form degree 0)."""
    return x.map(lambda s: log_commutator(s, max(J, 1)))


def sigma_word_11(sigmas: Sequence[PolyhomSymbol], conn: ConnectionSpec, head: bool = True,
                  J: int | None = None) -> FormSymbol:
    """11-component of s0 ds1 ... dsk (or ds1 ... dsk when head is False).

    Expands every ds_i = delta s_i + v s_i + s_i v; a v to the right of s_i has
    to meet a v to the left of s_{i+1}, giving s_i theta s_{i+1}.
    """
    b, k = conn.base_rank, conn.k
    th = conn.curvature
    forms = [FormSymbol.scalar(s, b) for s in sigmas]
    if head:
        first, rest = forms[0], forms[1:]
    else:
        first, rest = None, forms
    deltas = [delta_derivation(f, conn, J) for f in rest]
    memo: dict = {}

    def tail(i: int) -> FormSymbol | None:
        # 11-part of d s_i ... d s_k, None for the empty product
        if i == len(rest):
            return None
        if i in memo:
            return memo[i]
        nxt = tail(i + 1)
        out = deltas[i] if nxt is None else deltas[i].wedge(nxt, J)
        if i + 1 < len(rest) and th.components:
            pair = rest[i].wedge(th, J).wedge(rest[i + 1], J)
            nn = tail(i + 2)
            out = out + (pair if nn is None else pair.wedge(nn, J))
        memo[i] = out
        return out

    t = tail(0)
    if first is None:
        return t if t is not None else FormSymbol.one(b, k)
    return first if t is None else first.wedge(t, J)


def tau_R_boundary(alpha: VElement, beta: VElement, C: Cycle, J: int | None = None,
                   extra: Callable | None = None) -> complex:
    """tau_R of the Fedosov commutator alpha (.) beta - beta (.) alpha.

    ``extra`` is an optional additional linear functional on fiber symbols
    (a different renormalization) applied to the same integrand.
    """
    comm = fedosov_product(alpha, beta, J, check_parity=False) - fedosov_product(beta, alpha, J, check_parity=False)
    val = trace_tau_R(comm, C, J)
    if extra is not None:
        val += cycle_factor(C) * extra(fiber_integrand(comm, C, J))
    return val


def _word_element(sigmas, conn, head: bool, J=None) -> VElement:
    els = [VElement.from_symbol(conn, s) for s in sigmas]
    if head:
        out, rest = els[0], els[1:]
    else:
        out, rest = None, els
    for e in rest:
        de = v_differential(e, J)
        out = de if out is None else v_product(out, de, J)
    return out


def boundary_formula(sigmas: Sequence[PolyhomSymbol], conn: ConnectionSpec, C: Cycle,
                     head: bool = True, J: int = 4) -> complex:
    """Residue formulas for tau_R boundary on s0 ds1...ds2n d(s2n+1) chains."""
    *word, last = sigmas
    nd = len(word) - (1 if head else 0)
    if nd % 2:
        raise ValueError("the chain needs an even number of d's before the last letter")
    n = nd // 2
    lastf = FormSymbol.scalar(last, conn.base_rank)
    w = sigma_word_11(word, conn, head)
    val = math.factorial(n) / math.factorial(2 * n) * residue_integral(w.wedge(log_bracket(lastf, J)), C)
    if head and not conn.is_flat:
        dl = delta_log_D(conn, J)
        w1 = sigma_word_11(list(word) + [last], conn, True)
        w2 = sigma_word_11([last] + list(word), conn, True)
        val += (math.factorial(n + 1) / math.factorial(2 * n + 2)
                * residue_integral((w1 - w2).wedge(dl), C))
    return val


def boundary_cocycle_eval(x, conn: ConnectionSpec, C: Cycle, *, head: bool = True, J: int = 4,
                          path: str = "formula") -> complex:
    """tau_R boundary on a chain.

    ``x`` is either a pair (alpha, beta) of VElements (direct path only) or a
    sequence of order-zero symbols s0, ..., s2n+1 read as s0 ds1 ... ds2n d s2n+1
    (``head=False`` drops s0).  ``path`` selects the residue formulas or the
    direct evaluation of tau_R on the Fedosov commutator.
    """
    if isinstance(x, tuple) and len(x) == 2 and isinstance(x[0], VElement):
        return tau_R_boundary(x[0], x[1], C)
    sigmas = list(x)
    if path == "formula":
        return boundary_formula(sigmas, conn, C, head, J)
    if path == "direct":
        *word, last = sigmas
        alpha = _word_element(word, conn, head)
        beta = VElement.from_symbol(conn, last)
        return tau_R_boundary(alpha, beta, C)
    raise ValueError(f"unknown path {path!r}")


# -- superconnection Chern-Simons form --------------------------------------------

class EpsilonPair:
    """body + eps soul with eps odd and eps^2 = 0; coefficients are t-polynomials.

    ``body`` and ``soul`` map a power of t to a FormSymbol.  The eps is kept on
    the left of the soul.
    """

    def __init__(self, body: dict, soul: dict, base_rank: int, k: int):
        self.body = {p: f for p, f in body.items() if f.components}
        self.soul = {p: f for p, f in soul.items() if f.components}
        self.base_rank = base_rank
        self.k = k

    @classmethod
    def zero(cls, b: int, k: int) -> "EpsilonPair":
        return cls({}, {}, b, k)

    @classmethod
    def one(cls, b: int, k: int) -> "EpsilonPair":
        return cls({0: FormSymbol.one(b, k)}, {}, b, k)

    @staticmethod
    def _add(x: dict, y: dict) -> dict:
        out = dict(x)
        for p, f in y.items():
            out[p] = out[p] + f if p in out else f
        return out

    def __add__(self, other: "EpsilonPair") -> "EpsilonPair":
        return EpsilonPair(self._add(self.body, other.body), self._add(self.soul, other.soul),
                           self.base_rank, self.k)

    def scale(self, lam) -> "EpsilonPair":
        return EpsilonPair({p: f.scale(lam) for p, f in self.body.items()},
                           {p: f.scale(lam) for p, f in self.soul.items()}, self.base_rank, self.k)

    @staticmethod
    def _mul(x: dict, y: dict, J=None) -> dict:
        out: dict = {}
        for p, f in x.items():
            for q, g in y.items():
                h = f.wedge(g, J)
                if h.components:
                    out[p + q] = out[p + q] + h if p + q in out else h
        return out

    def __mul__(self, other: "EpsilonPair") -> "EpsilonPair":
        """(a + eps s)(b + eps r) = ab + eps (s b + g(a) r), g the form grading."""
        body = self._mul(self.body, other.body)
        graded = {p: f.grading() for p, f in self.body.items()}
        soul = self._add(self._mul(self.soul, other.body), self._mul(graded, other.soul))
        return EpsilonPair(body, soul, self.base_rank, self.k)

    def integrate_t(self) -> tuple:
        """Exact integral over t in [0, 1] of body and soul."""
        def integ(d: dict) -> FormSymbol:
            out = FormSymbol.zero(self.base_rank, self.k)
            for p, f in d.items():
                out = out + f.scale(float(Fraction(1, p + 1)))
            return out
        return integ(self.body), integ(self.soul)


def chern_simons_form(q: PolyhomSymbol, p: PolyhomSymbol, conn: ConnectionSpec, J: int = 4) -> FormSymbol:
    """eps-component of int_0^1 (nabla_1 - nabla_0) exp(nabla_t^2) dt.

    nabla_0 = nabla + eps ln D and nabla_1 = P nabla_0 Q, so with X = P dQ and
    Y = P [ln D, Q] one has nabla_1 - nabla_0 = X + eps Y and

        nabla_t^2 = theta + t dX + t^2 X^2
                    + eps (-d ln D + t([ln D, X] - dY) + t^2 (YX - XY)).
    """
    b, k = conn.base_rank, conn.k
    Qf = FormSymbol.scalar(q, b)
    Pf = FormSymbol.scalar(p, b)
    X = Pf.wedge(delta_derivation(Qf, conn))
    Y = Pf.wedge(log_bracket(Qf, J))
    zero = FormSymbol.zero(b, k)
    dX = delta_derivation(X, conn) if X.components else zero
    X2 = X.wedge(X) if X.components else zero
    dl = delta_log_D(conn, J) if not conn.is_flat else zero
    LX = log_bracket(X, J) if X.components else zero
    dY = delta_derivation(Y, conn)
    comm = Y.wedge(X) - X.wedge(Y) if X.components else zero
    curv = EpsilonPair(
        {0: conn.curvature, 1: dX, 2: X2},
        {0: -dl, 1: LX - dY, 2: comm},
        b, k,
    )
    # exp of the curvature: a polynomial since every term has form degree >= 1
    expo = EpsilonPair.one(b, k)
    term = EpsilonPair.one(b, k)
    for n in range(1, b + 2):
        term = (term * curv).scale(1.0 / n)
        if not term.body and not term.soul:
            break
        expo = expo + term
    diff = EpsilonPair({0: X}, {0: Y}, b, k)
    cs = diff * expo
    return cs.integrate_t()[1]


def chern_simons_pairing(q: PolyhomSymbol, conn: ConnectionSpec, C: Cycle, J: int = 4,
                         p: PolyhomSymbol | None = None) -> complex:
    """Residue integral over C of the Chern-Simons form of (nabla_D, P nabla_D Q)."""
    if p is None:
        p = parametrix(q, J)
    return residue_integral(chern_simons_form(q, p, conn, J), C)


def radul_formula(q: PolyhomSymbol, p: PolyhomSymbol, C: Cycle, J: int = 4) -> complex:
    """Residue of P [ln D, Q] at a point of the base."""
    if C.dim != 0:
        raise ValueError("the Radul formula is the point-cycle reduction")
    qs, ps = q.at_base(C.point), p.at_base(C.point)
    from .symbols import sym_compose

    return complex(wodzicki_residue(sym_compose(ps, log_commutator(qs, J))))


def dim2_formula(q: PolyhomSymbol, p: PolyhomSymbol, conn: ConnectionSpec, C: Cycle, J: int = 4) -> complex:
    """1/2 of the residue integral of
    P dQ dP [ln D, Q] + P (dQ d lnD - d lnD dQ) + (theta P + P theta) [ln D, Q]."""
    b, k = conn.base_rank, conn.k
    Qf = FormSymbol.scalar(q, b)
    Pf = FormSymbol.scalar(p, b)
    dQ = delta_derivation(Qf, conn)
    dP = delta_derivation(Pf, conn)
    LQ = log_bracket(Qf, J)
    th = conn.curvature
    total = Pf.wedge(dQ).wedge(dP).wedge(LQ)
    if not conn.is_flat:
        dl = delta_log_D(conn, J)
        total = total + Pf.wedge(dQ.wedge(dl) - dl.wedge(dQ))
        total = total + (th.wedge(Pf) + Pf.wedge(th)).wedge(LQ)
    return 0.5 * residue_integral(total, C)


class PairingTerms(dict):
    """Named values of the index pairing computed along the different paths."""


def pairing_terms(q: PolyhomSymbol, conn: ConnectionSpec, C: Cycle, J: int = 4,
                  boundary: bool = True, kappa: float = KAPPA, p: PolyhomSymbol | None = None) -> PairingTerms:
    """Chern-Simons pairing plus its independent reductions for one symbol."""
    if p is None:
        p = parametrix(q, J)
    out = PairingTerms()
    out["chern_simons"] = chern_simons_pairing(q, conn, C, J, p)
    if C.dim == 0:
        out["radul"] = radul_formula(q, p, C, J)
    else:
        out["dim2"] = dim2_formula(q, p, conn, C, J)
    if boundary:
        Q, Qinv, _ = fedosov_inverse(q, conn, J, p=p)
        out["boundary"] = tau_R_boundary(Qinv, Q, C)
    out["kappa"] = kappa
    return out


def index_from_pairing(value: complex, dim: int, kappa: float = KAPPA) -> complex:
    """K-theory number carried by a pairing over a cycle of dimension 2m.

    Multiplies by kappa and the Chern-Weil factor (i / 2 pi)^m, so the
    T^2 pairing -2 pi i c1 maps to c1.
    """
    m = dim // 2
    return complex(kappa * CHERN_WEIL ** m * value)


def calibrate(J: int = 4, N: int = 128) -> float:
    """Recompute kappa from the shift symbol at a point cycle.

    Returns the ratio of the idempotent-trace oracle to the Chern-Simons
    pairing; the frozen package constant is this value rounded.
    """
    from .oracle import index_idempotent_pairing

    conn = ConnectionSpec.flat(0)
    plus = TrigPoly.monomial((1,))
    minus = TrigPoly.monomial((0,))
    q = quantize_symbol(plus, minus)
    p = parametrix(q, J)
    val = chern_simons_pairing(q, conn, Cycle.at(), J, p)
    oracle = index_idempotent_pairing(q, N, J, p=p).e_trace
    return float((oracle / val).real)

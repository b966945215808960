"""Residues, zeta-regularized traces and the Radul cocycle on fiber symbols.

Traces are taken against the reference operator D (``e_n -> max(|n|, 1) e_n``):

    Tr(Op(a) D^-z) = sum_n tr <e_n, Op(a) e_n> max(|n|, 1)^-z.

For |n| large the diagonal values follow the homogeneous expansion, so the
continuation to z = 0 reduces to Riemann zeta values at the integers ``j - d``.
The divergent degrees (``j - d <= 1``) are handled by their special values and the
remaining convergent part is summed mode by mode plus a Hurwitz tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .constants import EULER_GAMMA
from .symbols import (
    NotExactError,
    PolyhomSymbol,
    WatermarkError,
    log_commutator,
    sym_commutator,
    sym_compose,
)
from .trigpoly import TrigPoly

__all__ = [
    "ZetaResult",
    "zeta_special",
    "hurwitz_tail",
    "wodzicki_residue",
    "zeta_finite_part",
    "mode_trace",
    "radul_pairing",
    "trace_defect_identity",
    "branch_means",
    "euler_maclaurin_zeta",
]


def zeta_special(s: int) -> float:
    """Riemann zeta at an integer, with the finite part (gamma) at the pole s = 1."""
    s = int(s)
    if s == 1:
        return EULER_GAMMA
    if s <= 0:
        # zeta(-k) = -B_{k+1} / (k + 1)
        k = -s
        if k == 0:
            return -0.5
        return float(-special.bernoulli(k + 1)[k + 1] / (k + 1))
    return float(special.zeta(s, 1))


def euler_maclaurin_zeta(s: float, N: int = 12, terms: int = 10) -> float:
    """Riemann zeta continued by Euler-Maclaurin summation (independent of scipy's zeta).

    zeta(s) = sum_{n<N} n^-s + N^(1-s)/(s-1) + N^-s/2
              + sum_k B_2k/(2k)! s(s+1)...(s+2k-2) N^(-s-2k+1),
    valid for every s != 1.
    """
    if s == 1:
        raise ValueError("pole at s = 1")
    B = special.bernoulli(2 * terms)
    total = sum(float(n) ** -s for n in range(1, N))
    total += N ** (1 - s) / (s - 1) + 0.5 * N ** -s
    rising = s
    for k in range(1, terms + 1):
        total += B[2 * k] / math.factorial(2 * k) * rising * N ** (-s - 2 * k + 1)
        rising *= (s + 2 * k - 1) * (s + 2 * k)
    return float(total)


def hurwitz_tail(s: int, q: int) -> float:
    """sum_{n >= q} n^-s for integer s >= 2."""
    return float(special.zeta(s, q))


def _xmean_trace(t: TrigPoly) -> TrigPoly:
    """Matrix trace of the x-average; a k = 1 trig poly in the base variables."""
    return t.slice_freq(t.rank - 1, 0).trace()


def branch_means(a: PolyhomSymbol, j: int):
    """x-averaged traces of the branch pair of component j."""
    p, m = a.component(j)
    return _xmean_trace(p), _xmean_trace(m)


def _scalar(t: TrigPoly):
    if t.rank == 0:
        return complex(t.coeffs[0, 0])
    return t


def wodzicki_residue(a: PolyhomSymbol):
    """(1/2 pi) of the x-integral of tr(c+ + c-) at homogeneous degree -1.

    Returns a complex number for a symbol with no base variables, otherwise a
    trig poly in the base variables.
    """
    j = a.order + 1
    if j < 0:
        return _scalar(TrigPoly.zeros(a.rank - 1, 1))
    if j > a.J and not a.exact:
        raise WatermarkError(
            f"degree -1 component is below the watermark {a.watermark}", achievable=a.watermark
        )
    p, m = branch_means(a, j)
    return _scalar(p + m)


@dataclass
class ZetaResult:
    """Finite part and residue of Tr(Op(a) D^-z) at z = 0."""

    finite_part: object
    residue: object
    convergent_tail: object
    breakdown: list = field(default_factory=list)
    low_modes: object = 0.0
    cutoff: int = 0
    depth: int = 0

    def to_record(self) -> dict:
        def enc(v):
            if isinstance(v, TrigPoly):
                return {f"{k}": [float(c[0, 0].real), float(c[0, 0].imag)] for k, c in v.to_dict().items()}
            v = complex(v)
            return [v.real, v.imag]

        return {
            "finite_part": enc(self.finite_part),
            "residue": enc(self.residue),
            "convergent_tail": enc(self.convergent_tail),
            "low_modes": enc(self.low_modes),
            "cutoff": self.cutoff,
            "depth": self.depth,
            "breakdown": [
                {"degree": b["degree"], "zeta_argument": b["zeta_argument"], "zeta": b["zeta"],
                 "coefficient": enc(b["coefficient"]), "contribution": enc(b["contribution"])}
                for b in self.breakdown
            ],
        }


def mode_trace(a: PolyhomSymbol, n: int) -> TrigPoly:
    """tr <e_n, Op(a) e_n> as a base trig poly."""
    return a.diag(n).trace()


def zeta_finite_part(
    a: PolyhomSymbol,
    cutoff: int | None = None,
    *,
    tol: float = 1e-16,
    max_depth: int = 48,
) -> ZetaResult:
    """Pf and Res at z = 0 of Tr(Op(a) D^-z) for an exactly specified symbol.

    With ``E(n) = sum_{j <= d+1} c_j |n|^(d-j)`` the divergent part of the expansion,

        Pf = a(0) + sum_{+/-} sum_{j <= d+1} cbar_j zeta(j - d)
             + sum_{1 <= |n| <= n0} (a(n) - E(n))
             + sum_{+/-} sum_{j > d+1} cbar_j hurwitz(j - d, n0 + 1),

    where zeta(1) is replaced by Euler's constant; the residue is the branch sum
    of cbar_{d+1}.  The Hurwitz tail is extended component by component until
    the contributions drop below ``tol`` relative to the result.
    """
    if not a.exact:
        raise NotExactError("finite part needs the full symbol (zero mode and corrections)")
    d = a.order
    jdiv = d + 1  # last divergent component
    rho = a.rho or 0
    xdeg = a.xdeg or 0
    if cutoff is None:
        # small cutoffs limit cancellation in the subtracted low modes; the
        # Hurwitz tail converges like (xdeg / cutoff)^j
        cutoff = max(16, 3 * (rho + xdeg) + 4)
    n0 = int(cutoff)
    if n0 <= max(rho, xdeg):
        raise ValueError("cutoff must exceed the correction radius and x-degree")
    base_rank = a.rank - 1
    zero = TrigPoly.zeros(base_rank, 1)

    breakdown = []
    div = zero
    for j in range(0, jdiv + 1):
        p, m = branch_means(a, j)
        s = j - d
        cb = p + m
        zs = zeta_special(s)
        contrib = cb.scale(zs)
        div = div + contrib
        breakdown.append({"degree": d - j, "zeta_argument": s, "zeta": zs,
                          "coefficient": _scalar(cb), "contribution": _scalar(contrib)})
    residue = zero
    if jdiv >= 0:
        p, m = branch_means(a, jdiv)
        residue = p + m

    # modes 1 <= |n| <= n0 with the divergent part removed
    low = mode_trace(a, 0)
    divp = [branch_means(a, j) for j in range(0, jdiv + 1)]
    for n in range(1, n0 + 1):
        for sgn, br in ((1, 0), (-1, 1)):
            v = mode_trace(a, sgn * n)
            for j in range(0, jdiv + 1):
                c = divp[j][br]
                if not c.is_zero():
                    v = v - c.scale(float(n) ** (d - j))
            low = low + v

    # Hurwitz tail of the convergent components
    tail = zero
    j = max(jdiv + 1, 0)
    depth = max(a.J, j + 8)
    deep = a.deep(depth)
    quiet = 0
    while True:
        if j > depth:
            if depth >= max_depth + max(d, 0):
                break
            depth = min(2 * depth, max_depth + max(d, 0))
            deep = a.deep(depth)
        p, m = branch_means(deep, j)
        cb = p + m
        s = j - d
        term = cb.scale(hurwitz_tail(s, n0 + 1))
        tail = tail + term
        scale = max(1.0, (low + div).max_abs())
        # stop after three consecutive negligible terms
        if term.max_abs() <= tol * scale:
            quiet += 1
            if quiet >= 3:
                break
        else:
            quiet = 0
        j += 1
    total = div + low + tail
    return ZetaResult(
        finite_part=_scalar(total),
        residue=_scalar(residue),
        convergent_tail=_scalar(tail),
        breakdown=breakdown,
        low_modes=_scalar(low),
        cutoff=n0,
        depth=j,
    )


def radul_pairing(p: PolyhomSymbol, q: PolyhomSymbol, J: int = 4):
    """Residue of p o [ln D, q]."""
    lq = log_commutator(q, max(J, 1))
    prod = sym_compose(p, lq, min(J, lq.J) if not (p.exact and lq.exact) else J)
    return wodzicki_residue(prod)


def trace_defect_identity(a: PolyhomSymbol, b: PolyhomSymbol, J: int = 6, cutoff: int | None = None):
    """(Pf Tr([a, b] D^-z), Res Tr(a [ln D, b] D^-z)) at z = 0."""
    J = max(J, a.order + b.order + 2)
    lhs = zeta_finite_part(sym_commutator(a, b, J), cutoff).finite_part
    rhs = wodzicki_residue(sym_compose(a, log_commutator(b, J), J - 1))
    return lhs, rhs

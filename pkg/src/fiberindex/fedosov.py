"""The v-extension of symbol-valued forms, its differential and Fedosov product.

An element ``alpha = lam + w11 + w12 v + v w21 + v w22 v`` is stored as the
2x2 array ``[[w11, w12], [w21, w22]]`` of :class:`FormSymbol` plus a formal unit
coefficient ``lam``.  With the rules ``v^2 = theta`` and ``w v w' = 0`` the
product is the matrix product with ``diag(1, theta)`` inserted,

    alpha beta = M_alpha diag(1, theta) M_beta,

and the differential (``dw = delta w + v w + (-1)^|w| w v``, ``dv = 0``) reads

    (d alpha)_11 = delta w11 + g(w12) theta - theta w21
    (d alpha)_12 = g(w11) + delta w12 - theta w22
    (d alpha)_21 = w11 - delta w21 - g(w22) theta
    (d alpha)_22 = w12 - g(w21) - delta w22

with ``g`` the form-degree grading.  The formal unit is not an element of the
form algebra (``1 v w != 0``), which is why it is kept apart.
"""

from __future__ import annotations

import math

import numpy as np

from .forms import ConnectionSpec, Cycle, FormSymbol, delta_derivation, integrate_over_cycle
from .symbols import PolyhomSymbol, constant_symbol
from .zeta import ZetaResult, zeta_finite_part

__all__ = [
    "VElement",
    "ThetaMismatch",
    "ParityError",
    "TraceClassError",
    "v_product",
    "v_differential",
    "fedosov_product",
    "fedosov_power",
    "trace_tau",
    "trace_tau_R",
    "cycle_factor",
    "fiber_integrand",
]


class ThetaMismatch(ValueError):
    """Elements built over different connections were combined."""


class ParityError(ValueError):
    """An odd element was passed where an even one is required."""


class TraceClassError(ValueError):
    """A contributing component is not trace class on the fiber."""


def _zero(conn: ConnectionSpec) -> FormSymbol:
    return FormSymbol.zero(conn.base_rank, conn.k)


class VElement:
    """``lam + w11 + w12 v + v w21 + v w22 v`` over a fixed connection."""

    def __init__(self, conn: ConnectionSpec, w11=None, w12=None, w21=None, w22=None, unit: complex = 0.0):
        self.conn = conn
        z = _zero(conn)
        self.blocks = [[w11 or z, w12 or z], [w21 or z, w22 or z]]
        for row in self.blocks:
            for w in row:
                if w.base_rank != conn.base_rank or w.k != conn.k:
                    raise ThetaMismatch("block does not live over the connection's base")
        self.unit = complex(unit)

    # -- accessors --------------------------------------------------------
    @property
    def w11(self) -> FormSymbol:
        return self.blocks[0][0]

    @property
    def w12(self) -> FormSymbol:
        return self.blocks[0][1]

    @property
    def w21(self) -> FormSymbol:
        return self.blocks[1][0]

    @property
    def w22(self) -> FormSymbol:
        return self.blocks[1][1]

    @property
    def theta(self) -> FormSymbol:
        return self.conn.curvature

    @classmethod
    def from_form(cls, conn: ConnectionSpec, w: FormSymbol) -> "VElement":
        return cls(conn, w11=w)

    @classmethod
    def from_symbol(cls, conn: ConnectionSpec, s: PolyhomSymbol) -> "VElement":
        return cls(conn, w11=FormSymbol.scalar(s, conn.base_rank))

    @classmethod
    def one(cls, conn: ConnectionSpec) -> "VElement":
        return cls(conn, unit=1.0)

    def total_degrees(self) -> set:
        """Total (form + v) degrees present."""
        out = set()
        for (r, c), extra in (((0, 0), 0), ((0, 1), 1), ((1, 0), 1), ((1, 1), 2)):
            out |= {d + extra for d in self.blocks[r][c].degrees()}
        if self.unit != 0:
            out.add(0)
        return out

    def is_even(self) -> bool:
        return all(d % 2 == 0 for d in self.total_degrees())

    def is_odd(self) -> bool:
        return all(d % 2 == 1 for d in self.total_degrees())

    def max_abs(self) -> float:
        return max([w.max_abs() for row in self.blocks for w in row] + [abs(self.unit)])

    def _check(self, other: "VElement") -> None:
        if self.conn is not other.conn:
            raise ThetaMismatch("elements belong to different connections")

    # -- linear structure -------------------------------------------------
    def _map(self, fn, unit) -> "VElement":
        b = [[fn(w) for w in row] for row in self.blocks]
        return VElement(self.conn, b[0][0], b[0][1], b[1][0], b[1][1], unit)

    def __add__(self, other: "VElement") -> "VElement":
        self._check(other)
        b = [[self.blocks[r][c] + other.blocks[r][c] for c in (0, 1)] for r in (0, 1)]
        return VElement(self.conn, b[0][0], b[0][1], b[1][0], b[1][1], self.unit + other.unit)

    def scale(self, lam: complex) -> "VElement":
        return self._map(lambda w: w.scale(lam), self.unit * lam)

    def __neg__(self) -> "VElement":
        return self.scale(-1.0)

    def __sub__(self, other: "VElement") -> "VElement":
        return self + (-other)

    def __rmul__(self, lam) -> "VElement":
        return self.scale(lam)

    def part(self, degree: int) -> "VElement":
        """Component of total degree ``degree``."""
        b = [[self.blocks[r][c].part(degree - r - c) for c in (0, 1)] for r in (0, 1)]
        return VElement(self.conn, b[0][0], b[0][1], b[1][0], b[1][1], self.unit if degree == 0 else 0.0)

    def without_unit(self) -> "VElement":
        return VElement(self.conn, self.w11, self.w12, self.w21, self.w22, 0.0)

    # -- products ---------------------------------------------------------
    def __mul__(self, other):
        if isinstance(other, VElement):
            return v_product(self, other)
        return self.scale(other)

    def d(self) -> "VElement":
        return v_differential(self)

    def fedosov(self, other: "VElement") -> "VElement":
        return fedosov_product(self, other)

    def __repr__(self) -> str:
        degs = sorted(self.total_degrees())
        return f"VElement(unit={self.unit}, total_degrees={degs})"


def _block_product(a: VElement, b: VElement, J) -> list:
    th = a.theta
    A, B = a.blocks, b.blocks
    out = [[None, None], [None, None]]
    for r in (0, 1):
        for c in (0, 1):
            t = A[r][0].wedge(B[0][c], J)
            mid = A[r][1]
            if mid.components and B[1][c].components and th.components:
                t = t + mid.wedge(th, J).wedge(B[1][c], J)
            out[r][c] = t
    return out


def v_product(a: VElement, b: VElement, J: int | None = None) -> VElement:
    """Ordinary product in the v-extension (with the formal unit)."""
    a._check(b)
    blk = _block_product(a, b, J)
    out = VElement(a.conn, blk[0][0], blk[0][1], blk[1][0], blk[1][1], a.unit * b.unit)
    if a.unit != 0:
        out = out + b.without_unit().scale(a.unit)
    if b.unit != 0:
        out = out + a.without_unit().scale(b.unit)
    return out


def v_differential(a: VElement, J: int | None = None) -> VElement:
    """d alpha, a derivation of total degree one with d^2 = 0."""
    conn = a.conn
    th = conn.curvature

    def delta(w: FormSymbol) -> FormSymbol:
        return delta_derivation(w, conn, J)

    def tw(x: FormSymbol, y: FormSymbol) -> FormSymbol:
        if not x.components or not y.components:
            return _zero(conn)
        return x.wedge(y, J)

    w11, w12, w21, w22 = a.w11, a.w12, a.w21, a.w22
    d11 = delta(w11) + tw(w12.grading(), th) - tw(th, w21)
    d12 = w11.grading() + delta(w12) - tw(th, w22)
    d21 = w11 - delta(w21) - tw(w22.grading(), th)
    d22 = w12 - w21.grading() - delta(w22)
    return VElement(conn, d11, d12, d21, d22, 0.0)


def fedosov_product(a: VElement, b: VElement, J: int | None = None, *, check_parity: bool = True) -> VElement:
    """alpha (.) beta = alpha beta - d alpha d beta on even elements."""
    if check_parity and not (a.is_even() and b.is_even()):
        raise ParityError("the Fedosov product is defined on even elements")
    return v_product(a, b, J) - v_product(v_differential(a, J), v_differential(b, J), J)


def fedosov_power(a: VElement, n: int, J: int | None = None) -> VElement:
    out = VElement.one(a.conn)
    for _ in range(n):
        out = fedosov_product(out, a, J)
    return out


# -- traces ---------------------------------------------------------------------

def cycle_factor(C: Cycle) -> float:
    """m! / (2m)! for a cycle of dimension 2m."""
    m = C.dim // 2
    return math.factorial(m) / math.factorial(2 * m)


def fiber_integrand(a: VElement, C: Cycle, J: int | None = None) -> PolyhomSymbol:
    """Fiber symbol of the integral over C of w11 - w22 theta (unit included)."""
    conn = a.conn
    form = a.w11
    if a.w22.components and conn.curvature.components:
        form = form - a.w22.wedge(conn.curvature, J)
    s = integrate_over_cycle(form, C)
    if a.unit != 0 and C.dim == 0:
        s = s + constant_symbol(np.eye(conn.k) * a.unit, 1, conn.k)
    return s


def _effective_order(s: PolyhomSymbol, tol: float = 1e-13) -> int:
    for j in range(s.J + 1):
        p, m = s.components[j]
        if max(p.max_abs(), m.max_abs()) > tol:
            return s.order - j
    return s.watermark


def trace_tau_R(a: VElement, C: Cycle, J: int | None = None, *, full: bool = False):
    """m!/(2m)! times the integral over C of Pf Tr((w11 - w22 theta) D^-z)."""
    s = fiber_integrand(a, C, J)
    res = zeta_finite_part(s)
    val = cycle_factor(C) * complex(res.finite_part)
    return (val, res) if full else val


def trace_tau(a: VElement, C: Cycle, J: int | None = None, *, tol: float = 1e-13) -> complex:
    """The fiberwise operator trace version; requires trace-class integrands.

    Components down to degree -1 must vanish up to ``tol`` relative to the
    largest tracked component.
    """
    s = fiber_integrand(a, C, J)
    # cancellations leave roundoff proportional to the size of the integrand
    tol = tol * max([1.0] + [max(p.max_abs(), m.max_abs()) for p, m in s.components])
    order = _effective_order(s, tol)
    if order >= -1:
        # the tracked components down to degree -1 must vanish
        for j in range(0, s.order + 2):
            p, m = s.component(j)
            if max(p.max_abs(), m.max_abs()) > tol:
                raise TraceClassError(f"component of degree {s.order - j} is not trace class")
    res: ZetaResult = zeta_finite_part(s)
    return cycle_factor(C) * complex(res.finite_part)

"""Elliptic symbol families over T^2 with a nontrivial index bundle.

A projector family P(b) with first Chern number c gives the order-zero symbol

    g(b, x, +) = e^{ix} P(b) + 1 - P(b),   g(b, x, -) = 1,

whose index bundle is the image of P(b) placed on a single mode; its Chern
number is c.  P(b) comes from a unit vector field n(b) on T^2 through
P = (1 + n . sigma) / 2 and is stored as a Fourier fit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .symbols import PolyhomSymbol
from .trigpoly import TrigPoly

__all__ = ["PAULI", "Family", "qwz_vector", "projector_family", "clutching_symbol", "family", "FAMILIES"]

PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)


def qwz_vector(mass: float, wrap: int = 1):
    """h(b) = (sin b1, sin(w b2), m + cos b1 + cos(w b2)) on a grid.

    For 0 < |m| < 2 the normalized field has degree of absolute value w, and
    degree 0 for |m| > 2.
    """

    def h(b1, b2):
        return np.stack([np.sin(b1), np.sin(wrap * b2), mass + np.cos(b1) + np.cos(wrap * b2)], -1)

    return h


def projector_family(mass: float = 1.0, wrap: int = 1, *, grid: int = 64, tol: float = 1e-6) -> TrigPoly:
    """Fourier fit of P(b) = (1 + h/|h| . sigma) / 2, truncated at ``tol`` relative."""
    h = qwz_vector(mass, wrap)

    def proj(b1, b2):
        v = h(b1, b2)
        v = v / np.linalg.norm(v, axis=-1, keepdims=True)
        return 0.5 * (np.eye(2) + np.einsum("...i,ijk->...jk", v, PAULI))

    return TrigPoly.from_function(proj, 2, 2, grid, tol=tol)


def clutching_symbol(P: TrigPoly) -> PolyhomSymbol:
    """Order-zero symbol e^{ix} P + 1 - P on the + branch and 1 on the - branch.

    The + branch doubles as the zero mode.
    """
    k = P.k
    P3 = P.embed(3, (0, 1))
    one = TrigPoly.identity(3, k)
    ex = TrigPoly.monomial((0, 0, 1), np.eye(k), k)
    plus = ex.matmul(P3) + one - P3
    return PolyhomSymbol(0, [(plus, one)], None, plus, {})


@dataclass
class Family:
    name: str
    mass: float
    wrap: int
    projector: TrigPoly = field(repr=False)
    symbol: PolyhomSymbol = field(repr=False)


def family(name: str = "A", *, mass: float | None = None, wrap: int | None = None,
           grid: int = 64, tol: float = 1e-6) -> Family:
    """Family "A" (unit wrapping) or "B" (b2 wrapped twice); parameters may be overridden."""
    m0, w0 = FAMILIES[name]
    m = m0 if mass is None else float(mass)
    w = w0 if wrap is None else int(wrap)
    P = projector_family(m, w, grid=grid, tol=tol)
    return Family(name, m, w, P, clutching_symbol(P))


FAMILIES = {"A": (1.0, 1), "B": (1.0, 2)}

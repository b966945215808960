"""Random generators for symbols, forms, connections and v-elements.

Used by the check suites and the tests; all draws go through a numpy
``Generator`` so runs are reproducible from one seed.
"""

from __future__ import annotations

import numpy as np

from .fedosov import VElement
from .forms import ConnectionSpec, FormSymbol
from .symbols import PolyhomSymbol
from .trigpoly import TrigPoly

__all__ = [
    "random_trigpoly",
    "random_symbol",
    "random_form_symbol",
    "random_connection",
    "random_velement",
    "random_even_velement",
]


def random_trigpoly(rng: np.random.Generator, rank: int, k: int = 1, radius: int = 1,
                    terms: int = 3, scale: float = 1.0) -> TrigPoly:
    """Sparse complex trig poly with ``terms`` random frequencies in [-radius, radius]^rank."""
    table: dict = {}
    for _ in range(terms):
        f = tuple(int(v) for v in rng.integers(-radius, radius + 1, rank))
        c = scale * (rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k)))
        table[f] = table.get(f, 0) + c
    return TrigPoly.from_dict(table, rank, k)


def random_symbol(rng: np.random.Generator, order: int = 0, rank: int = 1, k: int = 1, *,
                  depth: int = 2, radius: int = 1, scale: float = 1.0, zero_mode: bool = True,
                  corrections: bool = False) -> PolyhomSymbol:
    """Exact symbol with ``depth + 1`` random branch components.

    Optionally carries a zero-mode value and finitely many mode corrections
    (smoothing perturbations).
    """
    comps = [(random_trigpoly(rng, rank, k, radius, scale=scale), random_trigpoly(rng, rank, k, radius, scale=scale))
             for _ in range(depth + 1)]
    zm = random_trigpoly(rng, rank, k, radius, scale=scale) if zero_mode else None
    corr = {}
    if corrections:
        for n in rng.choice([-4, -3, -2, -1, 1, 2, 3, 4], size=2, replace=False):
            corr[int(n)] = random_trigpoly(rng, rank, k, radius, scale=scale)
    return PolyhomSymbol(order, comps, None, zm, corr)


def random_form_symbol(rng: np.random.Generator, base_rank: int, degrees=(0, 1, 2), k: int = 1,
                       order: int = 0, **kw) -> FormSymbol:
    """Form with one random symbol coefficient per multi-index of the given degrees."""
    from itertools import combinations

    comps = {}
    for d in degrees:
        for I in combinations(range(base_rank), d):
            comps[I] = random_symbol(rng, order, base_rank + 1, k, **kw)
    return FormSymbol(base_rank, comps, k)


def random_connection(rng: np.random.Generator, base_rank: int, k: int = 1, scale: float = 0.3,
                      radius: int = 1) -> ConnectionSpec:
    """Connection with random (complex) vector-field coefficients."""
    fields = [random_trigpoly(rng, base_rank + 1, 1, radius, scale=scale) for _ in range(base_rank)]
    return ConnectionSpec(fields, k, base_rank)


def random_velement(rng: np.random.Generator, conn: ConnectionSpec, *, max_degree: int = 2,
                    unit: bool = False, **kw) -> VElement:
    """Random element with blocks of form degree up to ``max_degree`` (total degree unrestricted)."""
    b = conn.base_rank
    degs = tuple(range(0, min(max_degree, b) + 1))
    blocks = [random_form_symbol(rng, b, degs, conn.k, **kw) for _ in range(4)]
    lam = complex(rng.normal()) if unit else 0.0
    return VElement(conn, *blocks, unit=lam)


def random_even_velement(rng: np.random.Generator, conn: ConnectionSpec, *, unit: bool = False,
                         **kw) -> VElement:
    """Random element of even total degree (w11, w22 even forms; w12, w21 odd forms)."""
    b = conn.base_rank
    even = tuple(d for d in range(b + 1) if d % 2 == 0)
    odd = tuple(d for d in range(b + 1) if d % 2 == 1)
    w11 = random_form_symbol(rng, b, even, conn.k, **kw)
    w22 = random_form_symbol(rng, b, even, conn.k, **kw)
    if odd:
        w12 = random_form_symbol(rng, b, odd, conn.k, **kw)
        w21 = random_form_symbol(rng, b, odd, conn.k, **kw)
    else:
        w12 = w21 = None
    lam = complex(rng.normal()) if unit else 0.0
    return VElement(conn, w11, w12, w21, w22, unit=lam)

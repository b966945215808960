"""Symbol-valued differential forms on a torus base and the vertical connection.

A :class:`FormSymbol` is a finite sum ``sum_I omega_I db^I`` over increasing index
tuples ``I`` of base directions (0-based internally), each coefficient being a
:class:`PolyhomSymbol` over (base variables, x).  Forms commute with the symbol
coefficients, so the product is ``(omega db^I)(eta db^K) = omega o eta db^I db^K``.

The fibration is the trivial one ``T^b x S^1``; a connection is a base one-form
``A = sum_i A_i db^i`` whose coefficients are vertical vector fields
``f_i(b, x) d/dx`` acting diagonally on the k-dimensional fiber bundle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .constants import TWO_PI
from .symbols import (
    DSpec,
    PolyhomSymbol,
    constant_symbol,
    log_commutator,
    log_eigenvalue,
    sym_add,
    sym_compose,
    sym_scale,
    sym_sub,
)
from .trigpoly import RankMismatch, SizeMismatch, TrigPoly

__all__ = [
    "FormSymbol",
    "Cycle",
    "ConnectionSpec",
    "merge_sign",
    "vector_field_symbol",
    "curvature",
    "curvature_by_composition",
    "delta_derivation",
    "delta_log_D",
    "delta_log_D_from_commutator",
    "integrate_over_cycle",
]


def merge_sign(I: Sequence[int], K: Sequence[int]):
    """Sign and sorted index tuple of db^I db^K; (0, None) when they overlap."""
    if set(I) & set(K):
        return 0, None
    seq = list(I) + list(K)
    inv = sum(1 for a in range(len(seq)) for b in range(a + 1, len(seq)) if seq[a] > seq[b])
    return (-1) ** inv, tuple(sorted(seq))


class FormSymbol:
    """Finite sum of symbol coefficients times base forms db^I."""

    def __init__(self, base_rank: int, components: Mapping[tuple, PolyhomSymbol], k: int = 1):
        self.base_rank = int(base_rank)
        self.k = int(k)
        comps = {}
        for I, s in components.items():
            I = tuple(int(i) for i in I)
            if list(I) != sorted(set(I)) or any(i < 0 or i >= self.base_rank for i in I):
                raise ValueError(f"bad multi-index {I} for base rank {self.base_rank}")
            if s.rank != self.base_rank + 1:
                raise RankMismatch(f"coefficient rank {s.rank} for base rank {self.base_rank}")
            if s.k != self.k:
                raise SizeMismatch(f"coefficient size {s.k} vs {self.k}")
            comps[I] = s
        self.components = comps

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, base_rank: int, k: int = 1) -> "FormSymbol":
        return cls(base_rank, {}, k)

    @classmethod
    def scalar(cls, s: PolyhomSymbol, base_rank: int | None = None) -> "FormSymbol":
        """Degree-zero form with coefficient s."""
        b = s.rank - 1 if base_rank is None else base_rank
        return cls(b, {(): s}, s.k)

    @classmethod
    def one(cls, base_rank: int, k: int = 1) -> "FormSymbol":
        return cls.scalar(constant_symbol(np.eye(k), base_rank + 1, k), base_rank)

    # -- structure --------------------------------------------------------
    @property
    def rank(self) -> int:
        return self.base_rank + 1

    def degrees(self) -> set:
        return {len(I) for I in self.components}

    def part(self, degree: int) -> "FormSymbol":
        return FormSymbol(self.base_rank, {I: s for I, s in self.components.items() if len(I) == degree}, self.k)

    def coefficient(self, I: Sequence[int]) -> PolyhomSymbol | None:
        return self.components.get(tuple(I))

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.max_abs() <= tol

    def max_abs(self) -> float:
        """Largest coefficient over all tracked components."""
        out = 0.0
        for s in self.components.values():
            for p, m in s.components:
                out = max(out, p.max_abs(), m.max_abs())
        return out

    def orders(self) -> dict:
        return {I: s.order for I, s in self.components.items()}

    def effective_order(self, I, tol: float = 1e-13) -> int:
        """Order after skipping leading components that vanish (to tol)."""
        s = self.components[I]
        for j, (p, m) in enumerate(s.components):
            if max(p.max_abs(), m.max_abs()) > tol:
                return s.order - j
        return s.watermark

    def in_M0(self, tol: float = 1e-13) -> bool:
        """Each degree-n coefficient has order at most n."""
        return all(self.effective_order(I, tol) <= len(I) for I in self.components)

    def in_R0(self, tol: float = 1e-13) -> bool:
        """Each degree-n coefficient has order at most n - 1."""
        return all(self.effective_order(I, tol) <= len(I) - 1 for I in self.components)

    def _check(self, other: "FormSymbol") -> None:
        if self.base_rank != other.base_rank:
            raise RankMismatch(f"base rank {self.base_rank} vs {other.base_rank}")
        if self.k != other.k:
            raise SizeMismatch(f"matrix size {self.k} vs {other.k}")

    # -- linear structure -------------------------------------------------
    def __add__(self, other: "FormSymbol") -> "FormSymbol":
        self._check(other)
        comps = dict(self.components)
        for I, s in other.components.items():
            comps[I] = sym_add(comps[I], s) if I in comps else s
        return FormSymbol(self.base_rank, comps, self.k)

    def scale(self, lam: complex) -> "FormSymbol":
        if lam == 1:
            return self
        return FormSymbol(self.base_rank, {I: sym_scale(s, lam) for I, s in self.components.items()}, self.k)

    def __neg__(self) -> "FormSymbol":
        return self.scale(-1.0)

    def __sub__(self, other: "FormSymbol") -> "FormSymbol":
        return self + (-other)

    def __rmul__(self, lam) -> "FormSymbol":
        return self.scale(lam)

    def grading(self) -> "FormSymbol":
        """(-1)^degree applied componentwise."""
        return FormSymbol(
            self.base_rank,
            {I: (s if len(I) % 2 == 0 else sym_scale(s, -1.0)) for I, s in self.components.items()},
            self.k,
        )

    def map(self, fn) -> "FormSymbol":
        return FormSymbol(self.base_rank, {I: fn(s) for I, s in self.components.items()}, self.k)

    # -- products ---------------------------------------------------------
    def wedge(self, other: "FormSymbol", J: int | None = None) -> "FormSymbol":
        self._check(other)
        comps: dict = {}
        for I, a in self.components.items():
            for K, b in other.components.items():
                sgn, L = merge_sign(I, K)
                if not sgn:
                    continue
                t = sym_compose(a, b, J)
                if sgn < 0:
                    t = sym_scale(t, -1.0)
                comps[L] = sym_add(comps[L], t) if L in comps else t
        return FormSymbol(self.base_rank, comps, self.k)

    def __mul__(self, other):
        if isinstance(other, FormSymbol):
            return self.wedge(other)
        return self.scale(other)

    def graded_commutator(self, other: "FormSymbol", J: int | None = None) -> "FormSymbol":
        """xy - (-1)^{|x||y|} yx for homogeneous pieces, extended bilinearly."""
        out = FormSymbol.zero(self.base_rank, self.k)
        for p in self.degrees():
            for q in other.degrees():
                x, y = self.part(p), other.part(q)
                sgn = (-1) ** (p * q)
                out = out + x.wedge(y, J) - y.wedge(x, J).scale(sgn)
        return out

    def d_base(self) -> "FormSymbol":
        """Exterior derivative in the base variables."""
        comps: dict = {}
        for I, s in self.components.items():
            for k in range(self.base_rank):
                sgn, L = merge_sign((k,), I)
                if not sgn:
                    continue
                t = s.d_base(k)
                if sgn < 0:
                    t = sym_scale(t, -1.0)
                comps[L] = sym_add(comps[L], t) if L in comps else t
        return FormSymbol(self.base_rank, comps, self.k)

    def at_base(self, point: Sequence[float]) -> "FormSymbol":
        """Restriction of the coefficients to a base point (forms kept)."""
        return FormSymbol(0, {(): self.components[()].at_base(point)} if () in self.components else {}, self.k)

    def __repr__(self) -> str:
        body = ", ".join(f"{I}: order {s.order}" for I, s in sorted(self.components.items()))
        return f"FormSymbol(base_rank={self.base_rank}, k={self.k}, {{{body}}})"


@dataclass(frozen=True)
class Cycle:
    """A point of the base or the fundamental class of T^2."""

    kind: str
    point: tuple = ()

    @classmethod
    def at(cls, *coords: float) -> "Cycle":
        return cls("point", tuple(float(c) for c in coords))

    @classmethod
    def torus2(cls) -> "Cycle":
        return cls("torus2")

    @property
    def dim(self) -> int:
        return 0 if self.kind == "point" else 2

    @classmethod
    def from_spec(cls, spec: Mapping, base_rank: int) -> "Cycle":
        if "point" in spec:
            pt = tuple(spec["point"])
            if len(pt) != base_rank:
                raise ValueError(f"cycle.point must have {base_rank} coordinates, got {len(pt)}")
            return cls.at(*pt)
        if spec.get("torus2"):
            if base_rank != 2:
                raise ValueError("cycle.torus2 needs base_rank 2")
            return cls.torus2()
        raise ValueError("cycle must be {'point': [...]} or {'torus2': true}")


def integrate_over_cycle(x: FormSymbol, C: Cycle) -> PolyhomSymbol:
    """Fiber symbol obtained by integrating the form x over the cycle C.

    A point cycle evaluates the degree-zero coefficient; [T^2] takes the constant
    base Fourier mode of the db^1 db^2 coefficient times (2 pi)^2.
    """
    if C.kind == "point":
        if len(C.point) != x.base_rank:
            raise RankMismatch("point dimension differs from the base rank")
        s = x.components.get(())
        if s is None:
            return constant_symbol(np.zeros((x.k, x.k)), 1, x.k)
        return s.at_base(C.point)
    if C.kind == "torus2":
        if x.base_rank != 2:
            raise RankMismatch("[T^2] needs base rank 2")
        s = x.components.get((0, 1))
        if s is None:
            return constant_symbol(np.zeros((x.k, x.k)), 1, x.k)

        def avg(t: TrigPoly) -> TrigPoly:
            return t.slice_freq(0, 0).slice_freq(0, 0).scale(TWO_PI ** 2)

        return s.map_components(avg)
    raise ValueError(f"unknown cycle {C.kind}")


# -- connection -----------------------------------------------------------------

def _kron_identity(f: TrigPoly, k: int) -> TrigPoly:
    if k == 1:
        return f
    c = f.coeffs[..., 0, 0][..., None, None] * np.eye(k)
    return TrigPoly(c, f.radius)


def vector_field_symbol(f: TrigPoly, k: int = 1) -> PolyhomSymbol:
    """Symbol of f(b, x) d/dx (times the identity): i f sign(xi) |xi|, zero at n = 0."""
    g = _kron_identity(f, k)
    zero = TrigPoly.zeros(f.rank, k)
    return PolyhomSymbol(1, [(g.scale(1j), g.scale(-1j))], None, zero, {})


class ConnectionSpec:
    """Connection one-form A = sum_i f_i(b, x) d/dx db^i on T^b x S^1."""

    def __init__(self, fields: Sequence[TrigPoly], k: int = 1, base_rank: int | None = None):
        fields = list(fields)
        b = len(fields) if base_rank is None else base_rank
        if len(fields) != b:
            raise ValueError("one vector field per base direction is required")
        for f in fields:
            if f.rank != b + 1 or f.k != 1:
                raise RankMismatch("vector field coefficients must be scalar trig polys over base + x")
        self.base_rank = b
        self.k = k
        self.fields = fields
        self.real = all(f.allclose(f.adjoint(), 1e-14) for f in fields)
        self.symbols = [vector_field_symbol(f, k) for f in fields]
        self.form = FormSymbol(b, {(i,): s for i, s in enumerate(self.symbols)}, k)
        self.curvature = curvature(self)

    @classmethod
    def flat(cls, base_rank: int, k: int = 1) -> "ConnectionSpec":
        return cls([TrigPoly.zeros(base_rank + 1, 1) for _ in range(base_rank)], k, base_rank)

    @classmethod
    def from_spec(cls, spec: Mapping, k: int = 1) -> "ConnectionSpec":
        from .symbols import _untable

        b = int(spec["base_rank"])
        tables = spec.get("A") or []
        if not tables:
            return cls.flat(b, k)
        if len(tables) != b:
            raise ValueError(f"connection.A must have {b} entries")
        return cls([_untable(t, b + 1, 1) for t in tables], k, b)

    @property
    def is_flat(self) -> bool:
        return all(f.is_zero() for f in self.fields)


def _bracket(f: TrigPoly, g: TrigPoly) -> TrigPoly:
    """[f d/dx, g d/dx] = (f g' - g f') d/dx."""
    x = f.rank - 1
    return f.matmul(g.deriv(x)) - g.matmul(f.deriv(x))


def curvature(A: ConnectionSpec) -> FormSymbol:
    """theta = dA + A A from the vector-field bracket (degree 2, order 1)."""
    b = A.base_rank
    comps = {}
    for i in range(b):
        for j in range(i + 1, b):
            fi, fj = A.fields[i], A.fields[j]
            f = fj.deriv(i) - fi.deriv(j) + _bracket(fi, fj)
            comps[(i, j)] = vector_field_symbol(f, A.k)
    return FormSymbol(b, comps, A.k)


def curvature_by_composition(A: ConnectionSpec, J: int = 2) -> FormSymbol:
    """theta from symbol calculus: d_B A + A wedge A."""
    return A.form.d_base() + A.form.wedge(A.form, J)


def delta_derivation(x: FormSymbol, A: ConnectionSpec, J: int | None = None) -> FormSymbol:
    """delta x = d_B x + [A, x] (graded commutator)."""
    if x.base_rank != A.base_rank:
        raise RankMismatch("form and connection live on different bases")
    if A.is_flat:
        return x.d_base()
    return x.d_base() + A.form.graded_commutator(x, J)


def delta_log_D(A: ConnectionSpec, J_out: int) -> FormSymbol:
    """delta ln D = [A, ln D] from the series in ad_D applied to delta D = [A, D].

    delta ln D ~ dD D^-1 - 1/2 [D, dD] D^-2 + 1/3 [D, [D, dD]] D^-3 - ...
    The returned coefficients carry the exact operator [A_i, ln D] for mode values.
    """
    b, k = A.base_rank, A.k
    dspec = DSpec(b + 1, k)
    D = dspec.symbol
    comps = {}
    for i, a in enumerate(A.symbols):
        if A.fields[i].is_zero():
            continue
        comps[(i,)] = _delta_log_coefficient(a, dspec, D, J_out)
    return FormSymbol(b, comps, k)


def _delta_log_coefficient(a: PolyhomSymbol, dspec: DSpec, D: PolyhomSymbol, J_out: int) -> PolyhomSymbol:
    Jw = J_out + 1
    dD = sym_sub(sym_compose(a, D, Jw), sym_compose(D, a, Jw))  # order 2 nominal, 1 effective
    ad = dD
    total = None
    for kk in range(1, J_out + 1):
        term = sym_scale(sym_compose(ad, dspec.power(-kk), Jw), (-1) ** (kk + 1) / kk)
        total = term if total is None else sym_add(total, term)
        ad = sym_sub(sym_compose(D, ad, Jw), sym_compose(ad, D, Jw))
    # dD has nominal order 2 with vanishing leading part; realign to order 0
    comps = [total.component(j + 1) for j in range(J_out)]
    fiber = a.rank - 1

    def value(n: int) -> TrigPoly:
        av = a.value(n)
        acc = TrigPoly.zeros(a.rank, a.k)
        base = log_eigenvalue(n)
        for m in range(-av.radius[fiber], av.radius[fiber] + 1):
            if m == 0:
                continue
            sl = av.restrict_freq(fiber, m)
            if np.any(sl.coeffs):
                acc = acc + sl.scale(base - log_eigenvalue(n + m))
        return acc

    return PolyhomSymbol(
        0, comps, -J_out - 1, value_fn=value,
        deepen_fn=lambda Jn: _delta_log_coefficient(a, dspec, D, Jn + 1),
        xdeg=a.xdeg, rho=max(a.rho, a.xdeg),
    )


def delta_log_D_from_commutator(A: ConnectionSpec, J_out: int) -> FormSymbol:
    """Same form as :func:`delta_log_D`, computed as -[ln D, A_i]."""
    comps = {}
    for i, a in enumerate(A.symbols):
        if A.fields[i].is_zero():
            continue
        comps[(i,)] = sym_scale(log_commutator(a, J_out + 1), -1.0)
    return FormSymbol(A.base_rank, comps, A.k)

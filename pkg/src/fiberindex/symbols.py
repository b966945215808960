"""Classical pseudodifferential symbols on the circle fiber.

A symbol of order ``d`` is stored through its homogeneous expansion on the two
frequency branches,

    a(x, xi) ~ sum_j c_j^{sign xi}(x) |xi|^{d-j},

where every ``c_j^{+/-}`` is a :class:`TrigPoly` in (base variables, x) with the
fiber variable x on the last axis.  The quantization is Kohn-Nirenberg on Fourier
modes: ``Op(a) e_n = a(., n) e_n``, so the matrix entry ``<e_m, Op(a) e_n>`` is the
x-Fourier coefficient of ``a(., n)`` at frequency ``m - n``.

Symbols are *exact* when the full symbol ``a(., n)`` is known for every integer
``n``: either from the finite expansion plus a zero mode and a finite table of
low-mode corrections, or because the symbol was produced from exact symbols by an
operation that can evaluate the resulting operator mode by mode.  Exact symbols
can be deepened on demand; inexact ones carry a hard watermark.
"""

from __future__ import annotations

import math
from typing import Callable, Mapping, Sequence

import numpy as np

from .trigpoly import RankMismatch, SizeMismatch, TrigPoly

__all__ = [
    "PolyhomSymbol",
    "DSpec",
    "WatermarkError",
    "NotExactError",
    "EllipticityError",
    "symbol",
    "constant_symbol",
    "multiplication_symbol",
    "branch_symbol",
    "sym_add",
    "sym_sub",
    "sym_scale",
    "sym_mul",
    "sym_compose",
    "sym_commutator",
    "parametrix",
    "log_commutator",
    "log_commutator_closed_form",
    "diag_symbol_value",
    "pointwise_inverse",
    "log_eigenvalue",
]


class WatermarkError(ValueError):
    """The requested expansion depth is not supported by the inputs."""

    def __init__(self, message: str, achievable: int | None = None):
        super().__init__(message)
        self.achievable = achievable


class NotExactError(ValueError):
    """The full symbol is not known, so mode values cannot be produced."""


class EllipticityError(ValueError):
    """The leading symbol is singular somewhere on the sampling grid."""


def log_eigenvalue(n) -> float:
    """``ln max(|n|, 1)``: the eigenvalue of ln D on the mode e_n."""
    return math.log(max(abs(n), 1))


def _falling(s: int, k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= s - i
    return out


def _zero_pair(rank: int, k: int):
    z = TrigPoly.zeros(rank, k)
    return (z, z)


def _lin(terms) -> TrigPoly | None:
    out = None
    for c, t in terms:
        if c == 0 or t.is_zero():
            continue
        t = t if c == 1 else t.scale(c)
        out = t if out is None else out + t
    return out


class PolyhomSymbol:
    """Matrix-valued classical symbol with two branches and a watermark."""

    def __init__(
        self,
        order: int,
        components: Sequence,
        watermark: int | None = None,
        zero_mode: TrigPoly | None = None,
        correction: Mapping[int, TrigPoly] | None = None,
        *,
        value_fn: Callable[[int], TrigPoly] | None = None,
        deepen_fn: Callable[[int], "PolyhomSymbol"] | None = None,
        xdeg: int | None = None,
        rho: int | None = None,
    ):
        comps = tuple((p, m) for p, m in components)
        if not comps:
            raise ValueError("a symbol needs at least one component")
        rank, k = comps[0][0].rank, comps[0][0].k
        for p, m in comps:
            for t in (p, m):
                if t.rank != rank:
                    raise RankMismatch("component ranks differ")
                if t.k != k:
                    raise SizeMismatch("component matrix sizes differ")
        if zero_mode is not None and (zero_mode.rank != rank or zero_mode.k != k):
            raise SizeMismatch("zero mode does not match the components")
        correction = dict(correction or {})
        for n, t in correction.items():
            if n == 0:
                raise ValueError("mode 0 is set through zero_mode, not the correction table")
            if t.rank != rank or t.k != k:
                raise SizeMismatch("correction does not match the components")
        self.order = int(order)
        self.components = comps
        self.watermark = self.order - len(comps) if watermark is None else int(watermark)
        if self.watermark > self.order - len(comps):
            raise ValueError("watermark above the last tracked component")
        self.zero_mode = zero_mode
        self.correction = correction
        self.rank = rank
        self.k = k
        self._value_fn = value_fn
        self._deepen_fn = deepen_fn
        self._cache: dict = {}
        self._deep: dict = {}
        if self.exact:
            if xdeg is None:
                xdeg = self._own_xdeg()
            if rho is None:
                rho = max([abs(n) for n in correction] + [0])
        self.xdeg = xdeg
        self.rho = rho

    # -- structure --------------------------------------------------------
    @property
    def J(self) -> int:
        return len(self.components) - 1

    @property
    def is_base(self) -> bool:
        """Exact through explicit data (expansion, zero mode, corrections)."""
        return self._value_fn is None and self.zero_mode is not None

    @property
    def exact(self) -> bool:
        return self._value_fn is not None or self.zero_mode is not None

    def _own_xdeg(self) -> int:
        ts = [t for pair in self.components for t in pair]
        ts += list(self.correction.values())
        if self.zero_mode is not None:
            ts.append(self.zero_mode)
        return max(t.radius[-1] for t in ts) if self.rank else 0

    def component(self, j: int):
        """Branch pair of homogeneous degree ``order - j``."""
        if j < 0:
            raise IndexError("negative component index")
        if j > self.J:
            return self.deep(j).components[j]
        return self.components[j]

    def component_of_degree(self, degree: int):
        return self.component(self.order - degree)

    def leading(self):
        return self.components[0]

    def deep(self, J: int) -> "PolyhomSymbol":
        """Same symbol with at least ``J + 1`` tracked components."""
        if J <= self.J:
            return self
        if not self.exact:
            raise WatermarkError(
                f"component {J} requested but watermark is {self.watermark}",
                achievable=self.watermark,
            )
        hit = self._deep.get(J)
        if hit is not None:
            return hit
        if self._deepen_fn is not None:
            out = self._deepen_fn(J)
        else:
            pad = [_zero_pair(self.rank, self.k)] * (J - self.J)
            out = PolyhomSymbol(self.order, self.components + tuple(pad), None,
                                self.zero_mode, self.correction)
        out._cache = self._cache
        self._deep[J] = out
        return out

    def to_depth(self, J: int) -> "PolyhomSymbol":
        """Exactly ``J + 1`` components: deepen or cut (cutting raises the watermark)."""
        if J > self.J:
            return self.deep(J)
        if J == self.J:
            return self
        return PolyhomSymbol(self.order, self.components[: J + 1], None, self.zero_mode,
                             self.correction, value_fn=self._value_fn if self.exact else None,
                             deepen_fn=self.deep if self.exact else None,
                             xdeg=self.xdeg, rho=self.rho)

    # -- values -----------------------------------------------------------
    def expansion_value(self, n: int, J: int | None = None) -> TrigPoly:
        """Sum of tracked homogeneous terms at integer ``n != 0``."""
        J = self.J if J is None else J
        br = 0 if n > 0 else 1
        out = TrigPoly.zeros(self.rank, self.k)
        for j in range(J + 1):
            c = self.component(j)[br]
            if not c.is_zero():
                out = out + c.scale(float(abs(n)) ** (self.order - j))
        return out

    def value(self, n: int) -> TrigPoly:
        """Exact full symbol a(., n) as a trig poly in (base, x)."""
        n = int(n)
        hit = self._cache.get(n)
        if hit is not None:
            return hit
        if self._value_fn is not None:
            out = self._value_fn(n)
        elif self.zero_mode is not None:
            if n == 0:
                out = self.zero_mode
            else:
                out = self.expansion_value(n)
                if n in self.correction:
                    out = out + self.correction[n]
        else:
            raise NotExactError("symbol has no exact completion (missing zero mode)")
        self._cache[n] = out
        return out

    def diag(self, n: int) -> TrigPoly:
        """x-average of a(., n): the diagonal matrix element <e_n, Op(a) e_n>."""
        v = self.value(n)
        if self.rank == 0:
            return v
        return v.slice_freq(self.rank - 1, 0)

    # -- transformations --------------------------------------------------
    def map_components(self, fn, *, value_map=None, rank=None) -> "PolyhomSymbol":
        """Apply a linear map of trig polys to every piece of data."""
        comps = [(fn(p), fn(m)) for p, m in self.components]
        if self.is_base:
            return PolyhomSymbol(self.order, comps, self.watermark, fn(self.zero_mode),
                                 {n: fn(t) for n, t in self.correction.items()})
        if not self.exact:
            return PolyhomSymbol(self.order, comps, self.watermark)
        src = self
        return PolyhomSymbol(
            self.order, comps, self.watermark,
            value_fn=lambda n: fn(src.value(n)),
            deepen_fn=lambda J: src.deep(J).map_components(fn),
            xdeg=self.xdeg, rho=self.rho,
        )

    def d_base(self, axis: int) -> "PolyhomSymbol":
        """Derivative in the base variable number ``axis``."""
        if axis < 0 or axis >= self.rank - 1:
            raise RankMismatch(f"no base variable {axis}")
        return self.map_components(lambda t: t.deriv(axis))

    def at_base(self, point: Sequence[float]) -> "PolyhomSymbol":
        """Freeze all base variables at ``point`` (rank drops to 1)."""
        axes = list(range(self.rank - 1))
        if len(point) != len(axes):
            raise RankMismatch("point dimension differs from the base rank")
        if not axes:
            return self
        return self.map_components(lambda t: t.partial_eval(axes, point))

    def trace_symbol(self) -> "PolyhomSymbol":
        return self.map_components(lambda t: t.trace())

    def __repr__(self) -> str:
        tag = "exact" if self.exact else "asymptotic"
        return (f"PolyhomSymbol(order={self.order}, J={self.J}, watermark={self.watermark}, "
                f"k={self.k}, rank={self.rank}, {tag})")

    # -- operators sugar --------------------------------------------------
    def __add__(self, other):
        return sym_add(self, other)

    def __sub__(self, other):
        return sym_sub(self, other)

    def __neg__(self):
        return sym_scale(self, -1.0)

    def __rmul__(self, lam):
        return sym_scale(self, lam)

    def __matmul__(self, other):
        return sym_compose(self, other)

    # -- serialization ----------------------------------------------------
    def to_record(self) -> dict:
        """Structured-text record of the explicit data of this symbol."""
        return {
            "order": self.order,
            "matrix_size": self.k,
            "rank": self.rank,
            "watermark": self.watermark,
            "branches": [
                {"j": j, "plus": _table(p), "minus": _table(m)}
                for j, (p, m) in enumerate(self.components)
            ],
            "zero_mode": None if self.zero_mode is None else _table(self.zero_mode),
            "corrections": {str(n): _table(t) for n, t in sorted(self.correction.items())},
        }

    @classmethod
    def from_record(cls, rec: Mapping) -> "PolyhomSymbol":
        rank, k = int(rec["rank"]), int(rec["matrix_size"])
        branches = sorted(rec["branches"], key=lambda b: int(b["j"]))
        comps = [(_untable(b["plus"], rank, k), _untable(b["minus"], rank, k)) for b in branches]
        zm = rec.get("zero_mode")
        corr = {int(n): _untable(t, rank, k) for n, t in (rec.get("corrections") or {}).items()}
        return cls(int(rec["order"]), comps, rec.get("watermark"),
                   None if zm is None else _untable(zm, rank, k), corr)


def _table(t: TrigPoly) -> list:
    out = []
    for f, c in sorted(t.to_dict().items()):
        out.append({"freq": list(f), "value": [[[float(z.real), float(z.imag)] for z in row] for row in c]})
    return out


def _untable(rows, rank: int, k: int) -> TrigPoly:
    table = {}
    for r in rows:
        val = np.array([[complex(a, b) for a, b in row] for row in r["value"]], dtype=complex)
        f = tuple(int(v) for v in r["freq"])
        table[f] = table.get(f, 0) + val
    return TrigPoly.from_dict(table, rank, k)


# -- constructors -------------------------------------------------------------

def _tp(value, rank: int, k: int) -> TrigPoly:
    if isinstance(value, TrigPoly):
        return value
    return TrigPoly.constant(value, rank, k)


def symbol(order: int, components: Sequence, *, rank: int = 1, k: int = 1,
           zero_mode=None, correction: Mapping | None = None) -> PolyhomSymbol:
    """Build a symbol from branch pairs; scalars and matrices are promoted."""
    comps = [(_tp(p, rank, k), _tp(m, rank, k)) for p, m in components]
    zm = None if zero_mode is None else _tp(zero_mode, rank, k)
    corr = {int(n): _tp(v, rank, k) for n, v in (correction or {}).items()}
    return PolyhomSymbol(order, comps, None, zm, corr)


def constant_symbol(value, rank: int = 1, k: int = 1) -> PolyhomSymbol:
    t = _tp(value, rank, k)
    return PolyhomSymbol(0, [(t, t)], None, t, {})


def multiplication_symbol(f: TrigPoly) -> PolyhomSymbol:
    """Multiplication by the function f (same value on both branches and at n = 0)."""
    return PolyhomSymbol(0, [(f, f)], None, f, {})


def branch_symbol(plus: TrigPoly, minus: TrigPoly, zero_mode: TrigPoly | None = None) -> PolyhomSymbol:
    """Order-zero symbol equal to ``plus`` for n > 0 and ``minus`` for n < 0."""
    zm = plus if zero_mode is None else zero_mode
    return PolyhomSymbol(0, [(plus, minus)], None, zm, {})


class DSpec:
    """The reference operator D: e_n -> max(|n|, 1) e_n."""

    def __init__(self, rank: int = 1, k: int = 1):
        self.rank = rank
        self.k = k
        self._pow: dict = {}

    def power(self, p: int) -> PolyhomSymbol:
        """Symbol of D**p: |xi|**p on both branches with eigenvalue 1 at n = 0."""
        hit = self._pow.get(p)
        if hit is None:
            one = TrigPoly.identity(self.rank, self.k)
            hit = PolyhomSymbol(p, [(one, one)], None, one, {})
            self._pow[p] = hit
        return hit

    @property
    def symbol(self) -> PolyhomSymbol:
        return self.power(1)

    @staticmethod
    def eigenvalue(n: int) -> float:
        return float(max(abs(n), 1))

    @staticmethod
    def log_eigenvalue(n: int) -> float:
        return log_eigenvalue(n)


# -- arithmetic ---------------------------------------------------------------

def _check_pair(a: PolyhomSymbol, b: PolyhomSymbol) -> None:
    if a.rank != b.rank:
        raise RankMismatch(f"rank {a.rank} vs {b.rank}")
    if a.k != b.k:
        raise SizeMismatch(f"matrix size {a.k} vs {b.k}")


def sym_add(a: PolyhomSymbol, b: PolyhomSymbol) -> PolyhomSymbol:
    """Sum aligned by absolute order; watermark is the larger input watermark."""
    _check_pair(a, b)
    d = max(a.order, b.order)
    loose = [s.watermark for s in (a, b) if not s.exact]
    w = max(loose) if loose else min(a.watermark, b.watermark)
    J = d - w - 1
    a = a.deep(a.order - w - 1) if a.exact else a
    b = b.deep(b.order - w - 1) if b.exact else b
    comps = []
    for j in range(J + 1):
        deg = d - j
        pair = []
        for br in (0, 1):
            t = TrigPoly.zeros(a.rank, a.k)
            for s in (a, b):
                js = s.order - deg
                if 0 <= js <= s.J:
                    t = t + s.components[js][br]
            pair.append(t)
        comps.append(tuple(pair))
    if a.is_base and b.is_base:
        corr = dict(a.correction)
        for n, t in b.correction.items():
            corr[n] = corr[n] + t if n in corr else t
        return PolyhomSymbol(d, comps, w, a.zero_mode + b.zero_mode, corr)
    if not (a.exact and b.exact):
        return PolyhomSymbol(d, comps, w)

    def deepen(Jn: int) -> PolyhomSymbol:
        return sym_add(a.deep(max(Jn - (d - a.order), a.J)), b.deep(max(Jn - (d - b.order), b.J)))

    return PolyhomSymbol(d, comps, w, value_fn=lambda n: a.value(n) + b.value(n),
                         deepen_fn=deepen, xdeg=max(a.xdeg, b.xdeg), rho=max(a.rho, b.rho))


def sym_scale(a: PolyhomSymbol, lam: complex) -> PolyhomSymbol:
    return a.map_components(lambda t: t.scale(lam))


def sym_sub(a: PolyhomSymbol, b: PolyhomSymbol) -> PolyhomSymbol:
    return sym_add(a, sym_scale(b, -1.0))


def sym_mul(f: TrigPoly, a: PolyhomSymbol) -> PolyhomSymbol:
    """Left multiplication by the function f (exact; watermark unchanged)."""
    out = a.map_components(lambda t: f.matmul(t))
    if a.exact:
        out.xdeg = a.xdeg + (f.radius[-1] if f.rank else 0)
    return out


def _compose_components(a: PolyhomSymbol, b: PolyhomSymbol, J: int):
    fiber = a.rank - 1
    out = []
    # D_x^k b_l for every l + k <= J, per branch
    dk = {}
    for l in range(J + 1):
        pl = b.components[l]
        for k in range(J + 1 - l):
            if fiber < 0:
                dk[l, k] = pl if k == 0 else _zero_pair(a.rank, a.k)
            else:
                dk[l, k] = (pl[0].freq_power(fiber, k), pl[1].freq_power(fiber, k))
    for j in range(J + 1):
        pair = []
        for br, sgn in ((0, 1.0), (1, -1.0)):
            acc = TrigPoly.zeros(a.rank, a.k)
            for i in range(j + 1):
                ai = a.components[i][br]
                if ai.is_zero():
                    continue
                s = a.order - i
                inner = _lin(
                    (_falling(s, k) * sgn ** k / math.factorial(k), dk[j - i - k, k][br])
                    for k in range(j - i + 1)
                )
                if inner is not None:
                    acc = acc + ai.matmul(inner)
            pair.append(acc)
        out.append(tuple(pair))
    return out


def sym_compose(a: PolyhomSymbol, b: PolyhomSymbol, J_out: int | None = None) -> PolyhomSymbol:
    """Symbol of Op(a) Op(b): sum_k (1/k!) d_xi^k a . D_x^k b, branchwise."""
    _check_pair(a, b)
    d = a.order + b.order
    exact = a.exact and b.exact
    if J_out is None:
        J_out = max(a.J, b.J) if exact else min(a.J, b.J)
    if J_out < 0:
        raise ValueError("J_out must be non-negative")
    if not exact:
        # exact operands can be deepened, so only inexact ones bound the result
        limit = max(a.watermark + b.order if not a.exact else -10**9,
                    a.order + b.watermark if not b.exact else -10**9)
        if d - J_out - 1 < limit:
            raise WatermarkError(
                f"composition can only be tracked above order {limit}; requested watermark {d - J_out - 1}",
                achievable=limit,
            )
    aa = a.deep(J_out) if a.exact else a
    bb = b.deep(J_out) if b.exact else b
    comps = _compose_components(aa, bb, J_out)
    if not exact:
        return PolyhomSymbol(d, comps, d - J_out - 1)
    fiber = a.rank - 1

    def value(n: int) -> TrigPoly:
        bv = b.value(n)
        if fiber < 0:
            return a.value(n).matmul(bv)
        acc = TrigPoly.zeros(a.rank, a.k)
        R = bv.radius[fiber]
        for m in range(-R, R + 1):
            sl = bv.restrict_freq(fiber, m)
            if np.any(sl.coeffs):
                acc = acc + a.value(n + m).matmul(sl)
        return acc

    return PolyhomSymbol(
        d, comps, d - J_out - 1, value_fn=value,
        deepen_fn=lambda Jn: sym_compose(a, b, Jn),
        xdeg=a.xdeg + b.xdeg, rho=max(b.rho, a.rho + b.xdeg, b.xdeg),
    )


def sym_commutator(a: PolyhomSymbol, b: PolyhomSymbol, J_out: int | None = None) -> PolyhomSymbol:
    return sym_sub(sym_compose(a, b, J_out), sym_compose(b, a, J_out))


# -- inverses -----------------------------------------------------------------

def pointwise_inverse(t: TrigPoly, *, tol: float = 1e-13, max_grid: int | None = None) -> TrigPoly:
    """Pointwise matrix inverse of a trig poly, as a trig poly.

    Exact when t has a single nonzero coefficient; otherwise the inverse is
    Fourier-fitted on a grid that is refined until ``t * inv - 1`` is below ``tol``.
    """
    k, r = t.k, t.rank
    nz = [(f, c) for f, c in t.to_dict().items()]
    if len(nz) == 1:
        f, c = nz[0]
        return TrigPoly.from_dict({tuple(-v for v in f): np.linalg.inv(c)}, r, k)
    if r == 0:
        return TrigPoly(np.linalg.inv(t.coeffs), ())
    if max_grid is None:
        max_grid = {1: 1024, 2: 256}.get(r, 64)
    grid = max(16, 4 * max(t.radius) + 4)
    one = TrigPoly.identity(r, k)
    while True:
        vals = t.on_grid(grid)
        inv_vals = np.linalg.inv(vals)
        cand = TrigPoly.from_function(lambda *mesh: inv_vals, r, k, grid, tol=1e-17)
        err = max((t.matmul(cand) - one).max_abs(), (cand.matmul(t) - one).max_abs())
        if err <= tol or grid >= max_grid:
            if err > tol:
                raise EllipticityError(f"pointwise inverse only reached residual {err:.2e}")
            return cand.trim(tol * 1e-3)
        grid *= 2


_CHOP = 1e-15


def _check_elliptic(q: PolyhomSymbol, points: int = 64, threshold: float = 1e-8) -> None:
    for br in (0, 1):
        vals = q.components[0][br].on_grid(points) if q.rank else q.components[0][br].coeffs
        sv = np.linalg.svd(vals.reshape(-1, q.k, q.k), compute_uv=False)
        smin = float(sv.min())
        if smin < threshold:
            side = "+" if br == 0 else "-"
            raise EllipticityError(f"leading symbol on branch {side} has singular value {smin:.3e}")


def parametrix(q: PolyhomSymbol, J_out: int, *, tol: float = 1e-13) -> PolyhomSymbol:
    """Inverse of q modulo order -(J_out + 1) relative to the leading order.

    Neumann series ``P = p0 sum_n (1 - q p0)^n`` with p0 the pointwise inverse of
    the leading symbol (fitted to residual ``tol`` when it is not a monomial).
    """
    _check_elliptic(q)
    # intermediates are trimmed at the rounding floor: noise in high x-modes is
    # amplified by m**k in the expansion terms
    chop = lambda t: t.trim(_CHOP)
    plus = chop(pointwise_inverse(q.components[0][0], tol=tol))
    minus = chop(pointwise_inverse(q.components[0][1], tol=tol))
    zm = None
    if q.exact:
        z = q.value(0)
        try:
            _check_elliptic(PolyhomSymbol(0, [(z, z)]))
            zm = pointwise_inverse(z, tol=tol)
        except (EllipticityError, np.linalg.LinAlgError):
            zm = None
    if zm is None:
        zm = TrigPoly.identity(q.rank, q.k)
    p0 = PolyhomSymbol(-q.order, [(plus, minus)], None, zm, {})
    one = constant_symbol(np.eye(q.k), q.rank, q.k)
    # residuals at the level of the fit are noise of the leading inverse
    floor = max(_CHOP, 10.0 * tol)
    r = sym_sub(one, sym_compose(q, p0, J_out)).map_components(lambda t: t.trim(floor))
    if max(t.max_abs() for pair in r.components for t in pair) < floor:
        if J_out == 0:
            return p0
        return p0.deep(J_out)
    s = one
    for _ in range(J_out):
        s = sym_add(one, sym_compose(r, s, J_out)).map_components(chop)
    return sym_compose(p0, s, J_out)


# -- logarithm ----------------------------------------------------------------

def log_commutator(a: PolyhomSymbol, J_out: int) -> PolyhomSymbol:
    """[ln D, a] via the series sum_k (-1)^(k+1)/k ad_D^k(a) D^(-k).

    The result has order ``ord(a) - 1`` and watermark ``ord(a) - J_out - 1``.
    """
    if J_out < 1:
        raise ValueError("J_out must be at least 1")
    dspec = DSpec(a.rank, a.k)
    D = dspec.symbol
    d = a.order
    if not a.exact and a.watermark > d - J_out - 1:
        raise WatermarkError(
            f"[ln D, a] needs the watermark of a at or below {d - J_out - 1}",
            achievable=a.watermark,
        )
    Jw = J_out  # depth of the order-d intermediates
    ad = a.deep(Jw) if a.exact else a
    total = None
    for k in range(1, J_out + 1):
        ad = sym_sub(sym_compose(D, ad, Jw), sym_compose(ad, D, Jw))
        term = sym_scale(sym_compose(ad, dspec.power(-k), Jw), (-1) ** (k + 1) / k)
        total = term if total is None else sym_add(total, term)
    # every term has order d - k but its ad_D^k(a) part is of order d; realign
    comps = []
    for j in range(J_out):
        comps.append(total.component(j + 1) if total.order == d else total.component(j))
    out_order = d - 1
    if not a.exact:
        return PolyhomSymbol(out_order, comps, d - J_out - 1)
    fiber = a.rank - 1

    def value(n: int) -> TrigPoly:
        av = a.value(n)
        if fiber < 0:
            return TrigPoly.zeros(a.rank, a.k)
        acc = TrigPoly.zeros(a.rank, a.k)
        R = av.radius[fiber]
        base = log_eigenvalue(n)
        for m in range(-R, R + 1):
            if m == 0:
                continue
            sl = av.restrict_freq(fiber, m)
            if np.any(sl.coeffs):
                acc = acc + sl.scale(log_eigenvalue(n + m) - base)
        return acc

    return PolyhomSymbol(
        out_order, comps, d - J_out - 1, value_fn=value,
        deepen_fn=lambda Jn: log_commutator(a, Jn + 1),
        xdeg=a.xdeg, rho=max(a.rho, a.xdeg),
    )


def log_commutator_closed_form(a: PolyhomSymbol, J_out: int) -> PolyhomSymbol:
    """[ln D, a] from the expansion of ln|n+m| - ln|n| in powers of m/n.

    On the + branch ln(1 + m/n) = sum_k (-1)^(k+1) m^k / (k n^k); on the - branch
    |n + m| = |n| - m so the series is -sum_k m^k / (k |n|^k).  Independent of the
    commutator series used by :func:`log_commutator`.
    """
    fiber = a.rank - 1
    d = a.order
    aa = a.deep(J_out) if a.exact else a
    if not a.exact and a.watermark > d - J_out - 1:
        raise WatermarkError("insufficient watermark", achievable=a.watermark)
    comps = []
    for j in range(J_out):
        # degree d - 1 - j collects c_i D_x^k with i + k = j + 1, k >= 1
        pair = []
        for br in (0, 1):
            acc = TrigPoly.zeros(a.rank, a.k)
            for k in range(1, j + 2):
                i = j + 1 - k
                coef = ((-1) ** (k + 1) if br == 0 else -1.0) / k
                acc = acc + aa.components[i][br].freq_power(fiber, k).scale(coef)
            pair.append(acc)
        comps.append(tuple(pair))
    return PolyhomSymbol(d - 1, comps, d - J_out - 1)


def diag_symbol_value(a: PolyhomSymbol, n: int) -> TrigPoly:
    """x-Fourier zero coefficient of a(., n), a trig poly in the base variables."""
    if not a.exact:
        if n == 0 or abs(n) <= (a.rho or 0):
            raise NotExactError(f"mode {n} lies in the untracked region")
        raise NotExactError("no exact completion: mode values are not determined")
    return a.diag(n)

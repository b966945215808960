"""Matrix-valued trigonometric polynomials on the torus T^r.

Coefficients are stored densely: an array of shape ``(2R_1+1, ..., 2R_r+1, k, k)``
where ``R_i`` is the frequency radius along variable ``i``.  Frequency ``f`` along
axis ``i`` lives at index ``f + R_i``.  Products are linear convolutions in
frequency space combined with matrix multiplication, computed through zero-padded
FFTs, so the result is exact up to floating-point rounding.
"""

from __future__ import annotations

from contextlib import contextmanager
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = ["TrigPoly", "RankMismatch", "SizeMismatch", "coefficient_floor"]

# relative floor below which product coefficients are dropped (0: keep all)
_FLOOR = [0.0]


@contextmanager
def coefficient_floor(tol: float):
    """Trim every product to coefficients above ``tol`` times its largest one.

    Meant for symbols that are Fourier fits to begin with: without it the
    frequency radius of nested products grows additively.
    """
    old = _FLOOR[0]
    _FLOOR[0] = float(tol)
    try:
        yield
    finally:
        _FLOOR[0] = old


class RankMismatch(ValueError):
    """Two trig polys live on tori of different dimension."""


class SizeMismatch(ValueError):
    """Two trig polys carry matrices of different size."""


def _as_matrix(value, k: int) -> np.ndarray:
    arr = np.asarray(value, dtype=complex)
    if arr.ndim == 0:
        return arr * np.eye(k, dtype=complex)
    if arr.shape != (k, k):
        raise SizeMismatch(f"expected a {k}x{k} matrix, got shape {arr.shape}")
    return arr


class TrigPoly:
    """Finite Fourier series ``sum_f c_f exp(i f.x)`` with ``k x k`` complex coefficients."""

    __slots__ = ("coeffs", "radius", "_zero")

    def __init__(self, coeffs: np.ndarray, radius: Sequence[int] | None = None):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim < 2 or coeffs.shape[-1] != coeffs.shape[-2]:
            raise SizeMismatch("coefficient array must end with a square matrix axis pair")
        if radius is None:
            radius = tuple((s - 1) // 2 for s in coeffs.shape[:-2])
        radius = tuple(int(r) for r in radius)
        if any(s != 2 * r + 1 for s, r in zip(coeffs.shape[:-2], radius)):
            raise ValueError("coefficient shape inconsistent with radius")
        self.coeffs = coeffs
        self.radius = radius
        self._zero = None

    # -- construction -----------------------------------------------------
    @classmethod
    def zeros(cls, rank: int, k: int = 1) -> "TrigPoly":
        return cls(np.zeros((1,) * rank + (k, k), dtype=complex), (0,) * rank)

    @classmethod
    def constant(cls, value, rank: int, k: int | None = None) -> "TrigPoly":
        arr = np.asarray(value, dtype=complex)
        if k is None:
            k = 1 if arr.ndim == 0 else arr.shape[0]
        c = np.zeros((1,) * rank + (k, k), dtype=complex)
        c[(0,) * rank] = _as_matrix(arr, k)
        return cls(c, (0,) * rank)

    @classmethod
    def identity(cls, rank: int, k: int = 1) -> "TrigPoly":
        return cls.constant(1.0, rank, k)

    @classmethod
    def monomial(cls, freq: Sequence[int], value=1.0, k: int | None = None) -> "TrigPoly":
        return cls.from_dict({tuple(freq): value}, rank=len(freq), k=k)

    @classmethod
    def from_dict(cls, table: Mapping, rank: int, k: int | None = None) -> "TrigPoly":
        """Build from ``{frequency tuple: matrix or scalar}``."""
        items = [(tuple(int(v) for v in np.atleast_1d(f)), np.asarray(c, dtype=complex))
                 for f, c in table.items()]
        if k is None:
            k = 1
            for _, c in items:
                if c.ndim == 2:
                    k = c.shape[0]
                    break
        if not items:
            return cls.zeros(rank, k)
        for f, _ in items:
            if len(f) != rank:
                raise RankMismatch(f"frequency {f} does not have {rank} entries")
        radius = tuple(max(abs(f[i]) for f, _ in items) for i in range(rank))
        c = np.zeros(tuple(2 * r + 1 for r in radius) + (k, k), dtype=complex)
        for f, val in items:
            idx = tuple(fi + ri for fi, ri in zip(f, radius))
            c[idx] += _as_matrix(val, k)
        return cls(c, radius)

    @classmethod
    def from_function(cls, func, rank: int, k: int, grid: int, tol: float = 1e-15) -> "TrigPoly":
        """Fourier-fit a smooth matrix function sampled on a uniform grid.

        ``func`` receives ``rank`` meshgrid arrays and returns values of shape
        ``(grid,)*rank + (k, k)``.  Coefficients below ``tol`` times the largest
        one are dropped.
        """
        axes = [2 * np.pi * np.arange(grid) / grid for _ in range(rank)]
        mesh = np.meshgrid(*axes, indexing="ij")
        vals = np.asarray(func(*mesh), dtype=complex).reshape((grid,) * rank + (k, k))
        spec = np.fft.fftn(vals, axes=tuple(range(rank))) / grid ** rank
        spec = np.fft.fftshift(spec, axes=tuple(range(rank)))
        if grid % 2 == 0:
            # drop the ambiguous Nyquist row so the result stays symmetric
            spec = spec[(slice(1, None),) * rank]
        out = cls(spec)
        return out.trim(tol * max(np.abs(spec).max(), 1e-300))

    # -- basic properties -------------------------------------------------
    @property
    def rank(self) -> int:
        return len(self.radius)

    @property
    def k(self) -> int:
        return self.coeffs.shape[-1]

    def is_zero(self) -> bool:
        if self._zero is None:
            self._zero = not np.any(self.coeffs)
        return self._zero

    def max_abs(self) -> float:
        return float(np.abs(self.coeffs).max()) if self.coeffs.size else 0.0

    def coefficient(self, freq: Sequence[int]) -> np.ndarray:
        freq = tuple(freq)
        if len(freq) != self.rank:
            raise RankMismatch("frequency length differs from rank")
        if any(abs(f) > r for f, r in zip(freq, self.radius)):
            return np.zeros((self.k, self.k), dtype=complex)
        return self.coeffs[tuple(f + r for f, r in zip(freq, self.radius))].copy()

    def mean(self) -> np.ndarray:
        """The constant Fourier coefficient (average over the torus)."""
        return self.coefficient((0,) * self.rank)

    def to_dict(self, tol: float = 0.0) -> dict:
        out = {}
        for idx in np.ndindex(*self.coeffs.shape[:-2]):
            c = self.coeffs[idx]
            if np.abs(c).max() > tol:
                out[tuple(i - r for i, r in zip(idx, self.radius))] = c.copy()
        return out

    # -- reshaping --------------------------------------------------------
    def pad(self, radius: Sequence[int]) -> "TrigPoly":
        radius = tuple(max(a, b) for a, b in zip(radius, self.radius))
        if radius == self.radius:
            return self
        widths = [(r - s, r - s) for r, s in zip(radius, self.radius)] + [(0, 0), (0, 0)]
        return TrigPoly(np.pad(self.coeffs, widths), radius)

    def trim(self, tol: float = 0.0) -> "TrigPoly":
        """Drop outer frequency shells whose coefficients are all at most ``tol``."""
        mask = np.abs(self.coeffs).max(axis=(-1, -2)) > tol
        if not mask.any():
            return TrigPoly.zeros(self.rank, self.k)
        radius = []
        for ax, r in enumerate(self.radius):
            other = tuple(i for i in range(self.rank) if i != ax)
            hit = np.nonzero(mask.any(axis=other) if other else mask)[0]
            radius.append(int(max(abs(hit[0] - r), abs(hit[-1] - r))))
        radius = tuple(radius)
        if radius == self.radius:
            return self
        sl = tuple(slice(r - q, r + q + 1) for r, q in zip(self.radius, radius))
        return TrigPoly(self.coeffs[sl], radius)

    # -- arithmetic -------------------------------------------------------
    def _check(self, other: "TrigPoly") -> None:
        if self.rank != other.rank:
            raise RankMismatch(f"rank {self.rank} vs {other.rank}")
        if self.k != other.k:
            raise SizeMismatch(f"matrix size {self.k} vs {other.k}")

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        if not isinstance(other, TrigPoly):
            other = TrigPoly.constant(other, self.rank, self.k)
        self._check(other)
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        radius = tuple(max(a, b) for a, b in zip(self.radius, other.radius))
        return TrigPoly(self.pad(radius).coeffs + other.pad(radius).coeffs, radius)

    __radd__ = __add__

    def __neg__(self) -> "TrigPoly":
        return TrigPoly(-self.coeffs, self.radius)

    def __sub__(self, other: "TrigPoly") -> "TrigPoly":
        if not isinstance(other, TrigPoly):
            other = TrigPoly.constant(other, self.rank, self.k)
        return self + (-other)

    def scale(self, lam: complex) -> "TrigPoly":
        return TrigPoly(self.coeffs * lam, self.radius)

    def __mul__(self, other) -> "TrigPoly":
        if isinstance(other, TrigPoly):
            return self.matmul(other)
        return self.scale(other)

    def __rmul__(self, other) -> "TrigPoly":
        return self.scale(other)

    def matmul(self, other: "TrigPoly") -> "TrigPoly":
        """Pointwise matrix product, i.e. convolution of coefficient tables."""
        self._check(other)
        if self.is_zero() or other.is_zero():
            return TrigPoly.zeros(self.rank, self.k)
        radius = tuple(a + b for a, b in zip(self.radius, other.radius))
        r = self.rank
        if r == 0:
            return TrigPoly(self.coeffs @ other.coeffs, ())
        if all(s == 0 for s in self.radius):
            return TrigPoly(np.matmul(self.coeffs[(0,) * r], other.coeffs), other.radius)
        if all(s == 0 for s in other.radius):
            return TrigPoly(np.matmul(self.coeffs, other.coeffs[(0,) * r]), self.radius)
        shape = tuple(2 * q + 1 for q in radius)
        axes = tuple(range(r))
        fa = np.fft.fftn(self.coeffs, s=shape, axes=axes)
        fb = np.fft.fftn(other.coeffs, s=shape, axes=axes)
        if self.k == 1:
            prod = fa * fb
        else:
            prod = np.matmul(fa, fb)
        out = TrigPoly(np.fft.ifftn(prod, axes=axes), radius)
        if _FLOOR[0] > 0.0:
            out = out.trim(_FLOOR[0] * out.max_abs())
        return out

    def left(self, mat) -> "TrigPoly":
        """Multiply every coefficient on the left by a constant matrix."""
        return TrigPoly(np.matmul(_as_matrix(mat, self.k), self.coeffs), self.radius)

    def right(self, mat) -> "TrigPoly":
        return TrigPoly(np.matmul(self.coeffs, _as_matrix(mat, self.k)), self.radius)

    # -- calculus ---------------------------------------------------------
    def _freqs(self, axis: int) -> np.ndarray:
        r = self.radius[axis]
        shape = [1] * self.rank + [1, 1]
        shape[axis] = 2 * r + 1
        return np.arange(-r, r + 1).reshape(shape)

    def freq_power(self, axis: int, power: int) -> "TrigPoly":
        """Multiply the coefficient at frequency f by f**power along ``axis``.

        With ``axis`` the fiber variable this is ``D_x**power`` where ``D_x = -i d/dx``.
        """
        if power == 0:
            return self
        return TrigPoly(self.coeffs * self._freqs(axis).astype(float) ** power, self.radius)

    def deriv(self, axis: int, order: int = 1) -> "TrigPoly":
        if order == 0:
            return self
        return TrigPoly(self.coeffs * (1j * self._freqs(axis)) ** order, self.radius)

    def restrict_freq(self, axis: int, freq: int) -> "TrigPoly":
        """Keep only the terms whose frequency along ``axis`` equals ``freq``."""
        r = self.radius[axis]
        c = np.zeros_like(self.coeffs)
        if abs(freq) <= r:
            idx = [slice(None)] * self.rank
            idx[axis] = freq + r
            c[tuple(idx)] = self.coeffs[tuple(idx)]
        return TrigPoly(c, self.radius)

    def slice_freq(self, axis: int, freq: int) -> "TrigPoly":
        """Coefficient along ``axis`` at ``freq`` as a trig poly in the other variables."""
        r = self.radius[axis]
        rest = self.radius[:axis] + self.radius[axis + 1:]
        if abs(freq) > r:
            return TrigPoly.zeros(self.rank - 1, self.k)
        return TrigPoly(np.take(self.coeffs, freq + r, axis=axis), rest)

    def embed(self, rank: int, axes: Sequence[int]) -> "TrigPoly":
        """View as a trig poly on T^rank whose variable i sits at axes[i]."""
        radius = [0] * rank
        for i, ax in enumerate(axes):
            radius[ax] = self.radius[i]
        c = np.zeros(tuple(2 * q + 1 for q in radius) + (self.k, self.k), dtype=complex)
        src = np.moveaxis(self.coeffs, list(range(self.rank)), list(axes)) if self.rank else self.coeffs
        idx = [slice(None) if ax in axes else slice(0, 1) for ax in range(rank)]
        shape = [2 * radius[ax] + 1 if ax in axes else 1 for ax in range(rank)]
        c[tuple(idx)] = src.reshape(tuple(shape) + (self.k, self.k))
        return TrigPoly(c, tuple(radius))

    def partial_eval(self, axes: Sequence[int], point: Sequence[float]) -> "TrigPoly":
        """Evaluate the variables at ``axes`` at ``point``; the rest stay symbolic."""
        c = self.coeffs
        axes = list(axes)
        # contract from the last axis backwards so earlier axis numbers stay valid
        for ax, val in sorted(zip(axes, point), key=lambda t: -t[0]):
            r = self.radius[ax]
            phase = np.exp(1j * np.arange(-r, r + 1) * val)
            c = np.tensordot(c, phase, axes=([ax], [0]))
        rest = tuple(r for i, r in enumerate(self.radius) if i not in axes)
        return TrigPoly(c, rest)

    def trace(self) -> "TrigPoly":
        tr = np.trace(self.coeffs, axis1=-2, axis2=-1)
        return TrigPoly(tr[..., None, None], self.radius)

    def adjoint(self) -> "TrigPoly":
        """Pointwise conjugate transpose."""
        c = np.conj(np.swapaxes(self.coeffs, -1, -2))
        c = c[(slice(None, None, -1),) * self.rank]
        return TrigPoly(c, self.radius)

    # -- evaluation -------------------------------------------------------
    def __call__(self, *point: float) -> np.ndarray:
        if len(point) != self.rank:
            raise RankMismatch("point dimension differs from rank")
        return self.partial_eval(range(self.rank), point).coeffs.reshape(self.k, self.k)

    def on_grid(self, grid: int) -> np.ndarray:
        """Values on the uniform grid ``2 pi j / grid`` in every variable.

        Frequencies are folded modulo ``grid`` first, which gives the exact sampled
        values for any grid size.
        """
        r = self.rank
        if r == 0:
            return self.coeffs.copy()
        c = self.coeffs
        for ax in range(r):
            rad = self.radius[ax]
            n = c.shape[ax]
            # fold frequencies modulo grid, then inverse FFT
            folded_shape = list(c.shape)
            folded_shape[ax] = grid
            folded = np.zeros(folded_shape, dtype=complex)
            for j in range(n):
                f = j - rad
                src = [slice(None)] * c.ndim
                dst = [slice(None)] * c.ndim
                src[ax] = j
                dst[ax] = f % grid
                folded[tuple(dst)] += c[tuple(src)]
            c = np.fft.ifft(folded, axis=ax) * grid
        return c

    def allclose(self, other: "TrigPoly", atol: float = 1e-12) -> bool:
        return (self - other).max_abs() <= atol

    def __repr__(self) -> str:
        return f"TrigPoly(rank={self.rank}, k={self.k}, radius={self.radius})"

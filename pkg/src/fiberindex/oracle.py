"""Brute-force ground truth from Fourier-mode truncations.

Operators are compressed to the modes ``-N..N`` (blocks of size k): the column of
mode n holds the x-Fourier coefficients of the full symbol ``a(., n)``, so
``M[m, n] = ahat_{m - n}(n)``.  The index idempotent is

    G = [[0, 1], [-1, P]] [[1, 0], [Q, 1]] [[1, -P], [0, 1]],   e = G^-1 p G,

with p = diag(1, 0); its defect ``tr(e - p)`` is evaluated on interior modes.
For families over T^2 the same construction runs per grid point and the index
bundle's first Chern number is read off with lattice link variables.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .symbols import EllipticityError, NotExactError, PolyhomSymbol, parametrix
from .trigpoly import TrigPoly

__all__ = [
    "TruncatedOperator",
    "IdempotentTrace",
    "OracleInstability",
    "RankJump",
    "truncate_op",
    "truncate_family",
    "index_idempotent",
    "index_idempotent_window",
    "lifting",
    "index_idempotent_pairing",
    "winding_number",
    "frames",
    "chern_number",
    "family_index_bundle",
    "family_chern_number",
]

log = logging.getLogger(__name__)


class OracleInstability(ValueError):
    """A quantity that should be an integer is not close to one."""


class RankJump(ValueError):
    """The rank of an idempotent family changes across the grid."""


def buffer_width(J: int) -> int:
    return 4 * (J + 2)


@dataclass
class TruncatedOperator:
    """Compression of Op(a) to modes ``-N..N``; ``matrix`` may carry leading grid axes."""

    N: int
    k: int
    matrix: np.ndarray

    @property
    def size(self) -> int:
        return (2 * self.N + 1) * self.k

    def interior(self, N: int) -> slice:
        """Index range of the modes ``-N..N`` inside this truncation."""
        off = (self.N - N) * self.k
        return slice(off, off + (2 * N + 1) * self.k)

    def __matmul__(self, other: "TruncatedOperator") -> "TruncatedOperator":
        return TruncatedOperator(self.N, self.k, self.matrix @ other.matrix)


def _fill(cols, N: int, k: int, lead: tuple) -> np.ndarray:
    """Assemble ``M[m, n] = c_{m - n}(n)`` from per-column coefficient stacks.

    ``cols[n]`` has shape ``lead + (2R + 1, k, k)``.
    """
    size = (2 * N + 1) * k
    M = np.zeros(lead + (size, size), dtype=complex)
    for n in range(-N, N + 1):
        c = cols[n]
        R = (c.shape[-3] - 1) // 2
        j = (n + N) * k
        for f in range(-R, R + 1):
            m = n + f
            if -N <= m <= N:
                i = (m + N) * k
                M[..., i:i + k, j:j + k] = c[..., f + R, :, :]
    return M


def truncate_op(a: PolyhomSymbol, N: int) -> TruncatedOperator:
    """Exact matrix of Op(a) on the modes |n| <= N (a has no base variables)."""
    if a.rank != 1:
        raise ValueError("truncate_op needs a symbol on the circle; freeze the base first")
    if not a.exact:
        raise NotExactError("truncation needs the full symbol (zero mode and corrections)")
    cols = {n: a.value(n).coeffs for n in range(-N, N + 1)}
    return TruncatedOperator(N, a.k, _fill(cols, N, a.k, ()))


def _family_columns(a: PolyhomSymbol, N: int) -> dict:
    if not a.exact:
        raise NotExactError("truncation needs the full symbol (zero mode and corrections)")
    return {n: a.value(n).coeffs for n in range(-N, N + 1)}


def _columns_at(cols: dict, points: np.ndarray, b: int) -> dict:
    """Evaluate the base variables of every column at ``points`` (shape (m, b))."""
    out = {}
    for n, c in cols.items():
        radii = [(c.shape[i] - 1) // 2 for i in range(b)]
        ph = None
        for ax in range(b):
            e = np.exp(1j * np.outer(points[:, ax], np.arange(-radii[ax], radii[ax] + 1)))
            ph = e if ph is None else (ph[:, :, None] * e[:, None, :]).reshape(len(points), -1)
        flat = c.reshape((-1,) + c.shape[b:])
        out[n] = np.tensordot(ph, flat, axes=([1], [0]))
    return out


def truncate_family(a: PolyhomSymbol, N: int, grid: int) -> TruncatedOperator:
    """Op(a(b)) on |n| <= N for every b on the uniform ``grid x ... x grid`` base grid."""
    b = a.rank - 1
    pts = 2 * np.pi * np.arange(grid) / grid
    mesh = np.stack(np.meshgrid(*([pts] * b), indexing="ij"), -1).reshape(-1, b)
    cols = _columns_at(_family_columns(a, N), mesh, b)
    M = _fill(cols, N, a.k, (len(mesh),))
    return TruncatedOperator(N, a.k, M.reshape((grid,) * b + M.shape[-2:]))


# -- index idempotent -----------------------------------------------------------

def index_idempotent(Q: np.ndarray, P: np.ndarray) -> np.ndarray:
    """e = G^-1 diag(1, 0) G for the lifting G built from Q and its parametrix P.

    Multiplying out the three factors with S0 = 1 - PQ and S1 = 1 - QP gives

        e = [[1 - S0^2, (1 + S0) P S1], [S1 Q, S1^2]].

    Works on stacks of matrices (leading axes are broadcast).
    """
    eye = np.eye(Q.shape[-1], dtype=complex)
    S0 = eye - P @ Q
    S1 = eye - Q @ P
    top = np.concatenate([eye - S0 @ S0, (eye + S0) @ P @ S1], -1)
    bot = np.concatenate([S1 @ Q, S1 @ S1], -1)
    return np.concatenate([top, bot], -2)


def index_idempotent_window(Q: np.ndarray, P: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """The compression of e to ``rows`` (indices into one block) in both blocks.

    Same closed form as :func:`index_idempotent` but only the needed rows and
    columns of the products are formed.
    """
    n = Q.shape[-1]
    eye = np.eye(n, dtype=complex)
    S0r = eye[rows] - P[..., rows, :] @ Q          # rows of S0
    S1r = eye[rows] - Q[..., rows, :] @ P          # rows of S1
    S1c = eye[:, rows] - Q @ P[..., :, rows]       # columns of S1
    S0c = eye[:, rows] - P @ Q[..., :, rows]       # columns of S0
    w = len(rows)
    e11 = np.eye(w) - S0r @ S0c
    e12 = (P[..., rows, :] + S0r @ P) @ S1c
    e21 = S1r @ Q[..., :, rows]
    e22 = S1r @ S1c
    return np.concatenate([np.concatenate([e11, e12], -1), np.concatenate([e21, e22], -1)], -2)


def lifting(Q: np.ndarray, P: np.ndarray) -> tuple:
    """(G, G^-1) as explicit block products, for checks of the closed form."""
    n = Q.shape[-1]
    eye = np.broadcast_to(np.eye(n, dtype=complex), Q.shape)
    zero = np.zeros_like(Q)

    def blk(a, b, c, d):
        return np.concatenate([np.concatenate([a, b], -1), np.concatenate([c, d], -1)], -2)

    G = blk(zero, eye, -eye, P) @ blk(eye, zero, Q, eye) @ blk(eye, -P, zero, eye)
    Ginv = blk(eye, P, zero, eye) @ blk(eye, zero, -Q, eye) @ blk(P, -eye, eye, zero)
    return G, Ginv


@dataclass
class IdempotentTrace:
    """tr((e - p)^(2n+1)) on interior modes and its nearest integer."""

    e_trace: complex
    rounded: int | None
    distance: float
    N: int
    N_big: int

    def __iter__(self):
        return iter((self.e_trace, self.rounded))


def _interior_trace(D: np.ndarray, N_big: int, N: int, k: int, power: int) -> complex:
    size = (2 * N_big + 1) * k
    off = (N_big - N) * k
    idx = np.r_[off:off + (2 * N + 1) * k, size + off:size + off + (2 * N + 1) * k]
    X = D[..., idx[:, None], idx[None, :]]
    if power > 1:
        X = np.linalg.matrix_power(X, power)
    return np.trace(X, axis1=-2, axis2=-1)


def index_idempotent_pairing(q: PolyhomSymbol, N: int = 128, J: int = 4, *, power: int = 1,
                             p: PolyhomSymbol | None = None, buffer: int | None = None,
                             u: np.ndarray | None = None) -> IdempotentTrace:
    """tr((e - p)^power) over the modes |n| <= N of both blocks.

    Q and P are truncated at ``N + buffer`` (default ``4 (J + 2)``) so the
    truncation edge stays out of the trace.  ``u`` optionally conjugates e
    (a similarity probe); it must act on the full doubled space.
    """
    if q.rank != 1:
        raise ValueError("point-cycle oracle: freeze the base variables first")
    if p is None:
        p = parametrix(q, J)
    Nb = N + (buffer_width(J) if buffer is None else buffer)
    Q = truncate_op(q, Nb).matrix
    P = truncate_op(p, Nb).matrix
    n = Q.shape[-1]
    inner = np.r_[(Nb - N) * q.k:(Nb + N + 1) * q.k]
    if power == 1 and u is None:
        # only the diagonals of S0^2 and S1^2 enter the trace
        eye = np.eye(n, dtype=complex)
        S0 = (eye - P @ Q)[inner]
        S1 = (eye - Q @ P)[inner]
        S0c = (eye - P @ Q)[:, inner]
        S1c = (eye - Q @ P)[:, inner]
        val = complex(np.einsum("ij,ji->", S1, S1c) - np.einsum("ij,ji->", S0, S0c))
    else:
        e = index_idempotent(Q, P)
        if u is not None:
            e = np.linalg.solve(u, e @ u)
        proj = np.zeros_like(e)
        proj[:n, :n] = np.eye(n)
        val = complex(_interior_trace(e - proj, Nb, N, q.k, power))
    r = round(val.real)
    dist = abs(val - r)
    if dist > 1e-2:
        log.warning("idempotent trace %.6g is not near an integer", val.real)
        return IdempotentTrace(val, None, dist, N, Nb)
    return IdempotentTrace(val, int(r), dist, N, Nb)


# -- winding numbers ------------------------------------------------------------

def winding_number(f: TrigPoly, grid: int = 4096, *, floor: float = 1e-8) -> int:
    """Argument-principle winding of f (of det f for matrices) around the circle."""
    if f.rank != 1:
        raise ValueError("winding_number expects a trig poly on the circle")
    vals = f.on_grid(grid)
    z = vals[:, 0, 0] if f.k == 1 else np.linalg.det(vals)
    mag = np.abs(z)
    if mag.min() <= floor * max(mag.max(), 1.0):
        raise EllipticityError(f"function nearly vanishes on the circle (min {mag.min():.2e})")
    steps = np.angle(np.roll(z, -1) / z)
    w = steps.sum() / (2 * np.pi)
    return int(round(w))


# -- lattice Chern numbers ------------------------------------------------------

def frames(e: np.ndarray, threshold: float = 0.5):
    """Orthonormal bases of the images of a stack of (near-)idempotents.

    Returns an array of shape ``lead + (d, r)``; raises RankJump when the number
    of singular values above ``threshold`` varies.
    """
    U, s, _ = np.linalg.svd(e)
    ranks = (s > threshold).sum(-1)
    if ranks.min() != ranks.max():
        raise RankJump(f"image rank varies between {ranks.min()} and {ranks.max()}")
    gap = np.abs(s - threshold).min()
    if gap < 0.1:
        log.warning("singular values come within %.3g of the rank threshold", gap)
    return U[..., : int(ranks.flat[0])]


def chern_number(e_family: np.ndarray, *, threshold: float = 0.5, basis: np.ndarray | None = None,
                 tol: float = 1e-2) -> int:
    """First Chern number (i / 2 pi) int tr F of the image bundle over a G x G grid.

    Lattice link variables ``U_mu(l) = det(psi(l)^* psi(l + mu)) / |...|``; the
    plaquette phases are summed.  Output is exact by construction; a total
    further than ``tol`` from an integer signals an under-resolved grid.
    """
    psi = frames(e_family, threshold) if basis is None else basis

    def link(axis):
        nxt = np.roll(psi, -1, axis=axis)
        d = np.linalg.det(np.conj(np.swapaxes(psi, -1, -2)) @ nxt)
        return d / np.abs(d)

    U1, U2 = link(0), link(1)
    F = np.angle(U1 * np.roll(U2, -1, axis=0) / (np.roll(U1, -1, axis=1) * U2))
    # (1 / 2 pi i) sum i F is the Berry-phase count; Chern-Weil c1 = (i / 2 pi) tr F
    # carries the opposite sign
    c = -F.sum() / (2 * np.pi)
    r = round(c)
    if abs(c - r) > tol:
        raise OracleInstability(f"lattice Chern sum {c:.6g} is not an integer")
    return int(r)


def _support_radius(D: np.ndarray, N_big: int, N: int, k: int, tol: float) -> int:
    """Largest |n| <= N whose rows or columns of D (in either block) exceed tol."""
    size = (2 * N_big + 1) * k
    mass = np.abs(D).max(axis=tuple(range(D.ndim - 1)))
    mass = np.maximum(mass, np.abs(D).max(axis=tuple(range(D.ndim - 2)) + (D.ndim - 1,)))
    modes = np.abs((np.arange(mass.size) % size) // k - N_big)
    # the truncation edge (|n| > N) always shows up and is excluded
    hit = modes[(mass > tol) & (modes <= N)]
    return int(hit.max()) if hit.size else 0


def family_index_bundle(q: PolyhomSymbol, N: int = 64, grid: int = 24, J: int = 4, *,
                        p: PolyhomSymbol | None = None, window: int | None = None,
                        chunk: int = 16, tol: float = 1e-6):
    """Frames of im e(b), restricted to the modes |n| <= window, over the base grid.

    Q(b), P(b) are truncated at ``N + 4 (J + 2)``.  Outside the modes where
    e - p is nonzero the image is the constant range of p, so the frames are
    taken on a window that covers the support of e - p (found from the data
    when ``window`` is None, at most N).  Returns ``(frames, window)``.
    """
    if q.rank != 3:
        raise ValueError("family oracle expects a symbol over T^2 x S^1")
    if p is None:
        p = parametrix(q, J)
    Nb = N + buffer_width(J)
    b = q.rank - 1
    pts = 2 * np.pi * np.arange(grid) / grid
    mesh = np.stack(np.meshgrid(pts, pts, indexing="ij"), -1).reshape(-1, b)
    qc, pc = _family_columns(q, Nb), _family_columns(p, Nb)
    def e_at(sl, rows):
        Q = _fill(_columns_at(qc, mesh[sl], b), Nb, q.k, (len(mesh[sl]),))
        P = _fill(_columns_at(pc, mesh[sl], b), Nb, q.k, (len(mesh[sl]),))
        return index_idempotent_window(Q, P, rows)

    if window is None:
        probe = np.linspace(0, len(mesh) - 1, 8).astype(int)
        inner = np.r_[(Nb - N) * q.k:(Nb + N + 1) * q.k]
        e = e_at(probe, inner)
        D = e - np.diag(np.r_[np.ones(len(inner)), np.zeros(len(inner))])
        window = min(N, _support_radius(D, N, N, q.k, tol) + 2)
    rows = np.r_[(Nb - window) * q.k:(Nb + window + 1) * q.k]
    out = []
    for start in range(0, len(mesh), chunk):
        out.append(frames(e_at(slice(start, start + chunk), rows)))
    ranks = {f.shape[-1] for f in out}
    if len(ranks) != 1:
        raise RankJump(f"image rank varies across the grid: {sorted(ranks)}")
    F = np.concatenate(out, 0)
    return F.reshape((grid, grid) + F.shape[1:]), window


def family_chern_number(q: PolyhomSymbol, N: int = 64, grid: int = 24, J: int = 4, **kw) -> int:
    """Chern number of the index bundle [im e] - [im p] (the second term is trivial)."""
    F, _ = family_index_bundle(q, N, grid, J, **kw)
    return chern_number(None, basis=F)

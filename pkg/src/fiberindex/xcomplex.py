"""Finite-dimensional models of X-complexes, renormalized boundaries and the
chi / eta cochains of the bivariant Chern character.

Algebras are subalgebras of matrix algebras given by a basis; everything is
dense linear algebra.  One-forms of a (non-unital) algebra M are
``M+ (x) M`` with ``M+ = C 1 + M``; a vector of length ``(d + 1) d`` indexes
``(y, z) -> y dz`` with ``y = 0`` standing for the unit.  The commutator
quotient ``Omega^1 M_nat`` is represented by orthonormal coordinates on the
orthogonal complement of the relation span

    x (y dz) - (y dz) x  =  xy dz - y d(zx) + yz dx.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import linalg

__all__ = [
    "PIVOT_TOL",
    "FiniteAlgebra",
    "XComplex",
    "build_x_complex",
    "rref",
    "span",
    "renormalize_extend",
    "FiniteExtension",
    "connecting_cocycle_finite",
    "triangular_model",
    "trace_on_power",
    "XElement",
    "SuperElement",
    "SuperConvention",
    "CONVENTION",
    "supertrace",
    "chi_coefficient",
    "eta_coefficients",
    "chi_cochain",
    "eta_cochain",
    "hochschild_b",
    "connes_B",
    "apply_cochain",
    "transgression_sides",
    "transgression_check",
    "super_sampler",
    "random_form",
]

PIVOT_TOL = 1e-10


# -- linear algebra helpers -------------------------------------------------------

def rref(A: np.ndarray, tol: float = PIVOT_TOL):
    """Reduced row echelon form with partial pivoting; returns (R, pivot columns)."""
    R = np.array(A, dtype=complex, copy=True)
    rows, cols = R.shape
    piv = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        i = r + int(np.argmax(np.abs(R[r:, c])))
        if abs(R[i, c]) <= tol:
            continue
        R[[r, i]] = R[[i, r]]
        R[r] /= R[r, c]
        others = [k for k in range(rows) if k != r]
        R[others] -= np.outer(R[others, c], R[r])
        piv.append(c)
        r += 1
    return R[:r], piv


def span(vectors: np.ndarray, tol: float = PIVOT_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the column span."""
    vectors = np.asarray(vectors, dtype=complex)
    if vectors.size == 0:
        return np.zeros((vectors.shape[0], 0), dtype=complex)
    U, sv, _ = np.linalg.svd(vectors, full_matrices=False)
    scale = max(1.0, float(np.abs(vectors).max()))
    return U[:, sv > tol * scale]


def _contains(basis: np.ndarray, vectors: np.ndarray, tol: float = 1e-9) -> bool:
    if vectors.size == 0:
        return True
    if basis.shape[1] == 0:
        return bool(np.abs(vectors).max() <= tol)
    resid = vectors - basis @ (basis.conj().T @ vectors)
    return bool(np.abs(resid).max() <= tol * max(1.0, np.abs(vectors).max()))


def _complex_tree(obj):
    """Nested lists of numbers or strings such as "1+2j" -> nested complex lists."""
    if isinstance(obj, list):
        return [_complex_tree(v) for v in obj]
    if isinstance(obj, str):
        return complex(obj.replace(" ", ""))
    return complex(obj)


# -- finite algebras --------------------------------------------------------------

class FiniteAlgebra:
    """Subalgebra of k x k matrices spanned by ``basis`` (a stack of matrices)."""

    def __init__(self, basis: np.ndarray, name: str = "", ideal: np.ndarray | None = None,
                 unitalized: bool = False):
        B = np.asarray(basis, dtype=complex)
        if B.ndim != 3 or B.shape[1] != B.shape[2]:
            raise ValueError("basis must be a stack of square matrices")
        self.basis = B
        self.d = B.shape[0]
        self.k = B.shape[1]
        self.name = name
        flat = B.reshape(self.d, -1).T
        if np.linalg.matrix_rank(flat, tol=PIVOT_TOL) != self.d:
            raise ValueError("basis matrices are linearly dependent")
        self._flat = flat
        self._pinv = np.linalg.pinv(flat)
        prods = np.einsum("iab,jbc->ijac", B, B).reshape(self.d * self.d, -1).T
        c = self._pinv @ prods
        if np.abs(flat @ c - prods).max() > 1e-10:
            raise ValueError("span of the basis is not closed under products")
        # structure constants: e_i e_j = sum_k C[i, j, k] e_k
        self.C = c.T.reshape(self.d, self.d, self.d)
        err = self.associativity_defect()
        if err > 1e-12:
            raise ValueError(f"structure constants are not associative ({err:.2e})")
        self.unitalized = bool(unitalized)
        self.ideal = None
        self.nilpotent = False
        self.nilpotency = None
        if ideal is not None:
            self.set_ideal(ideal)

    def set_ideal(self, ideal: np.ndarray) -> None:
        """Attach a distinguished ideal (columns of coordinates) and record its nilpotency."""
        I = span(np.asarray(ideal, dtype=complex).reshape(self.d, -1))
        if not self.is_ideal(I):
            raise ValueError("subspace is not a two-sided ideal")
        self.ideal = I
        self.nilpotency = self.nilpotency_degree(I)
        self.nilpotent = self.nilpotency is not None

    @classmethod
    def full_matrix(cls, k: int) -> "FiniteAlgebra":
        eye = np.eye(k * k).reshape(k * k, k, k)
        return cls(eye, f"M_{k}")

    @classmethod
    def load(cls, path) -> "FiniteAlgebra":
        """Read structure constants from a YAML or JSON file.

        Keys: ``structure_constants`` (d x d x d nested list; complex entries
        as numbers or strings like "1+2j"), optional ``ideal`` (list of coordinate
        vectors), ``name`` and ``unitalized``.
        """
        import yaml
        with open(path) as fh:
            data = yaml.safe_load(fh)
        C = np.asarray(_complex_tree(data["structure_constants"]), dtype=complex)
        if C.ndim != 3 or len(set(C.shape)) != 1:
            raise ValueError("structure constants must be a d x d x d array")
        ideal = data.get("ideal")
        I = None if ideal is None else np.asarray(_complex_tree(ideal), dtype=complex).T
        return cls.from_structure_constants(C, data.get("name", str(path)), ideal=I,
                                            unitalized=bool(data.get("unitalized", False)))

    @classmethod
    def from_structure_constants(cls, C: np.ndarray, name: str = "", ideal: np.ndarray | None = None,
                                 unitalized: bool = False) -> "FiniteAlgebra":
        """Realize structure constants through the left regular representation of the unitalization."""
        C = np.asarray(C, dtype=complex)
        d = C.shape[0]
        # L(e_i) acts on (1, e_1..e_d): 1 -> e_i, e_j -> e_i e_j
        L = np.zeros((d, d + 1, d + 1), dtype=complex)
        for i in range(d):
            L[i, 1 + i, 0] = 1.0
            L[i, 1:, 1:] = C[i].T
        if np.abs(np.einsum("ijm,mkn->ijkn", C, C) - np.einsum("jkm,imn->ijkn", C, C)).max(initial=0.0) > 1e-12:
            raise ValueError("structure constants are not associative")
        return cls(L, name, ideal=ideal, unitalized=unitalized)

    def associativity_defect(self) -> float:
        C = self.C
        left = np.einsum("ijm,mkn->ijkn", C, C)
        right = np.einsum("jkm,imn->ijkn", C, C)
        return float(np.abs(left - right).max()) if self.d else 0.0

    # coordinates <-> matrices
    def vec(self, m: np.ndarray) -> np.ndarray:
        return self._pinv @ np.asarray(m, dtype=complex).reshape(-1)

    def mat(self, v: np.ndarray) -> np.ndarray:
        return np.tensordot(np.asarray(v, dtype=complex), self.basis, axes=(0, 0))

    def mul(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.einsum("i,j,ijk->k", u, v, self.C)

    def commutator(self, u, v):
        return self.mul(u, v) - self.mul(v, u)

    # subspaces (columns are coordinate vectors)
    def products(self, U: np.ndarray, V: np.ndarray) -> np.ndarray:
        if U.shape[1] == 0 or V.shape[1] == 0:
            return np.zeros((self.d, 0), dtype=complex)
        P = np.einsum("ia,jb,ijk->kab", U, V, self.C).reshape(self.d, -1)
        return span(P)

    def commutators(self, U: np.ndarray, V: np.ndarray) -> np.ndarray:
        if U.shape[1] == 0 or V.shape[1] == 0:
            return np.zeros((self.d, 0), dtype=complex)
        P = np.einsum("ia,jb,ijk->kab", U, V, self.C - self.C.transpose(1, 0, 2)).reshape(self.d, -1)
        return span(P)

    def is_ideal(self, I: np.ndarray) -> bool:
        E = np.eye(self.d)
        return _contains(I, self.products(E, I)) and _contains(I, self.products(I, E))

    def power(self, I: np.ndarray, n: int) -> np.ndarray:
        """Span of n-fold products of I (n >= 1)."""
        out = I
        for _ in range(n - 1):
            out = self.products(out, I)
        return out

    def nilpotency_degree(self, I: np.ndarray, max_power: int = 64) -> int | None:
        """Smallest n with I^n = 0 (None if above max_power)."""
        P = I
        for n in range(1, max_power + 1):
            if P.shape[1] == 0:
                return n
            P = self.products(P, I)
        return None

    def unit(self) -> np.ndarray | None:
        v = self.vec(np.eye(self.k))
        return v if np.allclose(self.mat(v), np.eye(self.k), atol=1e-12) else None


# -- X-complex --------------------------------------------------------------------

@dataclass
class XComplex:
    """X(M) = M <-> Omega^1 M_nat with its boundary matrices."""

    algebra: FiniteAlgebra
    relations: np.ndarray       # columns span the commutator subspace of Omega^1 M
    nat: np.ndarray             # orthonormal basis of the complement; coordinates = nat^* w
    nat_d: np.ndarray           # M -> Omega^1 M_nat, x -> class of dx
    b_bar: np.ndarray           # Omega^1 M_nat -> M
    b_full: np.ndarray = field(repr=False, default=None)  # Omega^1 M -> M on representatives

    @property
    def odd_dim(self) -> int:
        return self.nat.shape[1]

    def one_form(self, y: np.ndarray | None, z: np.ndarray) -> np.ndarray:
        """Representative vector of y dz (y = None for the unit)."""
        d = self.algebra.d
        yy = np.zeros(d + 1, dtype=complex)
        if y is None:
            yy[0] = 1.0
        else:
            yy[1:] = y
        return np.outer(yy, z).reshape(-1)

    def classify(self, w: np.ndarray) -> np.ndarray:
        """Coordinates in Omega^1 M_nat of a representative."""
        return self.nat.conj().T @ w

    def boundary_odd(self, coords: np.ndarray) -> np.ndarray:
        return self.b_bar @ coords

    def boundary_even(self, x: np.ndarray) -> np.ndarray:
        return self.nat_d @ x

    # filtration by an ideal J of M (Cuntz-Quillen)
    def _Jplus(self, J: np.ndarray, n: int) -> np.ndarray:
        """J^n for n > 0, the unitalization M+ for n <= 0 (as subspace of C + M)."""
        d = self.algebra.d
        if n <= 0:
            return np.eye(d + 1, dtype=complex)
        P = self.algebra.power(J, n)
        return np.vstack([np.zeros((1, P.shape[1])), P])

    def _forms(self, Y: np.ndarray, Z: np.ndarray) -> np.ndarray:
        if Y.shape[1] == 0 or Z.shape[1] == 0:
            return np.zeros((self.odd_dim, 0), dtype=complex)
        W = np.einsum("ya,zb->yzab", Y, Z).reshape(Y.shape[0] * Z.shape[0], -1)
        return span(self.classify(W))

    def filtration(self, J: np.ndarray, level: int) -> tuple:
        """(even subspace of M, odd subspace of Omega^1 M_nat) of F^level_J X(M)."""
        A = self.algebra
        E = np.eye(A.d, dtype=complex)
        n, odd_level = divmod(level, 2)
        if odd_level == 0:
            even = span(np.hstack([A.power(J, n + 1), A.commutators(A.power(J, n), E) if n > 0
                                   else A.commutators(E, E)]))
            odd = self._forms(self._Jplus(J, n), E)
        else:
            even = A.power(J, n + 1)
            odd = span(np.hstack([self._forms(self._Jplus(J, n + 1), E), self._forms(self._Jplus(J, n), J)]))
        return even, odd


def build_x_complex(A: FiniteAlgebra, order: Sequence[int] | None = None) -> XComplex:
    """Commutator quotient, natural d and b-bar for the algebra A.

    ``order`` permutes the relation generators before elimination (the span,
    and hence the quotient, must not depend on it).
    """
    d = A.d
    if d > 64:
        raise ValueError("dimension above 64 is outside the dense-algebra range")
    C = A.C
    # Cplus[y, z, k]: product of (unit or e_y) with e_z
    Cplus = np.zeros((d + 1, d, d), dtype=complex)
    Cplus[0] = np.eye(d)
    Cplus[1:] = C
    rels = []
    for x in range(d):
        for y in range(d + 1):
            for z in range(d):
                w = np.zeros((d + 1, d), dtype=complex)
                # x y (x) z
                if y == 0:
                    w[1 + x, z] += 1.0
                else:
                    w[1:, z] += C[x, y - 1]
                # - y (x) z x
                w[y, :] -= C[z, x]
                # + y z (x) x
                w[1:, x] += Cplus[y, z]
                rels.append(w.reshape(-1))
    R = np.array(rels).T
    if order is not None:
        R = R[:, list(order)]
    Rr, _ = rref(R.T)
    relations = span(Rr.T)
    full = np.eye((d + 1) * d, dtype=complex)
    if relations.shape[1]:
        proj = full - relations @ relations.conj().T
    else:
        proj = full
    nat = span(proj)
    # b on representatives: y dz -> [y, z]
    b_full = np.zeros((d, (d + 1) * d), dtype=complex)
    for y in range(1, d + 1):
        for z in range(d):
            b_full[:, y * d + z] = C[y - 1, z] - C[z, y - 1]
    if relations.shape[1] and np.abs(b_full @ relations).max() > 1e-9:
        raise ArithmeticError("b does not vanish on the commutator subspace")
    nat_d = nat.conj().T @ full[:, :d]   # columns: class of 1 (x) e_x
    b_bar = b_full @ nat
    return XComplex(A, relations, nat, nat_d, b_bar, b_full)


# -- renormalization on finite models ---------------------------------------------

def renormalize_extend(tau: np.ndarray, domain: np.ndarray, X: XComplex | FiniteAlgebra,
                       trace_check: np.ndarray | None = None, complement: np.ndarray | None = None,
                       rng: np.random.Generator | None = None):
    """Extend a functional given on a subspace of M to all of M.

    ``tau`` holds the values on the columns of ``domain``.  The extension is
    zero on ``complement`` (a random complement when None and ``rng`` is set,
    the orthogonal complement otherwise).  Returns (tau_R as a row vector on M,
    tau_R boundary as a row vector on Omega^1 M_nat, or None when only the
    algebra is given).  ``trace_check`` is a
    subspace on which tau must vanish.
    """
    d = X.d if isinstance(X, FiniteAlgebra) else X.algebra.d
    domain = np.asarray(domain, dtype=complex)
    tau = np.asarray(tau, dtype=complex)
    if complement is None:
        if domain.shape[1]:
            comp = linalg.null_space(domain.conj().T, rcond=PIVOT_TOL)
        else:
            comp = np.eye(d, dtype=complex)
        if rng is not None and comp.shape[1] and domain.shape[1]:
            # tilt the orthogonal complement by a random map into the domain
            tilt = rng.normal(size=(domain.shape[1], comp.shape[1])) + 1j * rng.normal(size=(domain.shape[1], comp.shape[1]))
            comp = comp + domain @ tilt
        complement = comp
    Bfull = np.hstack([domain, complement])
    if np.linalg.matrix_rank(Bfull, tol=PIVOT_TOL) != d:
        raise ValueError("domain and complement do not span the algebra")
    vals = np.concatenate([tau, np.zeros(complement.shape[1], dtype=complex)])
    tau_R = np.linalg.solve(Bfull.T, vals)
    if trace_check is not None and trace_check.shape[1]:
        if np.abs(tau_R @ trace_check).max() > 1e-9:
            raise ValueError("tau is not a trace on the required subspace")
    return tau_R, (None if isinstance(X, FiniteAlgebra) else tau_R @ X.b_bar)


@dataclass
class FiniteExtension:
    """A finite model of the lifting diagram with nilpotent N.

    M is a matrix algebra with ideals R and N (column spans of coordinates);
    A = M / (R + N) is identified with a complement ``section`` whose columns
    are the images of a basis of A under the default splitting.
    """

    algebra: FiniteAlgebra
    R: np.ndarray
    N: np.ndarray
    section: np.ndarray

    def __post_init__(self):
        A = self.algebra
        for name, I in (("R", self.R), ("N", self.N)):
            if not A.is_ideal(I):
                raise ValueError(f"{name} is not a two-sided ideal")
        if A.nilpotency_degree(self.N) is None:
            raise ValueError("N is not nilpotent")
        self.kernel = span(np.hstack([self.R, self.N]))

    @property
    def nilpotency(self) -> int:
        return self.algebra.nilpotency_degree(self.N)

    def splitting(self, perturbation: np.ndarray | None = None) -> np.ndarray:
        """Columns sigma(a_i); the perturbation must take values in R + N."""
        if perturbation is None:
            return self.section
        if not _contains(self.kernel, perturbation):
            raise ValueError("a change of splitting must take values in R + N")
        return self.section + perturbation


def connecting_cocycle_finite(ext: FiniteExtension, tau_R: np.ndarray, sigma: np.ndarray,
                              g: np.ndarray, h: np.ndarray, L: int) -> complex:
    """tau_R boundary of sigma_* applied to nat(g^-1 d g), with g^-1 truncated at length L.

    ``g`` and ``h`` are coordinates (in A's basis) of an invertible of the
    unitalized quotient written as ``1 + a`` and its inverse ``1 + a'``; the
    lifted inverse in the tensor algebra is ``hh sum_{k <= L} (1 - gg hh)^k``
    with gg, hh the tensor-algebra lifts, pushed forward by sigma.
    """
    A = ext.algebra
    one = np.eye(A.k, dtype=complex)
    G = one + A.mat(sigma @ g)
    H = one + A.mat(sigma @ h)
    S = one - G @ H
    Ginv = np.zeros_like(G)
    Sk = one
    for _ in range(L + 1):
        Ginv = Ginv + H @ Sk
        Sk = Sk @ S
    comm = Ginv @ G - G @ Ginv
    return complex(tau_R @ A.vec(comm))


def triangular_model(p: int = 2, block: int = 2) -> FiniteExtension:
    """Block upper-triangular 2 x 2 matrices over M_block, tensored with C[t]/t^p.

    R is (first block row) (x) C[t]/t^p, N is everything (x) t C[t]/t^p and
    the quotient A = M / (R + N) is M_block, the lower-right corner.  The
    default section is the multiplicative corner embedding (x) 1.
    """
    if p < 1 or block < 1:
        raise ValueError("p and block must be positive")
    m = block
    units = []
    labels = []
    for (R_, C_) in ((0, 0), (0, 1), (1, 1)):
        for a in range(m):
            for b in range(m):
                E = np.zeros((2 * m, 2 * m))
                E[R_ * m + a, C_ * m + b] = 1.0
                units.append(E)
                labels.append((R_, C_))
    shift = np.eye(p, k=-1)
    tp = [np.linalg.matrix_power(shift, j) for j in range(p)]
    basis = np.array([np.kron(e, t) for e in units for t in tp])
    A = FiniteAlgebra(basis, f"T2(M{m})[t]/t^{p}")
    n_units = len(units)
    pick = lambda pred: np.eye(n_units * p)[:, [u * p + j for u in range(n_units) for j in range(p)
                                                if pred(labels[u], j)]].astype(complex)
    R = pick(lambda lab, j: lab[0] == 0)
    N = pick(lambda lab, j: j >= 1)
    section = pick(lambda lab, j: lab == (1, 1) and j == 0)
    return FiniteExtension(A, R, N, section)


def trace_on_power(ext: FiniteExtension, k: int, rng: np.random.Generator):
    """A random functional on R^{k+1} vanishing on [R^k, R].

    Returns (values on an orthonormal basis of R^{k+1}, that basis, the span
    of [R^k, R]).
    """
    A = ext.algebra
    dom = A.power(ext.R, k + 1)
    comm = A.commutators(A.power(ext.R, k), ext.R)
    phi = rng.normal(size=A.d) + 1j * rng.normal(size=A.d)
    if comm.shape[1]:
        phi = phi - (phi @ comm) @ comm.conj().T
    return phi @ dom, dom, comm


# -- superalgebra cochains -----------------------------------------------------------

@dataclass
class XElement:
    """Element of X(M): even part in algebra coordinates, odd part in nat-quotient coordinates."""

    even: np.ndarray
    odd: np.ndarray

    @classmethod
    def zero(cls, X: XComplex) -> "XElement":
        return cls(np.zeros(X.algebra.d, dtype=complex), np.zeros(X.odd_dim, dtype=complex))

    def __add__(self, other: "XElement") -> "XElement":
        return XElement(self.even + other.even, self.odd + other.odd)

    def __sub__(self, other: "XElement") -> "XElement":
        return XElement(self.even - other.even, self.odd - other.odd)

    def __rmul__(self, c) -> "XElement":
        return XElement(c * self.even, c * self.odd)

    def boundary(self, X: XComplex) -> "XElement":
        """Even -> odd by nat d, odd -> even by b-bar."""
        return XElement(X.b_bar @ self.odd, X.nat_d @ self.even)

    def max_abs(self) -> float:
        return float(max(np.abs(self.even).max(initial=0.0), np.abs(self.odd).max(initial=0.0)))

    def pair(self, tau_even: np.ndarray, tau_odd: np.ndarray) -> complex:
        return complex(tau_even @ self.even + tau_odd @ self.odd)


@dataclass
class SuperElement:
    """``eps^grade (x) matrix`` with ``matrix`` a 2 x 2 block matrix over M (size 2k)."""

    matrix: np.ndarray
    grade: int = 0

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.grade not in (0, 1):
            raise ValueError("Clifford grade is 0 or 1")
        if self.matrix.shape[0] % 2:
            raise ValueError("block matrices have even size")

    @property
    def k(self) -> int:
        return self.matrix.shape[0] // 2

    @classmethod
    def F(cls, k: int) -> "SuperElement":
        return cls(_gamma(k), 1)

    def __matmul__(self, other: "SuperElement") -> "SuperElement":
        # the matrix entries are even, so eps commutes through; eps^2 = 1
        return SuperElement(self.matrix @ other.matrix, (self.grade + other.grade) % 2)

    def __add__(self, other: "SuperElement") -> "SuperElement":
        if self.grade != other.grade:
            raise ValueError("cannot add elements of different Clifford grade")
        return SuperElement(self.matrix + other.matrix, self.grade)

    def __sub__(self, other: "SuperElement") -> "SuperElement":
        return self + SuperElement(-other.matrix, other.grade)

    def supercommutator(self, other: "SuperElement") -> "SuperElement":
        sgn = (-1) ** (self.grade * other.grade)
        return SuperElement((self @ other).matrix - sgn * (other @ self).matrix, (self.grade + other.grade) % 2)

    def supertrace(self) -> np.ndarray:
        if self.grade != 1:
            return np.zeros((self.k, self.k), dtype=complex)
        return supertrace(self.matrix, self.k)


@dataclass(frozen=True)
class SuperConvention:
    """Sign choices left open in the cochain formulas.

    ``nat_sign``: sign of moving the trailing factor b to the front in
    nat(a dx b); "graded" uses (-1)^{|b| (|a| + 1)} with |.| the Clifford
    degree, "plain" uses +1.  ``B_sign``: exponent convention of Connes' B
    ("n i" for (-1)^{n i}, "none" for all plus).  ``cyclic_sign``: whether
    the cyclic sum in chi_0 carries the signature of the permutation.
    """

    nat_sign: str = "graded"
    B_sign: str = "n i"
    cyclic_sign: bool = True


# the combination under which chi^n - chi^{n+2} = d eta - eta (b + B) holds
# with the overall sign +1 (fixed by the transgression check itself)
CONVENTION = SuperConvention()
SQRT_2I = np.sqrt(2j)


def supertrace(Y: np.ndarray, blocks: int) -> np.ndarray:
    """Odd supertrace of eps (x) Y: -sqrt(2i) (Y_11 + Y_22) for the 2 x 2 block split."""
    Y11 = Y[..., :blocks, :blocks]
    Y22 = Y[..., blocks:, blocks:]
    return -SQRT_2I * (Y11 + Y22)


def _gamma(k: int) -> np.ndarray:
    return np.diag(np.r_[np.ones(k), -np.ones(k)]).astype(complex)


def _comm_F(x: np.ndarray, Gm: np.ndarray) -> np.ndarray:
    # [F, x] = eps (x) (Gamma x - x Gamma) for even x
    return Gm @ x - x @ Gm


def _chain(mats):
    out = None
    for m in mats:
        out = m if out is None else out @ m
    return out


def _nat_trace(X: XComplex, a: np.ndarray | None, dx: np.ndarray, bmat: np.ndarray | None,
               sign: float, blocks: int) -> np.ndarray:
    """Coordinates of tr_s nat(a dx b) = sign * tr_s nat(b a dx).

    a, b are block matrices over M (None for the unit); the supertrace is
    applied blockwise: sum over l, k of nat((b a)_{lk} d x_{kl}).
    """
    A = X.algebra
    k = blocks
    if a is None and bmat is None:
        ba = None
    elif a is None:
        ba = bmat
    elif bmat is None:
        ba = a
    else:
        ba = bmat @ a
    w = np.zeros(X.nat.shape[0], dtype=complex)
    for l in range(2):
        for kk in range(2):
            z = A.vec(dx[kk * k:(kk + 1) * k, l * k:(l + 1) * k])
            if not np.any(np.abs(z) > 0):
                continue
            if ba is None:
                if l == kk:
                    w += X.one_form(None, z)
            else:
                y = A.vec(ba[l * k:(l + 1) * k, kk * k:(kk + 1) * k])
                if np.any(np.abs(y) > 0):
                    w += X.one_form(y, z)
    return sign * (-SQRT_2I) * X.classify(w)


def _move_sign(conv: SuperConvention, deg_a: int, deg_b: int) -> float:
    if conv.nat_sign == "graded":
        return (-1.0) ** ((deg_b % 2) * ((deg_a + 1) % 2))
    return 1.0


def _entries(xs: Sequence, n_expected: int, k: int):
    """Validate arity and grading; returns (x0 or None, list of matrices)."""
    xs = list(xs)
    if len(xs) != n_expected:
        raise ValueError(f"expected {n_expected} entries, got {len(xs)}")
    out = []
    for x in xs:
        if isinstance(x, SuperElement):
            if x.grade != 0:
                raise ValueError("entries must be even-graded")
            x = x.matrix
        if x is not None:
            x = np.asarray(x, dtype=complex)
            if x.shape != (2 * k, 2 * k):
                raise ValueError(f"entries must be {2 * k} x {2 * k} block matrices")
        out.append(x)
    if any(x is None for x in out[1:]):
        raise ValueError("only the leading entry may be the unit")
    return out[0], out[1:]


def chi_coefficient(n: int) -> float:
    return -math.gamma(1 + n / 2) / math.factorial(n + 1)


def eta_coefficients(n: int) -> tuple:
    g = math.gamma(n / 2 + 1)
    return g / math.factorial(n + 2), g / math.factorial(n + 3)


def chi_cochain(n: int, xs: Sequence, slot: int, X: XComplex, conv: SuperConvention = CONVENTION) -> XElement:
    """chi^n_0 on x0 dx1..dxn (slot 0, even value) or chi^n_1 on x0 dx1..dx(n+1)
    (slot 1, odd value).  x0 = None is the unit; entries are 2k x 2k block
    matrices over M following the M^s_+ pattern (or even SuperElements)."""
    if n % 2 == 0 or n < 1:
        raise ValueError("chi is defined for odd n >= 1")
    k = X.algebra.k
    Gm = _gamma(k)
    coef = chi_coefficient(n)
    out = XElement.zero(X)
    if slot == 0:
        x0, rest = _entries(xs, n + 1, k)
        seq = [x0] + rest
        m = n + 1
        total = np.zeros((k, k), dtype=complex)
        for j in range(m):
            perm = [seq[(i + j) % m] for i in range(m)]
            if any(p is None for p in perm[1:]):
                continue  # [F, 1] = 0
            # the cyclic shift by j has signature (-1)^{j n} on n + 1 letters
            sgn = (-1.0) ** (j * n) if conv.cyclic_sign else 1.0
            mats = ([perm[0]] if perm[0] is not None else []) + [_comm_F(p, Gm) for p in perm[1:]]
            total += sgn * supertrace(_chain(mats), k)
        out.even = coef * X.algebra.vec(total)
        return out
    if slot == 1:
        x0, rest = _entries(xs, n + 2, k)
        odd = np.zeros(X.odd_dim, dtype=complex)
        for i in range(1, n + 2):
            left = ([x0] if x0 is not None else []) + [_comm_F(p, Gm) for p in rest[:i - 1]]
            right = [_comm_F(p, Gm) for p in rest[i:]]
            s = _move_sign(conv, i - 1, n + 1 - i)
            odd += _nat_trace(X, _chain(left) if left else None, rest[i - 1],
                              _chain(right) if right else None, s, k)
        out.odd = coef * odd
        return out
    raise ValueError("slot must be 0 or 1")


def eta_cochain(n: int, xs: Sequence, slot: int, X: XComplex, conv: SuperConvention = CONVENTION) -> XElement:
    """eta^{n+1}_0 on x0 dx1..dx(n+1) (slot 0) or eta^{n+1}_1 on x0 dx1..dx(n+2) (slot 1)."""
    if n % 2 == 0 or n < 1:
        raise ValueError("eta is indexed by odd n >= 1")
    k = X.algebra.k
    Gm = _gamma(k)
    one = np.eye(2 * k, dtype=complex)
    c0, c1 = eta_coefficients(n)
    out = XElement.zero(X)
    if slot == 0:
        x0, rest = _entries(xs, n + 2, k)
        X0 = one if x0 is None else x0
        cF = [_comm_F(p, Gm) for p in rest]
        # F x0 [F,x1]..[F,x(n+1)] carries eps^(n+2) = eps
        total = supertrace(_chain([Gm @ X0] + cF), k)
        for i in range(1, n + 2):
            sgn = (-1.0) ** ((n + 1) * i)
            total = total + sgn * supertrace(_chain(cF[i - 1:] + [Gm @ X0] + cF[:i - 1]), k)
        out.even = c0 * 0.5 * X.algebra.vec(total)
        return out
    if slot == 1:
        x0, rest = _entries(xs, n + 3, k)
        X0 = one if x0 is None else x0
        odd = np.zeros(X.odd_dim, dtype=complex)
        for i in range(1, n + 3):
            head = i * (X0 @ Gm) + (n + 3 - i) * (Gm @ X0)
            left = [head] + [_comm_F(p, Gm) for p in rest[:i - 1]]
            right = [_comm_F(p, Gm) for p in rest[i:]]
            # head carries one eps, each [F, .] one more
            s = _move_sign(conv, i, n + 2 - i)
            odd += _nat_trace(X, _chain(left), rest[i - 1], _chain(right) if right else None, s, k)
        out.odd = c1 * 0.5 * odd
        return out
    raise ValueError("slot must be 0 or 1")


# -- (b + B) on noncommutative forms -------------------------------------------------

Form = list  # list of (coefficient, tuple of entries); entry 0 may be None (the unit)


def hochschild_b(form: Form) -> Form:
    out = []
    for c, xs in form:
        n = len(xs) - 1
        if n < 1:
            continue
        for i in range(n):
            a, b = xs[i], xs[i + 1]
            prod = b if a is None else a @ b
            out.append(((-1) ** i * c, xs[:i] + (prod,) + xs[i + 2:]))
        last = xs[n] if xs[0] is None else xs[n] @ xs[0]
        out.append(((-1) ** n * c, (last,) + xs[1:n]))
    return out


def connes_B(form: Form, conv: SuperConvention = CONVENTION) -> Form:
    out = []
    for c, xs in form:
        if xs[0] is None:
            continue  # d1 = 0
        n = len(xs) - 1
        for i in range(n + 1):
            sgn = (-1) ** (n * i) if conv.B_sign == "n i" else 1
            out.append((sgn * c, (None,) + xs[i:] + xs[:i]))
    return out


def apply_cochain(fn: Callable, form: Form, slots: dict, X: XComplex) -> XElement:
    """Sum of fn(entries, slot) over the terms of a form; ``slots`` maps form degree to slot."""
    out = XElement.zero(X)
    for c, xs in form:
        slot = slots.get(len(xs) - 1)
        if slot is not None:
            out = out + c * fn(xs, slot)
    return out


def super_sampler(A: FiniteAlgebra, R: np.ndarray | None = None, scale: float = 1.0):
    """Random 2k x 2k block matrices [[M, R], [R, M]] over the algebra A."""
    Rb = np.eye(A.d, dtype=complex) if R is None else R

    def draw(rng: np.random.Generator) -> np.ndarray:
        def elt(basis):
            c = rng.normal(size=basis.shape[1]) + 1j * rng.normal(size=basis.shape[1])
            return A.mat(basis @ c)
        E = np.eye(A.d, dtype=complex)
        return scale * np.block([[elt(E), elt(Rb)], [elt(Rb), elt(E)]])

    return draw


def random_form(rng: np.random.Generator, degree: int, k: int, unit: bool = False, scale: float = 1.0,
                sampler: Callable | None = None) -> Form:
    """One random term x0 dx1..dx_degree (full 2k x 2k complex entries by default)."""
    if sampler is None:
        def sampler(g):
            return scale * (g.normal(size=(2 * k, 2 * k)) + 1j * g.normal(size=(2 * k, 2 * k)))
    xs = (None if unit else sampler(rng),) + tuple(sampler(rng) for _ in range(degree))
    return [(1.0, xs)]


def transgression_sides(n: int, form: Form, X: XComplex, conv: SuperConvention = CONVENTION):
    """(chi^n - chi^{n+2}, d eta^{n+1} - eta^{n+1} (b + B)) evaluated on a form."""
    chi_n = lambda xs, s: chi_cochain(n, xs, s, X, conv)
    chi_n2 = lambda xs, s: chi_cochain(n + 2, xs, s, X, conv)
    eta = lambda xs, s: eta_cochain(n, xs, s, X, conv)
    lhs = apply_cochain(chi_n, form, {n: 0, n + 1: 1}, X) - apply_cochain(chi_n2, form, {n + 2: 0, n + 3: 1}, X)
    slots = {n + 1: 0, n + 2: 1}
    bB = hochschild_b(form) + connes_B(form, conv)
    rhs = apply_cochain(eta, form, slots, X).boundary(X) - apply_cochain(eta, bB, slots, X)
    return lhs, rhs


def transgression_check(n: int, form: Form, X: XComplex, conv: SuperConvention = CONVENTION,
                        sign: float = 1.0, tau: tuple | None = None) -> float:
    """Max componentwise deviation of chi^n - chi^{n+2} = sign (d eta - eta (b + B)).

    With ``tau = (row on M, row on Omega^1 M_nat)`` both sides are paired
    first and the scalar deviation is returned.
    """
    lhs, rhs = transgression_sides(n, form, X, conv)
    diff = lhs - sign * rhs
    if tau is not None:
        return abs(diff.pair(*tau))
    return diff.max_abs()

"""Matrices on tensor powers of R^n with permutation symmetry.

Doubly symmetric matrices are stored *compressed*: a matrix ``X`` on
``(R^n)^{(x)d}`` supported on the symmetric subspace is represented by
``B^T X B``, where the columns of ``B`` are the orthonormal vectors

    b_alpha = C(d, alpha)^{-1/2} * sum_{i : alpha(i) = alpha} e_{i_1} (x) ... (x) e_{i_d}.

Compression is an isometry on such matrices, so traces, Frobenius products
and nonzero spectra are read off the compressed block directly.
Maximally symmetric matrices are stored as their moment vector over
multi-indices of degree ``2d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Union

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from . import mindex
from .poly import Form

DENSE_CAP = 4096
LIFT_CAP = 5000


class SizeCapError(ValueError):
    pass


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    def __init__(self, pivot: int):
        super().__init__(f"matrix is not positive definite (leading minor {pivot} fails)")
        self.pivot = pivot


# ------------------------------------------------------------ tables

@lru_cache(maxsize=None)
def _sqrt_multinomials(n: int, d: int) -> np.ndarray:
    return np.sqrt([float(mindex.multinomial(a)) for a in mindex.enumerate_multi_indices(n, d)])


@lru_cache(maxsize=None)
def _multinomials(n: int, d: int) -> np.ndarray:
    return np.array([float(mindex.multinomial(a)) for a in mindex.enumerate_multi_indices(n, d)])


@lru_cache(maxsize=None)
def _gamma_index(n: int, d: int) -> np.ndarray:
    """(N_d x N_d) table of the rank of alpha+beta among degree-2d indices."""
    basis = mindex.enumerate_multi_indices(n, d)
    rank2 = mindex.index_map(n, 2 * d)
    return np.array([[rank2[mindex.add(a, b)] for b in basis] for a in basis], dtype=np.intp)


@lru_cache(maxsize=None)
def _shift_index(n: int, d: int, k: int) -> tuple:
    """For each mu of degree k: ranks (in N_{d+k}) of alpha+mu for all alpha of degree d."""
    basis = mindex.enumerate_multi_indices(n, d)
    rank = mindex.index_map(n, d + k)
    out = []
    for mu in mindex.enumerate_multi_indices(n, k):
        out.append((mindex.multinomial(mu), np.array([rank[mindex.add(a, mu)] for a in basis], dtype=np.intp)))
    return tuple(out)


@lru_cache(maxsize=None)
def tensor_ranks(n: int, d: int) -> np.ndarray:
    """Rank of alpha(i) for every tensor index i in [n]^d (lex order, 0-based)."""
    rank = mindex.index_map(n, d)
    out = np.empty(n ** d, dtype=np.intp)
    for pos, idx in enumerate(product(range(n), repeat=d)):
        out[pos] = rank[tuple(np.bincount(idx, minlength=n)) if d else (0,) * n]
    return out


def basis_matrix(n: int, d: int) -> np.ndarray:
    """Dense ``n^d x N_{n,d}`` matrix whose columns are the b_alpha."""
    _check_dense(n, d)
    ranks = tensor_ranks(n, d)
    B = np.zeros((n ** d, mindex.dim_sym(n, d)))
    B[np.arange(n ** d), ranks] = 1.0 / _sqrt_multinomials(n, d)[ranks]
    return B


def _check_dense(n: int, d: int):
    if n ** d > DENSE_CAP:
        raise SizeCapError(f"dense tensor side n^d = {n ** d} exceeds cap {DENSE_CAP}")


# ------------------------------------------------------------ types

@dataclass(frozen=True, eq=False)
class SymMatrix:
    """Doubly symmetric matrix in the orthonormal symmetric-subspace basis."""

    n: int
    d: int
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        N = mindex.dim_sym(self.n, self.d)
        if data.shape != (N, N):
            raise ValueError(f"expected {N}x{N} block for (n={self.n}, d={self.d}), got {data.shape}")
        object.__setattr__(self, "data", 0.5 * (data + data.T))

    @classmethod
    def identity(cls, n: int, d: int) -> "SymMatrix":
        """Compression of I_n^{(x)d} (the projector onto the symmetric subspace)."""
        return cls(n, d, np.eye(mindex.dim_sym(n, d)))

    @property
    def size(self) -> int:
        return self.data.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.data))

    def eigvals(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.data)

    def inner(self, other: "SymMatrix") -> float:
        return float(np.sum(self.data * other.data))

    def dense(self) -> np.ndarray:
        """The full ``n^d x n^d`` matrix B X B^T."""
        B = basis_matrix(self.n, self.d)
        return B @ self.data @ B.T

    def __add__(self, other: "SymMatrix") -> "SymMatrix":
        return SymMatrix(self.n, self.d, self.data + other.data)

    def __sub__(self, other: "SymMatrix") -> "SymMatrix":
        return SymMatrix(self.n, self.d, self.data - other.data)

    def __mul__(self, c: float) -> "SymMatrix":
        return SymMatrix(self.n, self.d, c * self.data)

    __rmul__ = __mul__

    def __truediv__(self, c: float) -> "SymMatrix":
        return SymMatrix(self.n, self.d, self.data / c)


@dataclass(frozen=True, eq=False)
class MaxSymMatrix:
    """Maximally symmetric matrix, stored as moments y_gamma, |gamma| = 2d."""

    n: int
    d: int
    moments: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.moments, dtype=float)
        N2 = mindex.dim_sym(self.n, 2 * self.d)
        if y.shape != (N2,):
            raise ValueError(f"expected {N2} moments, got shape {y.shape}")
        object.__setattr__(self, "moments", y)

    def moment(self, gamma) -> float:
        return float(self.moments[mindex.index_map(self.n, 2 * self.d)[tuple(gamma)]])

    def as_sym_matrix(self) -> SymMatrix:
        w = _sqrt_multinomials(self.n, self.d)
        return SymMatrix(self.n, self.d, np.outer(w, w) * self.moments[_gamma_index(self.n, self.d)])

    def moment_matrix(self) -> np.ndarray:
        """Multi-indexed moment matrix (y_{alpha+beta})."""
        return self.moments[_gamma_index(self.n, self.d)]

    def dense(self) -> np.ndarray:
        """Tensor-indexed matrix with entry (i, j) = y_{alpha(i)+alpha(j)}."""
        _check_dense(self.n, self.d)
        ranks = tensor_ranks(self.n, self.d)
        return self.moment_matrix()[np.ix_(ranks, ranks)]

    def trace(self) -> float:
        return self.as_sym_matrix().trace()

    def __add__(self, other: "MaxSymMatrix") -> "MaxSymMatrix":
        return MaxSymMatrix(self.n, self.d, self.moments + other.moments)

    def __sub__(self, other: "MaxSymMatrix") -> "MaxSymMatrix":
        return MaxSymMatrix(self.n, self.d, self.moments - other.moments)

    def __mul__(self, c: float) -> "MaxSymMatrix":
        return MaxSymMatrix(self.n, self.d, c * self.moments)

    __rmul__ = __mul__

    def __truediv__(self, c: float) -> "MaxSymMatrix":
        return MaxSymMatrix(self.n, self.d, self.moments / c)


@dataclass(frozen=True, eq=False)
class DenseTensorMatrix:
    """Full matrix over [n]^r x [n]^r, rows/columns in lex order."""

    n: int
    r: int
    entries: np.ndarray

    def __post_init__(self):
        _check_dense(self.n, self.r)
        e = np.asarray(self.entries)
        if e.shape != (self.n ** self.r,) * 2:
            raise ValueError(f"expected {(self.n ** self.r,) * 2}, got {e.shape}")
        object.__setattr__(self, "entries", e)

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.entries) or bool(np.all(self.entries.imag == 0))

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0) <= tol)

    def trace(self) -> complex | float:
        t = np.trace(self.entries)
        return float(t.real) if abs(t.imag) == 0 else complex(t)

    def real(self) -> "DenseTensorMatrix":
        return DenseTensorMatrix(self.n, self.r, np.real(self.entries).astype(float))


AnyMatrix = Union[SymMatrix, MaxSymMatrix, DenseTensorMatrix, np.ndarray]


# ------------------------------------------------------------ conversions

def compress(X, n: int, d: int) -> SymMatrix:
    """B^T X B for a dense (doubly symmetric) ``n^d x n^d`` matrix."""
    X = X.entries if isinstance(X, DenseTensorMatrix) else np.asarray(X)
    B = basis_matrix(n, d)
    return SymMatrix(n, d, np.real(B.T @ X @ B))


def maxsym_of_form(f: Form) -> MaxSymMatrix:
    """The unique maximally symmetric representing matrix of ``f``."""
    if f.degree % 2:
        raise ValueError(f"MaxSym needs an even-degree form, got degree {f.degree}")
    d = f.degree // 2
    return MaxSymMatrix(f.n, d, f.to_vector() / _multinomials(f.n, 2 * d))


def form_of_gram(G: SymMatrix | MaxSymMatrix) -> Form:
    """The form <G, (x x^T)^{(x)d}> represented by ``G``."""
    if isinstance(G, MaxSymMatrix):
        return Form.from_vector(G.n, 2 * G.d, G.moments * _multinomials(G.n, 2 * G.d))
    w = _sqrt_multinomials(G.n, G.d)
    coeffs = np.bincount(
        _gamma_index(G.n, G.d).ravel(),
        weights=(np.outer(w, w) * G.data).ravel(),
        minlength=mindex.dim_sym(G.n, 2 * G.d),
    )
    return Form.from_vector(G.n, 2 * G.d, coeffs)


def maxsym_project(G: SymMatrix | MaxSymMatrix) -> MaxSymMatrix:
    """Frobenius-orthogonal projection onto the maximally symmetric matrices.

    Orbit-averaging vec(G) over all 2d index positions gives
    y_gamma = sum_{a+b=gamma} w_ab G_ab / sum_{a+b=gamma} w_ab with
    w_ab = C(d,a) C(d,b), where G_ab are the full tensor entries; in compressed
    coordinates the numerator is the gamma-coefficient of the represented form
    and the denominator is C(2d, gamma).
    """
    if isinstance(G, MaxSymMatrix):
        return G
    return maxsym_of_form(form_of_gram(G))


def dense_maxsym_project(T) -> np.ndarray:
    """Maximal symmetrisation of an arbitrary dense ``n^d x n^d`` matrix.

    Every orbit of S_{2d} on [n]^{2d} is a level set of gamma = alpha(i)+alpha(j),
    so the orbit average is the mean of T over each level set.
    """
    if isinstance(T, DenseTensorMatrix):
        n, d, E = T.n, T.r, T.entries
    else:
        raise TypeError("dense_maxsym_project expects a DenseTensorMatrix")
    ranks = tensor_ranks(n, d)
    gam = _gamma_index(n, d)[np.ix_(ranks, ranks)].ravel()
    N2 = mindex.dim_sym(n, 2 * d)
    counts = np.bincount(gam, minlength=N2)

    def avg(part):
        return np.bincount(gam, weights=part.ravel(), minlength=N2) / counts

    if np.iscomplexobj(E):
        y = avg(E.real) + 1j * avg(E.imag)
    else:
        y = avg(E)
    return y[gam].reshape(E.shape)


# ------------------------------------------------------------ lifts, traces

def sym_lift(A: SymMatrix, k: int, cap: int = LIFT_CAP) -> SymMatrix:
    """Compression of Pi_{d+k} (A (x) I^{(x)k}) Pi_{d+k}.

    Entry (alpha, beta) equals
    C(r,alpha)^{-1/2} C(r,beta)^{-1/2} sum_mu C(k,mu) sqrt(C(d,alpha-mu) C(d,beta-mu)) A[alpha-mu, beta-mu],
    summing over degree-k ``mu`` dominated by both indices.
    """
    if k < 0:
        raise ValueError("lift order k must be >= 0")
    if k == 0:
        return A
    n, d = A.n, A.d
    r = d + k
    N = mindex.dim_sym(n, r)
    if N > cap:
        raise SizeCapError(f"N_(n={n}, r={r}) = {N} exceeds cap {cap}")
    w = _sqrt_multinomials(n, d)
    scaled = np.outer(w, w) * A.data
    out = np.zeros((N, N))
    for cmu, rows in _shift_index(n, d, k):
        out[np.ix_(rows, rows)] += cmu * scaled
    wr = _sqrt_multinomials(n, r)
    return SymMatrix(n, r, out / np.outer(wr, wr))


def partial_trace(M: SymMatrix, k: int) -> SymMatrix:
    """Trace out the last ``k`` registers; the adjoint of tensoring with I^{(x)k}."""
    if not 0 <= k <= M.d:
        raise ValueError(f"cannot trace out {k} of {M.d} registers")
    if k == 0:
        return M
    n, r = M.n, M.d
    d = r - k
    wr = _sqrt_multinomials(n, r)
    scaled = M.data / np.outer(wr, wr)
    out = np.zeros((mindex.dim_sym(n, d),) * 2)
    for cmu, rows in _shift_index(n, d, k):
        out += cmu * scaled[np.ix_(rows, rows)]
    w = _sqrt_multinomials(n, d)
    return SymMatrix(n, d, out * np.outer(w, w))


def dense_partial_trace(T: DenseTensorMatrix, k: int) -> DenseTensorMatrix:
    if not 0 <= k <= T.r:
        raise ValueError(f"cannot trace out {k} of {T.r} registers")
    n, d = T.n, T.r - k
    E = T.entries.reshape(n ** d, n ** k, n ** d, n ** k)
    return DenseTensorMatrix(n, d, np.einsum("ikjk->ij", E))


def partial_transpose(T: DenseTensorMatrix, register: int) -> DenseTensorMatrix:
    """Swap row and column index of one register (1-based)."""
    n, r = T.n, T.r
    if not 1 <= register <= r:
        raise ValueError(f"register {register} outside 1..{r}")
    E = T.entries.reshape((n,) * (2 * r))
    E = np.swapaxes(E, register - 1, r + register - 1)
    return DenseTensorMatrix(n, r, E.reshape(n ** r, n ** r))


def rank_one_power(u, d: int) -> SymMatrix:
    """Compressed (u u^T)^{(x)d} for a real unit vector ``u``."""
    u = np.asarray(u, dtype=float)
    _check_unit(u)
    n = len(u)
    basis = np.array(mindex.enumerate_multi_indices(n, d))
    v = _sqrt_multinomials(n, d) * np.prod(u[None, :] ** basis, axis=1)
    return SymMatrix(n, d, np.outer(v, v))


def rank_one_power_complex(u, d: int) -> DenseTensorMatrix:
    """Dense (u u^*)^{(x)d} for a complex unit vector ``u``."""
    u = np.asarray(u, dtype=complex)
    _check_unit(u)
    _check_dense(len(u), d)
    P = np.outer(u, u.conj())
    out = np.ones((1, 1), dtype=complex)
    for _ in range(d):
        out = np.kron(out, P)
    return DenseTensorMatrix(len(u), d, out)


def _check_unit(u):
    norm = np.linalg.norm(u)
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"vector is not unit norm (|u| = {norm!r})")


# ------------------------------------------------------------ spectra

def _array(A) -> np.ndarray:
    if isinstance(A, SymMatrix):
        return A.data
    if isinstance(A, MaxSymMatrix):
        return A.as_sym_matrix().data
    if isinstance(A, DenseTensorMatrix):
        return A.entries
    return np.asarray(A)


def eig_sym(A, tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors of a real symmetric matrix."""
    A = np.asarray(_array(A), dtype=float)
    scale = max(np.abs(A).max(initial=0.0), 1.0)
    if np.abs(A - A.T).max(initial=0.0) > 1e-10 * scale:
        raise ValueError("matrix is not symmetric")
    vals, vecs = np.linalg.eigh(0.5 * (A + A.T))
    resid = np.abs(A @ vecs - vecs * vals).max(initial=0.0)
    if resid > tol * max(np.linalg.norm(A, 2), 1e-300):
        raise np.linalg.LinAlgError(f"eigen-residual {resid:.3e} above tolerance")
    return vals, vecs


def cholesky_lower(M: np.ndarray) -> np.ndarray:
    L, info = lapack.dpotrf(np.asarray(M, dtype=float), lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefiniteError(int(info))
    if info < 0:
        raise ValueError(f"dpotrf: illegal argument {-info}")
    return L


def gen_eig_min(Q, M, return_vector: bool = False):
    """Smallest generalised eigenvalue of Q with respect to positive definite M.

    Reduces to the ordinary problem for L^{-1} Q L^{-T}, where M = L L^T.
    """
    Q = _array(Q)
    L = cholesky_lower(_array(M))
    X = scipy.linalg.solve_triangular(L, Q, lower=True)
    C = scipy.linalg.solve_triangular(L, X.T, lower=True)
    vals, vecs = np.linalg.eigh(0.5 * (C + C.T))
    if not return_vector:
        return float(vals[0])
    v = scipy.linalg.solve_triangular(L.T, vecs[:, 0], lower=False)
    return float(vals[0]), v


def schatten_norm(A, p) -> float:
    """Schatten-p norm for p in {1, 2, inf} of a symmetric/Hermitian matrix."""
    E = _array(A)
    lam = np.abs(np.linalg.eigvalsh(0.5 * (E + E.conj().T)))
    if p == 1:
        return float(lam.sum())
    if p == 2:
        return float(np.sqrt((lam ** 2).sum()))
    if p in (math.inf, "inf"):
        return float(lam.max(initial=0.0))
    raise ValueError(f"unsupported Schatten index {p!r}")


# ------------------------------------------------------------ debug dump

def write_matrix_csv(G: SymMatrix | MaxSymMatrix, stream) -> None:
    """CSV dump with multi-index labels as header and first column."""
    S = G.as_sym_matrix() if isinstance(G, MaxSymMatrix) else G
    labels = [mindex.label(a) for a in mindex.enumerate_multi_indices(S.n, S.d)]
    stream.write("," + ",".join(f'"{lab}"' for lab in labels) + "\n")
    for lab, row in zip(labels, S.data):
        stream.write(f'"{lab}",' + ",".join(format(v, ".17g") for v in row) + "\n")

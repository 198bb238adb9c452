"""Brute-force dense reference constructions used as test oracles.

Everything here works on full n^r x n^r matrices and is built from
permutations and Kronecker products only, independently of the compressed
formulas in the package.
"""

from __future__ import annotations

from itertools import permutations, product

import numpy as np


def kron_power(A: np.ndarray, k: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=A.dtype)
    for _ in range(k):
        out = np.kron(out, A)
    return out


def permutation_matrix(n: int, r: int, sigma) -> np.ndarray:
    """P_sigma (e_{i_1} (x) ... (x) e_{i_r}) = e_{i_sigma(1)} (x) ... (x) e_{i_sigma(r)}."""
    idx = list(product(range(n), repeat=r))
    pos = {t: k for k, t in enumerate(idx)}
    P = np.zeros((n ** r, n ** r))
    for k, t in enumerate(idx):
        P[pos[tuple(t[s] for s in sigma)], k] = 1.0
    return P


def sym_projector(n: int, r: int) -> np.ndarray:
    """Pi_r as the average of all register permutations."""
    perms = list(permutations(range(r)))
    return sum(permutation_matrix(n, r, s) for s in perms) / len(perms)


def sym_basis(n: int, r: int, tol: float = 1e-9) -> np.ndarray:
    """Some orthonormal basis of the symmetric subspace (range of Pi_r)."""
    vals, vecs = np.linalg.eigh(sym_projector(n, r))
    return vecs[:, vals > 1 - tol]


def maxsym_bruteforce(T: np.ndarray, n: int, r: int) -> np.ndarray:
    """Orbit average of vec(T) over all (2r)! permutations of its index positions."""
    E = T.reshape((n,) * (2 * r))
    perms = list(permutations(range(2 * r)))
    acc = np.zeros_like(E)
    for s in perms:
        acc = acc + np.transpose(E, s)
    return (acc / len(perms)).reshape(T.shape)


def dense_lift(A_full: np.ndarray, n: int, d: int, k: int) -> np.ndarray:
    """Pi_{d+k} (A (x) I^{(x)k}) Pi_{d+k}."""
    P = sym_projector(n, d + k)
    return P @ np.kron(A_full, np.eye(n ** k)) @ P


def dense_partial_trace(M: np.ndarray, n: int, r: int, k: int) -> np.ndarray:
    """Contract the last k registers by explicit summation over basis vectors."""
    d = r - k
    out = np.zeros((n ** d, n ** d), dtype=M.dtype)
    for j in range(n ** k):
        e = np.zeros(n ** k)
        e[j] = 1.0
        V = np.kron(np.eye(n ** d), e[:, None])  # n^r x n^d
        out += V.T @ M @ V
    return out


def random_doubly_symmetric_dense(n: int, r: int, rng) -> np.ndarray:
    P = sym_projector(n, r)
    X = rng.standard_normal((n ** r, n ** r))
    return P @ (X + X.T) @ P


def restricted_gen_eig_min(Q: np.ndarray, M: np.ndarray, n: int, r: int) -> float:
    """Smallest generalised eigenvalue of dense Q, M restricted to the symmetric subspace."""
    U = sym_basis(n, r)
    Qs, Ms = U.T @ Q @ U, U.T @ M @ U
    L = np.linalg.cholesky(Ms)
    Li = np.linalg.inv(L)
    return float(np.linalg.eigvalsh(Li @ Qs @ Li.T)[0])


def form_coefficients_by_sampling(func, n: int, degree: int, basis, rng, extra: int = 10) -> np.ndarray:
    """Recover the coefficients of a degree-``degree`` form from point evaluations."""
    pts = rng.standard_normal((len(basis) + extra, n))
    V = np.array([[np.prod(x ** np.array(a)) for a in basis] for x in pts])
    vals = np.array([func(x) for x in pts])
    return np.linalg.lstsq(V, vals, rcond=None)[0]

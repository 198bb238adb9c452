"""De Finetti experiments on real symmetric tensor matrices.

Covers the complex counterexample family rho_r, distances to the maximally
symmetric subspace, nearest-separable approximation over
C_d(R^n) = conv{(u u^T)^{(x)d} : |u| = 1} by fully corrective Frank-Wolfe, the
banded approximation check, and the trace constants alpha_d, phi_d.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np
import scipy.optimize

from . import mindex, poly
from . import symmat as sm
from .hierarchy import max_workers
from .poly import Form

NOISE_FLOOR = 1e-8


# ---------------------------------------------------------------- rho_r

def rho_r(r: int) -> sm.DenseTensorMatrix:
    """(1/2)(u u^*)^{(x)r} + (1/2)(conj(u) conj(u)^*)^{(x)r}, u = (1, i)/sqrt 2, as a real matrix."""
    if r < 1:
        raise ValueError("r must be >= 1")
    if 2 ** r > sm.DENSE_CAP:
        raise sm.SizeCapError(f"2^{r} exceeds dense cap {sm.DENSE_CAP}")
    u = np.array([1.0, 1.0j]) / math.sqrt(2.0)
    a = sm.rank_one_power_complex(u, r).entries
    b = sm.rank_one_power_complex(u.conj(), r).entries
    rho = 0.5 * (a + b)
    imag = np.abs(rho.imag).max()
    if imag > 1e-14:
        raise ArithmeticError(f"rho_{r} has imaginary residue {imag:.3e}")
    return sm.DenseTensorMatrix(2, r, rho.real.copy())


def maxsym_distance(M) -> tuple[float, float]:
    """(Schatten-1, Frobenius) norms of M - Pi_MaxSym(M)."""
    if isinstance(M, sm.DenseTensorMatrix):
        diff = M.entries - sm.dense_maxsym_project(M)
    elif isinstance(M, sm.MaxSymMatrix):
        return 0.0, 0.0
    else:
        diff = M.data - sm.maxsym_project(M).as_sym_matrix().data
    return sm.schatten_norm(diff, 1), float(np.linalg.norm(diff))


# ---------------------------------------------------------------- separable

@dataclass
class SeparableDecomposition:
    n: int
    d: int
    weights: np.ndarray
    atoms: np.ndarray  # (K, n) unit vectors
    distance1: float = math.nan
    distanceF: float = math.nan
    iterations: int = 0

    @property
    def alpha(self) -> float:
        return float(np.sum(self.weights))

    @property
    def matrix(self) -> sm.SymMatrix:
        V = _atom_vectors(self.atoms, self.d)
        return sm.SymMatrix(self.n, self.d, (V.T * self.weights) @ V)

    @property
    def tau(self) -> sm.MaxSymMatrix:
        if self.alpha <= 0:
            raise ZeroDivisionError("empty decomposition has no normalised state")
        return sm.maxsym_project(self.matrix) / self.alpha


def _atom_vectors(U: np.ndarray, d: int) -> np.ndarray:
    """Rows sqrt(C(d,alpha)) u^alpha; (u u^T)^{(x)d} compresses to v v^T."""
    U = np.atleast_2d(U)
    n = U.shape[1]
    basis = np.array(mindex.enumerate_multi_indices(n, d))
    w = sm._sqrt_multinomials(n, d)
    return w[None, :] * np.prod(U[:, None, :] ** basis[None, :, :], axis=2)


def separable_lmo(G: sm.SymMatrix, restarts: int = 10, seed: int = 0) -> tuple[np.ndarray, float]:
    """Unit u (approximately) maximising <G, (u u^T)^{(x)d}>.

    Equivalent to maximising the form represented by G on the sphere.  Starts
    from the top eigenvector direction (d = 1 exact), the coordinate axes and
    seeded random points, then polishes by Riemannian gradient ascent.
    """
    n, d = G.n, G.d
    if d == 1:
        vals, vecs = np.linalg.eigh(G.data)
        return vecs[:, -1], float(vals[-1])
    ev = poly._Evaluator(sm.form_of_gram(G))
    starts = [np.eye(n)[i] for i in range(n)]
    starts += [np.random.default_rng([seed, k]).standard_normal(n) for k in range(restarts)]
    # the x_i^(d-1) x_j coordinates of the top eigenvector point roughly along u
    lead = np.linalg.eigh(G.data)[1][:, -1]
    rank = mindex.index_map(n, d)
    unit = [tuple(int(j == i) for j in range(n)) for i in range(n)]
    pure = [rank[tuple(d * a for a in e)] for e in unit]
    i0 = int(np.argmax(np.abs(lead[pure])))
    base = tuple((d - 1) * a for a in unit[i0])
    guess = lead[[rank[mindex.add(base, e)] for e in unit]]
    if np.linalg.norm(guess) > 1e-12:
        starts.append(guess)
    best_val, best_u = -math.inf, None
    for x0 in starts:
        val, u = poly.sphere_descent(ev, x0, -1.0)
        if val > best_val:
            best_val, best_u = val, u
    return best_u, best_val


def _refit(target: np.ndarray, U: np.ndarray, d: int) -> np.ndarray:
    V = _atom_vectors(U, d)
    design = np.einsum("ki,kj->ijk", V, V).reshape(-1, len(U))
    w, _ = scipy.optimize.nnls(design, target.ravel(), maxiter=50 * len(U) + 100)
    return w


def _residual(target: np.ndarray, U: np.ndarray, w: np.ndarray, d: int) -> np.ndarray:
    if len(U) == 0:
        return target.copy()
    V = _atom_vectors(U, d)
    return target - (V.T * w) @ V


def _polish(target: np.ndarray, U: np.ndarray, w: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Joint least-squares refinement of atom directions and weights.

    Atoms are parametrised as v(z_k) v(z_k)^T with free z_k in R^n, so the
    weight is |z_k|^(2d) and the Jacobian is explicit.
    """
    K, n = U.shape
    N = target.shape[0]
    iu = np.triu_indices(N)
    basis = np.array(mindex.enumerate_multi_indices(n, d))
    sq = sm._sqrt_multinomials(n, d)
    shifted = np.maximum(basis[None, :, :] - np.eye(n, dtype=int)[:, None, :], 0)  # (n, N, n)

    def resid(z):
        return _residual(target, z.reshape(K, n), np.ones(K), d)[iu]

    def jac(z):
        Z = z.reshape(K, n)
        V = _atom_vectors(Z, d)  # (K, N)
        # dV[k, j, a] = d v_a(z_k) / d z_kj
        dV = sq[None, None, :] * basis.T[None, :, :] * np.prod(
            Z[:, None, None, :] ** shifted[None, :, :, :], axis=3)
        dM = dV[:, :, :, None] * V[:, None, None, :]
        dM = dM + dM.transpose(0, 1, 3, 2)
        return -dM[:, :, iu[0], iu[1]].reshape(K * n, -1).T

    z0 = (U * np.maximum(w, 1e-300)[:, None] ** (1.0 / (2 * d))).ravel()
    sol = scipy.optimize.least_squares(resid, z0, jac=jac, xtol=1e-15, ftol=1e-15, gtol=1e-15,
                                       max_nfev=100 * (K * n + 1))
    Z = sol.x.reshape(K, n)
    norms = np.linalg.norm(Z, axis=1)
    keep = norms > 0
    return Z[keep] / norms[keep, None], norms[keep] ** (2 * d)


def separable_approx(A, max_atoms: int = 60, seed: int = 0, restarts: int = 10,
                     tol: float = 1e-10) -> SeparableDecomposition:
    """Fully corrective Frank-Wolfe for min |A - X|_F over X in cone(C_d(R^n)).

    Each step adds the LMO atom for the current residual and re-fits all
    weights by nonnegative least squares; stops once the Frobenius residual
    improves by less than ``tol`` or ``max_atoms`` atoms are in use.
    """
    S = A.as_sym_matrix() if isinstance(A, sm.MaxSymMatrix) else A
    n, d = S.n, S.d
    target = S.data
    U = np.zeros((0, n))
    w = np.zeros(0)
    R = target.copy()
    obj = float(np.linalg.norm(R))
    it = 0
    for it in range(1, 4 * max_atoms + 1):
        u, val = separable_lmo(sm.SymMatrix(n, d, R), restarts=restarts, seed=seed + it)
        if val <= tol * max(1.0, obj):
            break
        U = np.vstack([U, u])
        w = _refit(target, U, d)
        keep = w > 0
        U, w = U[keep], w[keep]
        R = _residual(target, U, w, d)
        new_obj = float(np.linalg.norm(R))
        if obj - new_obj < tol or len(w) >= max_atoms:
            obj = min(obj, new_obj)
            break
        obj = new_obj
    if len(w):
        U2, w2 = _polish(target, U, w, d)
        R2 = _residual(target, U2, w2, d)
        if np.sum(R2 * R2) < np.sum(R * R):
            U, w, R = U2, w2, R2
    return SeparableDecomposition(
        n, d, w, U, distance1=sm.schatten_norm(R, 1), distanceF=float(np.linalg.norm(R)), iterations=it,
    )


# ---------------------------------------------------------------- banded check

def banded_bound(n: int, d: int, r: int) -> float:
    return math.sqrt(mindex.dim_sym(n, d)) * 4 * d * (n - 1) / (r + 1)


@dataclass
class QdfReport:
    n: int
    d: int
    r: int
    distance1: float
    distanceF: float
    bound: float
    alpha: float
    trace_A: float
    atoms: int
    iterations: int
    passed: bool
    trace_gap_ok: bool
    alpha_in_range: bool
    status: str  # "pass" or "inconclusive"

    def as_dict(self) -> dict:
        return asdict(self)


def banded_qdf_check(M: sm.SymMatrix, d: int, seed: int = 0, max_atoms: int = 60) -> QdfReport:
    """Approximate Pi_MaxSym(Tr_{r-d} M) by alpha * tau with tau in C_d(R^n)."""
    if abs(M.trace() - 1.0) > 1e-10:
        raise ValueError(f"M must have unit trace, got {M.trace()!r}")
    if M.eigvals()[0] < -1e-10:
        raise ValueError("M must be positive semidefinite")
    A = sm.maxsym_project(sm.partial_trace(M, M.d - d))
    dec = separable_approx(A, max_atoms=max_atoms, seed=seed)
    bound = banded_bound(M.n, d, M.d)
    passed = dec.distance1 <= bound + 1e-9
    alpha = dec.alpha
    tr = A.trace()
    return QdfReport(
        n=M.n, d=d, r=M.d, distance1=dec.distance1, distanceF=dec.distanceF, bound=bound,
        alpha=alpha, trace_A=tr, atoms=len(dec.weights), iterations=dec.iterations,
        passed=passed, trace_gap_ok=abs(tr - alpha) <= bound + 1e-9,
        alpha_in_range=alpha_d(d) - 1e-9 <= alpha <= 1 + 1e-9,
        status="pass" if passed else "inconclusive",
    )


def random_doubly_symmetric(n: int, r: int, rng: np.random.Generator, rank: int | None = None) -> sm.SymMatrix:
    """Trace-one psd sum of w_i v_i v_i^T with random v_i in the symmetric subspace."""
    N = mindex.dim_sym(n, r)
    k = rank or N
    V = rng.standard_normal((k, N))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    w = rng.random(k)
    X = (V.T * w) @ V
    return sm.SymMatrix(n, r, X / np.trace(X))


def random_separable(n: int, d: int, atoms: int, rng: np.random.Generator) -> sm.SymMatrix:
    U = rng.standard_normal((atoms, n))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    w = rng.random(atoms) + 0.1
    w /= w.sum()
    V = _atom_vectors(U, d)
    return sm.SymMatrix(n, d, (V.T * w) @ V)


def random_maxsym_psd(n: int, r: int, rng: np.random.Generator, atoms: int | None = None) -> sm.MaxSymMatrix:
    """Trace-one psd moment matrix pushed to the boundary of the psd cone.

    Starts from an atomic measure on the sphere (positive definite moment
    matrix) and moves along a random moment direction as far as psd allows.
    """
    N2 = mindex.dim_sym(n, 2 * r)
    atoms = atoms or 2 * mindex.dim_sym(n, r)
    base = sm.maxsym_project(random_separable(n, r, atoms, rng))
    h = sm.MaxSymMatrix(n, r, rng.standard_normal(N2))
    B = base.as_sym_matrix().data
    H = h.as_sym_matrix().data
    L = sm.cholesky_lower(B)
    Linv = np.linalg.inv(L)
    top = np.linalg.eigvalsh(-(Linv @ H @ Linv.T))[-1]
    t = 1.0 / top if top > 0 else 1.0
    y = base + h * t
    return y / y.trace()


# ---------------------------------------------------------------- constants

def alpha_d(d: int) -> float:
    """2^d / C(2d, d)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return float(Fraction(2 ** d, math.comb(2 * d, d)))


def phi_d(t: float, d: int) -> float:
    """Trace of the maximal symmetrisation of (t e1 e1^T + (1-t) e2 e2^T)^{(x)d}."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    D = np.diag([t, 1.0 - t])
    T = np.ones((1, 1))
    for _ in range(d):
        T = np.kron(T, D)
    return float(np.trace(sm.dense_maxsym_project(sm.DenseTensorMatrix(2, d, T))))


class ReznickValidationError(ArithmeticError):
    pass


def reznick_vectors(d: int, tol: float = 1e-10) -> tuple[float, np.ndarray]:
    """Coefficient c and d+2 unit vectors v_k in R^2 with
    (t1^2 + t2^2)^d = c * sum_k <v_k, t>^(2d).

    The vectors are equally spaced over a half-turn; averaging both sides over
    the circle forces c = 4^d / ((d+2) C(2d, d)).  The identity is checked
    coefficient-wise before returning.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    m = d + 2
    theta = np.pi * np.arange(m) / m
    V = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    c = 4.0 ** d / (m * math.comb(2 * d, d))
    resid = reznick_residual(c, V, d)
    if resid > tol:
        raise ReznickValidationError(f"identity residual {resid:.3e} exceeds {tol:.0e}")
    return c, V


def reznick_residual(c: float, V: np.ndarray, d: int) -> float:
    """Max coefficient error of (t1^2+t2^2)^d - c * sum_k <v_k, t>^(2d)."""
    total = Form.zero(2, 2 * d)
    for v in V:
        lin = Form(2, 1, {(1, 0): v[0], (0, 1): v[1]})
        power = Form.constant(2, 1.0)
        for _ in range(2 * d):
            power = poly.multiply(power, lin)
        total = total + power
    return poly.s_power(2, d).max_abs_diff(total * c)


# ---------------------------------------------------------------- decay

@dataclass
class DecayRow:
    n: int
    d: int
    r: int
    trial: int
    distance1: float
    distanceF: float
    bound: float
    alpha: float
    atoms: int
    passed: bool

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class DecayResult:
    kind: str
    rows: list[DecayRow] = field(default_factory=list)
    slope: float | None = None
    note: str = ""


def decay_experiment(kind: str, n: int, d: int, r_list, trials: int = 3, seed: int = 0,
                     max_atoms: int = 60, workers: int | None = None) -> DecayResult:
    """Separable-approximation distance of partial traces as r grows.

    ``banded``: random doubly symmetric inputs, checked against the banded
    bound.  ``maxsym``: random maximally symmetric psd inputs; the bound column
    is NaN because the constant of the O(1/r^2) rate is not explicit.
    Trial ``t`` at level ``r`` draws from the stream seeded by ``(seed, r, t)``.
    """
    if kind not in ("banded", "maxsym"):
        raise ValueError(f"unknown kind {kind!r}")

    def run(job):
        r, trial = job
        rng = np.random.default_rng([seed, r, trial])
        if kind == "banded":
            M = random_doubly_symmetric(n, r, rng)
            rep = banded_qdf_check(M, d, seed=seed, max_atoms=max_atoms)
            return DecayRow(n, d, r, trial, rep.distance1, rep.distanceF, rep.bound,
                            rep.alpha, rep.atoms, rep.passed)
        M = random_maxsym_psd(n, r, rng)
        A = sm.maxsym_project(sm.partial_trace(M.as_sym_matrix(), r - d))
        dec = separable_approx(A, max_atoms=max_atoms, seed=seed)
        return DecayRow(n, d, r, trial, dec.distance1, dec.distanceF, math.nan,
                        dec.alpha, len(dec.weights), True)

    for r in r_list:
        if r < d:
            raise ValueError(f"level r={r} below d={d}")
    jobs = [(r, t) for r in r_list for t in range(trials)]
    out = DecayResult(kind)
    with ThreadPoolExecutor(max_workers=workers or max_workers()) as ex:
        out.rows = list(ex.map(run, jobs))
    rs = np.array([row.r for row in out.rows], dtype=float)
    ds = np.array([row.distance1 for row in out.rows])
    if np.any(ds <= NOISE_FLOOR) or len(set(rs)) < 2:
        out.note = "at noise floor" if np.any(ds <= NOISE_FLOOR) else "single r value"
    else:
        out.slope = float(np.polyfit(np.log(rs), np.log(ds), 1)[0])
    return out

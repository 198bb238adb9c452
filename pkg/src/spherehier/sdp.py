"""Dense primal-dual interior-point solver for small SDPs.

Problem (LMI form)::

    maximize    b^T y
    subject to  Z = F_0 + sum_i y_i F_i  is positive semidefinite

paired with the dual (standard form, A_i = -F_i)::

    minimize    <F_0, X>
    subject to  <A_i, X> = b_i,   X positive semidefinite.

Infeasible-start path following with Nesterov-Todd scaling and a Mehrotra
predictor-corrector; the Schur complement is factored by Cholesky.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

log = logging.getLogger(__name__)


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    MAX_ITER = "MaxIter"
    INFEASIBLE = "Infeasible"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass
class SdpProblem:
    F0: np.ndarray
    F: np.ndarray  # shape (m, N, N)
    b: np.ndarray

    def __post_init__(self):
        self.F0 = np.asarray(self.F0, dtype=float)
        self.F = np.asarray(self.F, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        N = self.F0.shape[0]
        if self.F0.shape != (N, N) or self.F.ndim != 3 or self.F.shape[1:] != (N, N):
            raise ValueError("inconsistent SDP block sizes")
        if self.F.shape[0] != self.b.shape[0]:
            raise ValueError(f"{self.F.shape[0]} matrices but {self.b.shape[0]} objective entries")
        for k, Fk in enumerate([self.F0, *self.F]):
            if np.abs(Fk - Fk.T).max(initial=0.0) > 1e-12:
                raise ValueError(f"F_{k} is not symmetric")

    @property
    def m(self) -> int:
        return self.F.shape[0]

    @property
    def N(self) -> int:
        return self.F0.shape[0]

    def slack(self, y) -> np.ndarray:
        return self.F0 + np.tensordot(y, self.F, axes=1)

    def dump(self, stream) -> None:
        """Sparse text dump, one ``i j k value`` line per nonzero (i <= j, 1-based; k=0 is F_0)."""
        stream.write(f"# m={self.m} N={self.N}\n")
        stream.write("# b " + " ".join(format(v, ".17g") for v in self.b) + "\n")
        for k, Fk in enumerate([self.F0, *self.F]):
            ii, jj = np.nonzero(np.triu(Fk))
            for i, j in zip(ii, jj):
                stream.write(f"{i + 1} {j + 1} {k} {Fk[i, j]:.17g}\n")


@dataclass
class SdpOptions:
    max_iter: int = 200
    gap_tol: float = 1e-7
    feas_tol: float = 1e-8
    step_fraction: float = 0.98
    # the solver keeps going past the stopping test while progress is cheap
    target_gap: float = 1e-9


@dataclass
class SdpSolution:
    y: np.ndarray
    X: np.ndarray
    Z: np.ndarray
    primal_objective: float  # b^T y (the maximisation)
    dual_objective: float  # <F_0, X>
    gap: float
    status: Status
    iterations: int
    primal_infeasibility: float = 0.0
    dual_infeasibility: float = 0.0
    history: list = field(default_factory=list)

    @property
    def objective(self) -> float:
        return self.primal_objective


def _nt_scaling(X: np.ndarray, Z: np.ndarray):
    """G, d with X = G diag(d) G^T and Z = G^{-T} diag(d) G^{-1}."""
    Lx = np.linalg.cholesky(X)
    Lz = np.linalg.cholesky(Z)
    U, s, Vt = np.linalg.svd(Lz.T @ Lx)
    G = Lx @ Vt.T / np.sqrt(s)
    return G, s


def _max_step(D: np.ndarray, dX: np.ndarray) -> float:
    """Largest t with diag(D) + t dX psd."""
    isq = 1.0 / np.sqrt(D)
    lam = np.linalg.eigvalsh(isq[:, None] * dX * isq[None, :])[0]
    return np.inf if lam >= 0 else -1.0 / lam


def solve(prob: SdpProblem, opts: SdpOptions | None = None) -> SdpSolution:
    opts = opts or SdpOptions()
    m, N = prob.m, prob.N
    C = prob.F0
    A = -prob.F
    b = prob.b
    Aflat = A.reshape(m, N * N)
    normb = 1.0 + np.linalg.norm(b)
    normC = 1.0 + np.linalg.norm(C)

    y = np.zeros(m)
    lam0 = np.linalg.eigvalsh(C)[0]
    rho = 2.0 * max(0.0, -lam0) + 1.0
    Z = C + rho * np.eye(N)
    normA = np.linalg.norm(Aflat, axis=1)
    xi = max(1.0, np.max((1.0 + np.abs(b)) / (1.0 + normA), initial=1.0))
    X = xi * np.eye(N)

    history = []
    status = Status.MAX_ITER
    it = 0
    for it in range(opts.max_iter + 1):
        Rp = b - Aflat @ X.ravel()
        Rd = C - Z - np.tensordot(y, A, axes=1)
        pobj = float(b @ y)
        dobj = float(np.sum(C * X))
        xz = float(np.sum(X * Z))
        pinf = np.linalg.norm(Rp) / normb
        dinf = np.linalg.norm(Rd) / normC
        history.append((pobj, dobj, xz, pinf, dinf))
        gap_ok = abs(dobj - pobj) <= opts.gap_tol * (1.0 + abs(pobj)) and xz <= opts.gap_tol * (1.0 + abs(pobj))
        if pinf <= opts.feas_tol and dinf <= opts.feas_tol and gap_ok:
            if xz <= opts.target_gap * (1.0 + abs(pobj)) or it == opts.max_iter:
                status = Status.OPTIMAL
                break
        if abs(pobj) > 1e12 or abs(dobj) > 1e12:
            status = Status.INFEASIBLE
            break
        if it == opts.max_iter:
            status = Status.OPTIMAL if (pinf <= opts.feas_tol and dinf <= opts.feas_tol and gap_ok) else Status.MAX_ITER
            break

        mu = xz / N
        try:
            G, D = _nt_scaling(X, Z)
        except np.linalg.LinAlgError:
            status = Status.NUMERICAL_FAILURE
            break
        At = np.einsum("ji,mjk,kl->mil", G, A, G, optimize=True)
        Atf = At.reshape(m, N * N)
        Schur = Atf @ Atf.T
        try:
            cho = scipy.linalg.cho_factor(Schur, lower=True)
        except np.linalg.LinAlgError:
            status = Status.NUMERICAL_FAILURE
            break
        RdT = G.T @ Rd @ G
        half = 0.5 * (D[:, None] + D[None, :])

        def direction(Rc):
            Rt = Rc / half
            rhs = Rp - Atf @ Rt.ravel() + Atf @ RdT.ravel()
            dy = scipy.linalg.cho_solve(cho, rhs)
            dZt = RdT - np.tensordot(dy, At, axes=1)
            dZt = 0.5 * (dZt + dZt.T)
            dXt = Rt - dZt
            return dy, 0.5 * (dXt + dXt.T), dZt

        Dm = np.diag(D)
        D2 = np.diag(D * D)
        dy, dXt, dZt = direction(-D2)
        ap = min(1.0, _max_step(D, dXt))
        ad = min(1.0, _max_step(D, dZt))
        xz_aff = float(np.sum((Dm + ap * dXt) * (Dm + ad * dZt)))
        sigma = min(1.0, max(0.0, xz_aff / xz)) ** 3
        corr = dXt @ dZt
        dy, dXt, dZt = direction(sigma * mu * np.eye(N) - D2 - 0.5 * (corr + corr.T))
        ap = min(1.0, opts.step_fraction * _max_step(D, dXt))
        ad = min(1.0, opts.step_fraction * _max_step(D, dZt))
        X = G @ (Dm + ap * dXt) @ G.T
        X = 0.5 * (X + X.T)
        Ginv = np.linalg.inv(G)
        Z = Ginv.T @ (Dm + ad * dZt) @ Ginv
        Z = 0.5 * (Z + Z.T)
        y = y + ad * dy
    pobj = float(b @ y)
    dobj = float(np.sum(C * X))
    sol = SdpSolution(
        y=y, X=X, Z=prob.slack(y), primal_objective=pobj, dual_objective=dobj,
        gap=abs(dobj - pobj), status=status, iterations=it,
        primal_infeasibility=float(np.linalg.norm(b - Aflat @ X.ravel()) / normb),
        dual_infeasibility=float(np.linalg.norm(C - Z - np.tensordot(y, A, axes=1)) / normC),
        history=history,
    )
    log.debug("sdp: status=%s it=%d pobj=%.10g dobj=%.10g", status.value, it, pobj, dobj)
    return sol

"""Spectral and moment-sos lower bounds for minimising a form on the sphere.

For a form p of degree 2d and a level r >= d:

* ``spectral_bound`` is the smallest generalised eigenvalue of Q_r(p) with
  respect to M_r, the symmetric lifts of MaxSym(p) and MaxSym(s^d);
* ``sos_bound`` is the largest lambda with s^(r-d) p - lambda s^r a sum of
  squares, solved as an SDP over monomial Gram matrices.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.special

from . import mindex, sdp
from . import symmat as sm
from .poly import Form, embed, s_power, sphere_extrema_estimate

SPECTRAL_CAP = 1200
SOS_CAP = 200


@dataclass
class BoundReport:
    label: str
    r: int
    method: str
    value: float
    wall_ms: float
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def max_workers() -> int:
    try:
        return max(1, int(os.environ.get("SPHERE_HIER_THREADS", "1")))
    except ValueError:
        return 1


def _half_degree(p: Form) -> int:
    if p.degree % 2 or p.degree == 0:
        raise ValueError(f"need a form of positive even degree, got degree {p.degree}")
    return p.degree // 2


def sphere_gram(n: int, d: int) -> sm.SymMatrix:
    """Compressed MaxSym(s^d)."""
    return sm.maxsym_of_form(s_power(n, d)).as_sym_matrix()


def build_Qr_Mr(p: Form, r: int, cap: int = SPECTRAL_CAP) -> tuple[sm.SymMatrix, sm.SymMatrix]:
    d = _half_degree(p)
    if r < d:
        raise ValueError(f"level r={r} below half-degree d={d}")
    N = mindex.dim_sym(p.n, r)
    if N > cap:
        raise sm.SizeCapError(f"N_(n={p.n}, r={r}) = {N} exceeds cap {cap}")
    Q = sm.maxsym_of_form(p).as_sym_matrix()
    M = sphere_gram(p.n, d)
    return sm.sym_lift(Q, r - d, cap=cap), sm.sym_lift(M, r - d, cap=cap)


def spectral_bound(p: Form, r: int, label: str = "p", cap: int = SPECTRAL_CAP) -> BoundReport:
    t0 = time.perf_counter()
    Qr, Mr = build_Qr_Mr(p, r, cap)
    value = sm.gen_eig_min(Qr, Mr)
    mev = Mr.eigvals()
    return BoundReport(
        label, r, "spectral", value, 1e3 * (time.perf_counter() - t0),
        {"N": Qr.size, "lambda_min_Mr": float(mev[0]), "lambda_max_Mr": float(mev[-1])},
    )


def _moment_basis(n: int, r: int) -> tuple[np.ndarray, int]:
    gi = sm._gamma_index(n, r)
    return gi, mindex.dim_sym(n, 2 * r)


def sos_problem(p: Form, r: int, cap: int = SOS_CAP):
    """LMI data for sos_r(p) in moment form.

    Moments y_gamma of degree 2r, normalised by L(s^r) = 1; the moment of
    x_1^{2r} is eliminated through that constraint, so the LMI is
    M(e_0) + sum_{gamma != 0} y_gamma (M(e_gamma) - t_gamma M(e_0)) >= 0.
    Returns the problem together with ``(c, t)``, the coefficient vectors of
    s^(r-d) p and s^r.
    """
    d = _half_degree(p)
    if r < d:
        raise ValueError(f"level r={r} below half-degree d={d}")
    n = p.n
    N = mindex.dim_sym(n, r)
    if N > cap:
        raise sm.SizeCapError(f"Gram side N_(n={n}, r={r}) = {N} exceeds cap {cap}")
    gi, N2 = _moment_basis(n, r)
    c = (p * s_power(n, r - d)).to_vector()
    t = s_power(n, r).to_vector()
    assert t[0] == 1.0
    E = np.zeros((N2, N, N))
    E[gi, np.arange(N)[:, None], np.arange(N)[None, :]] = 1.0
    F0 = E[0]
    F = E[1:] - t[1:, None, None] * F0[None]
    b = 0.0 - (c[1:] - c[0] * t[1:])
    return sdp.SdpProblem(F0, F, b), c, t


def gram_polynomial(X: np.ndarray, n: int, r: int) -> np.ndarray:
    """Coefficients of [x]_r^T X [x]_r."""
    gi, N2 = _moment_basis(n, r)
    return np.bincount(gi.ravel(), weights=X.ravel(), minlength=N2)


def sos_bound(p: Form, r: int, label: str = "p", cap: int = SOS_CAP,
              opts: sdp.SdpOptions | None = None) -> BoundReport:
    t0 = time.perf_counter()
    prob, c, t = sos_problem(p, r, cap)
    sol = sdp.solve(prob, opts)
    g = gram_polynomial(sol.X, p.n, r)
    value = float(c[0] - g[0])
    residual = float(np.abs(g - (c - value * t)).max())
    return BoundReport(
        label, r, "sos", value, 1e3 * (time.perf_counter() - t0),
        {
            "N": prob.N, "m": prob.m, "status": sol.status.value, "iterations": sol.iterations,
            "moment_value": float(c[0] - sol.primal_objective), "gap": sol.gap,
            "gram_min_eig": float(np.linalg.eigvalsh(sol.X)[0]),
            "slack_min_eig": float(np.linalg.eigvalsh(sol.Z)[0]),
            "gram_residual": residual,
        },
    )


# ---------------------------------------------------------------- Choi-Lam

def choi_lam() -> Form:
    """x1^2 x2^2 + x1^2 x3^2 + x2^2 x3^2 + x4^4 - 4 x1 x2 x3 x4."""
    return Form(4, 4, {
        (2, 2, 0, 0): 1.0, (2, 0, 2, 0): 1.0, (0, 2, 2, 0): 1.0,
        (0, 0, 0, 4): 1.0, (1, 1, 1, 1): -4.0,
    })


def gamma_const(p: Form, p_min: float | None = None, restarts: int = 20, seed: int = 0) -> float:
    """max(lambda_max(Q) - sp_d(p), p_min - lambda_min(Q)) with Q = MaxSym(p)."""
    d = _half_degree(p)
    if p_min is None:
        p_min = sphere_extrema_estimate(p, restarts, seed)[0]
    lam = sm.maxsym_of_form(p).as_sym_matrix().eigvals()
    sp_d = spectral_bound(p, d).value
    return max(float(lam[-1]) - sp_d, p_min - float(lam[0]), 0.0)


def kappa(n: int, d: int) -> dict:
    """Spectrum of MaxSym(s^d) on the symmetric subspace, with the conjectured condition number."""
    lam = sphere_gram(n, d).eigvals()
    conj = float(scipy.special.binom(n / 2 + d - 1, d // 2))
    return {
        "n": n, "d": d, "lambda_min": float(lam[0]), "lambda_max": float(lam[-1]),
        "kappa": float(lam[-1] / lam[0]), "kappa_conjectured": conj,
        "matches_conjecture": bool(abs(lam[-1] / lam[0] - conj) <= 1e-8 * conj),
    }


@dataclass
class ChoiLamRow:
    r: int
    sp: float
    sos: float | None
    floor: float
    wall_ms: float
    negative: bool
    above_floor: bool
    monotone: bool

    @property
    def passed(self) -> bool:
        return self.negative and self.above_floor and self.monotone


def choi_lam_experiment(r_max: int = 6, sos_r_max: int | None = None, workers: int | None = None) -> list[ChoiLamRow]:
    """Spectral bounds of the 5-variable Choi-Lam embedding against the floor
    (lambda_min(M)/lambda_max(M)) |sp_2| / C(r,2), M = MaxSym(s^2)."""
    if r_max < 2:
        raise ValueError("r_max must be >= 2")
    p = embed(choi_lam(), 5)
    lam = sphere_gram(5, 2).eigvals()
    ratio = float(lam[0] / lam[-1])
    rs = list(range(2, r_max + 1))
    with ThreadPoolExecutor(max_workers=workers or max_workers()) as ex:
        spec = list(ex.map(lambda r: spectral_bound(p, r, "choi_lam"), rs))
    sos_vals = {}
    if sos_r_max:
        for r in range(2, min(sos_r_max, r_max) + 1):
            sos_vals[r] = sos_bound(p, r, "choi_lam").value
    sp2 = spec[0].value
    rows = []
    prev = -math.inf
    for r, rep in zip(rs, spec):
        floor = ratio * abs(sp2) / math.comb(r, 2)
        rows.append(ChoiLamRow(
            r=r, sp=rep.value, sos=sos_vals.get(r), floor=floor, wall_ms=rep.wall_ms,
            negative=rep.value < 0, above_floor=abs(rep.value) >= floor - 1e-9,
            monotone=rep.value >= prev - 1e-8,
        ))
        prev = rep.value
    return rows

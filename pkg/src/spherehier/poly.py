"""Homogeneous polynomials (forms) with sparse multi-index coefficients.

Text format, one term per line::

    # Choi-Lam form
    1  2 2 0 0
    -4 1 1 1 1

Each line is a coefficient (decimal or ``p/q``) followed by the ``n``
exponents.  ``#`` starts a comment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from . import mindex
from .mindex import MultiIndex

ZERO_TOL = 1e-10


class FormSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class InhomogeneousError(ValueError):
    def __init__(self, offending: list[MultiIndex], degree: int):
        listed = ", ".join(str(a) for a in offending)
        super().__init__(f"monomials of degree != {degree}: {listed}")
        self.offending = offending


@dataclass(frozen=True)
class Form:
    """Homogeneous polynomial in ``n`` variables of fixed ``degree``."""

    n: int
    degree: int
    coeffs: Mapping[MultiIndex, float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for alpha, c in self.coeffs.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.n:
                raise ValueError(f"multi-index {alpha} has length != n={self.n}")
            if sum(alpha) != self.degree:
                raise InhomogeneousError([alpha], self.degree)
            c = float(c)
            if c != 0.0:
                clean[alpha] = clean.get(alpha, 0.0) + c
        clean = {a: c for a, c in clean.items() if c != 0.0}
        object.__setattr__(self, "coeffs", clean)

    # construction helpers
    @classmethod
    def zero(cls, n: int, degree: int) -> "Form":
        return cls(n, degree, {})

    @classmethod
    def constant(cls, n: int, c: float) -> "Form":
        return cls(n, 0, {(0,) * n: c})

    @classmethod
    def monomial(cls, alpha: MultiIndex, c: float = 1.0) -> "Form":
        return cls(len(alpha), sum(alpha), {tuple(alpha): c})

    @classmethod
    def from_vector(cls, n: int, degree: int, vec) -> "Form":
        basis = mindex.enumerate_multi_indices(n, degree)
        return cls(n, degree, {a: v for a, v in zip(basis, vec)})

    def to_vector(self) -> np.ndarray:
        """Coefficients in basis order."""
        idx = mindex.index_map(self.n, self.degree)
        out = np.zeros(len(idx))
        for alpha, c in self.coeffs.items():
            out[idx[alpha]] = c
        return out

    def coeff(self, alpha: MultiIndex) -> float:
        return self.coeffs.get(tuple(alpha), 0.0)

    @property
    def nterms(self) -> int:
        return len(self.coeffs)

    # arithmetic
    def _check_compatible(self, other: "Form"):
        if self.n != other.n:
            raise ValueError(f"variable counts differ: {self.n} vs {other.n}")

    def __add__(self, other: "Form") -> "Form":
        self._check_compatible(other)
        if other.degree != self.degree:
            if not other.coeffs:
                return self
            if not self.coeffs:
                return other
            raise InhomogeneousError(list(other.coeffs), self.degree)
        out = dict(self.coeffs)
        for a, c in other.coeffs.items():
            out[a] = out.get(a, 0.0) + c
        return Form(self.n, self.degree, out)

    def __neg__(self) -> "Form":
        return Form(self.n, self.degree, {a: -c for a, c in self.coeffs.items()})

    def __sub__(self, other: "Form") -> "Form":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, Form):
            return multiply(self, other)
        return Form(self.n, self.degree, {a: c * other for a, c in self.coeffs.items()})

    __rmul__ = __mul__

    def __truediv__(self, c: float) -> "Form":
        return self * (1.0 / c)

    def __call__(self, x) -> float:
        return evaluate(self, x)

    def chop(self, tol: float = ZERO_TOL) -> "Form":
        return Form(self.n, self.degree, {a: c for a, c in self.coeffs.items() if abs(c) > tol})

    def max_abs_diff(self, other: "Form") -> float:
        self._check_compatible(other)
        keys = set(self.coeffs) | set(other.coeffs)
        return max((abs(self.coeff(a) - other.coeff(a)) for a in keys), default=0.0)

    def allclose(self, other: "Form", tol: float = ZERO_TOL) -> bool:
        if self.n != other.n:
            return False
        if self.degree != other.degree and (self.coeffs or other.coeffs):
            return False
        return self.max_abs_diff(other) <= tol

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for alpha in mindex.enumerate_multi_indices(self.n, self.degree):
            c = self.coeffs.get(alpha)
            if c is None:
                continue
            mono = "*".join(
                f"x{i + 1}" if a == 1 else f"x{i + 1}^{a}" for i, a in enumerate(alpha) if a
            )
            terms.append(f"{c:g}" + (f"*{mono}" if mono else ""))
        return " + ".join(terms).replace("+ -", "- ")


def multiply(f: Form, g: Form) -> Form:
    f._check_compatible(g)
    out: dict[MultiIndex, float] = {}
    for a, ca in f.coeffs.items():
        for b, cb in g.coeffs.items():
            k = mindex.add(a, b)
            out[k] = out.get(k, 0.0) + ca * cb
    return Form(f.n, f.degree + g.degree, out)


def s_power(n: int, k: int) -> Form:
    """(x_1^2 + ... + x_n^2)^k, built from multinomial coefficients."""
    return Form(
        n,
        2 * k,
        {tuple(2 * a for a in alpha): mindex.multinomial(alpha) for alpha in mindex.enumerate_multi_indices(n, k)},
    )


def _terms(f: Form) -> tuple[np.ndarray, np.ndarray]:
    if not f.coeffs:
        return np.zeros((0, f.n), dtype=int), np.zeros(0)
    # descending lex order of tuples is exactly the basis order
    basis = sorted(f.coeffs, reverse=True)
    exps = np.array(basis, dtype=int).reshape(len(basis), f.n)
    cs = np.array([f.coeffs[a] for a in basis])
    return exps, cs


def evaluate(f: Form, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (f.n,):
        raise ValueError(f"point has shape {x.shape}, expected ({f.n},)")
    exps, cs = _terms(f)
    if len(cs) == 0:
        return 0.0
    return float(np.sum(cs * np.prod(x[None, :] ** exps, axis=1)))


class _Evaluator:
    """Vectorised value/gradient of a fixed form."""

    def __init__(self, f: Form):
        self.n = f.n
        self.exps, self.cs = _terms(f)
        # d/dx_i x^e = e_i x^(e - e_i); clip keeps exponents valid where e_i = 0
        self.dcs = self.exps.T * self.cs[None, :]
        self.dexps = np.maximum(self.exps[None, :, :] - np.eye(f.n, dtype=int)[:, None, :], 0)

    def value(self, x: np.ndarray) -> float:
        if len(self.cs) == 0:
            return 0.0
        return float(self.cs @ np.prod(x ** self.exps, axis=1))

    def grad(self, x: np.ndarray) -> np.ndarray:
        if len(self.cs) == 0:
            return np.zeros(self.n)
        return np.sum(self.dcs * np.prod(x ** self.dexps, axis=2), axis=1)


def laplacian(f: Form) -> Form:
    if f.degree < 2:
        return Form.zero(f.n, max(f.degree - 2, 0))
    out: dict[MultiIndex, float] = {}
    for alpha, c in f.coeffs.items():
        for i, a in enumerate(alpha):
            if a >= 2:
                beta = alpha[:i] + (a - 2,) + alpha[i + 1:]
                out[beta] = out.get(beta, 0.0) + c * a * (a - 1)
    return Form(f.n, f.degree - 2, out)


def apolar(f: Form, g: Form) -> float:
    """Apolar pairing f(d/dx) g = sum_alpha alpha! f_alpha g_alpha."""
    f._check_compatible(g)
    if f.degree != g.degree:
        raise ValueError(f"apolar product needs equal degrees, got {f.degree} and {g.degree}")
    return float(sum(mindex.factorial(a) * c * g.coeff(a) for a, c in f.coeffs.items()))


@dataclass(frozen=True)
class HarmonicDecomposition:
    """``components[k]`` is the harmonic piece of degree 2k."""

    components: tuple[Form, ...]

    @property
    def r(self) -> int:
        return len(self.components) - 1

    def recompose(self) -> Form:
        n = self.components[0].n
        r = self.r
        total = Form.zero(n, 2 * r)
        for k, fk in enumerate(self.components):
            total = total + multiply(s_power(n, r - k), fk)
        return total


def _s_times_matrix(n: int, deg: int) -> np.ndarray:
    """Matrix of g -> s*g from R_deg to R_{deg+2}."""
    rows = mindex.index_map(n, deg + 2)
    basis = mindex.enumerate_multi_indices(n, deg)
    out = np.zeros((len(rows), len(basis)))
    for j, beta in enumerate(basis):
        for i in range(n):
            gam = beta[:i] + (beta[i] + 2,) + beta[i + 1:]
            out[rows[gam], j] += 1.0
    return out


def _laplacian_matrix(n: int, deg: int) -> np.ndarray:
    """Matrix of the Laplacian R_deg -> R_{deg-2}."""
    rows = mindex.index_map(n, deg - 2)
    basis = mindex.enumerate_multi_indices(n, deg)
    out = np.zeros((len(rows), len(basis)))
    for j, alpha in enumerate(basis):
        for i, a in enumerate(alpha):
            if a >= 2:
                beta = alpha[:i] + (a - 2,) + alpha[i + 1:]
                out[rows[beta], j] += a * (a - 1)
    return out


def harmonic_decompose(f: Form) -> HarmonicDecomposition:
    """Split f = sum_k s^(r-k) f_2k with every f_2k harmonic.

    Peels the top harmonic piece h = f - s*g, where g solves Lap(s*g) = Lap(f),
    then recurses on g.
    """
    if f.degree % 2:
        raise ValueError(f"harmonic decomposition needs even degree, got {f.degree}")
    n = f.n
    pieces: list[Form] = []
    cur = f
    while cur.degree > 0:
        deg = cur.degree
        S = _s_times_matrix(n, deg - 2)
        Lap = _laplacian_matrix(n, deg)
        op = Lap @ S
        rhs = Lap @ cur.to_vector()
        try:
            g = np.linalg.solve(op, rhs)
        except np.linalg.LinAlgError as exc:  # Lap∘s is invertible on R_{deg-2}
            raise RuntimeError(f"singular peeling system at degree {deg}") from exc
        h = cur.to_vector() - S @ g
        pieces.append(Form.from_vector(n, deg, h).chop(ZERO_TOL * (1 + np.abs(h).max(initial=0))))
        cur = Form.from_vector(n, deg - 2, g)
    pieces.append(Form.from_vector(n, 0, cur.to_vector()))
    return HarmonicDecomposition(tuple(reversed(pieces)))


# ---------------------------------------------------------------- parsing

def _parse_number(tok: str) -> float:
    if "/" in tok:
        return float(Fraction(tok))
    return float(tok)


def parse_form(text: str, n: int | None = None) -> Form:
    """Parse the one-term-per-line text format."""
    terms: list[tuple[MultiIndex, float]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        toks = []
        pos = 0
        for tok in line.split():
            col = line.index(tok, pos)
            pos = col + len(tok)
            toks.append((tok, col + 1))
        tok, col = toks[0]
        try:
            c = _parse_number(tok)
        except (ValueError, ZeroDivisionError):
            raise FormSyntaxError(f"bad coefficient {tok!r}", lineno, col) from None
        exps = []
        for tok, col in toks[1:]:
            if not tok.isdigit():
                raise FormSyntaxError(f"bad exponent {tok!r}", lineno, col)
            exps.append(int(tok))
        if n is None:
            n = len(exps)
        if len(exps) != n:
            raise FormSyntaxError(f"expected {n} exponents, got {len(exps)}", lineno, 1)
        terms.append((tuple(exps), c))
    if n is None:
        raise FormSyntaxError("no terms", 1, 1)
    if not terms:
        return Form.zero(n, 0)
    degree = sum(terms[0][0])
    bad = [a for a, _ in terms if sum(a) != degree]
    if bad:
        raise InhomogeneousError(bad, degree)
    out: dict[MultiIndex, float] = {}
    for a, c in terms:
        out[a] = out.get(a, 0.0) + c
    return Form(n, degree, out)


def format_form(f: Form) -> str:
    lines = [
        " ".join([format(f.coeffs[alpha], ".17g")] + [str(a) for a in alpha])
        for alpha in sorted(f.coeffs, reverse=True)
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def read_form(path, n: int | None = None) -> Form:
    with open(path) as fh:
        return parse_form(fh.read(), n)


def embed(f: Form, n_new: int) -> Form:
    """View ``f`` as a form in ``n_new >= f.n`` variables."""
    if n_new < f.n:
        raise ValueError(f"cannot embed a {f.n}-variable form into {n_new} variables")
    return Form(n_new, f.degree, {mindex.embed(a, n_new): c for a, c in f.coeffs.items()})


def random_form(n: int, degree: int, rng: np.random.Generator) -> Form:
    basis = mindex.enumerate_multi_indices(n, degree)
    return Form(n, degree, dict(zip(basis, rng.standard_normal(len(basis)))))


# ---------------------------------------------------------- sphere search

def sphere_descent(ev: _Evaluator, x0: np.ndarray, sign: float = 1.0,
                   tol: float = 1e-9, max_iter: int = 10_000) -> tuple[float, np.ndarray]:
    """Riemannian gradient descent of ``sign * f`` on the unit sphere.

    Barzilai-Borwein trial steps with Armijo backtracking; the retraction is
    renormalisation.  Returns ``(f(x), x)`` at the final iterate.
    """
    x = x0 / np.linalg.norm(x0)
    fx = sign * ev.value(x)
    g = sign * ev.grad(x)
    rg = g - (g @ x) * x
    step = 1.0 / max(1.0, np.linalg.norm(g))
    prev = None
    stalled = 0
    for _ in range(max_iter):
        gnorm = np.linalg.norm(rg)
        if gnorm < tol:
            break
        if prev is not None:
            dx, dg = x - prev[0], rg - prev[1]
            denom = abs(dx @ dg)
            if denom > 1e-300:
                step = min(max((dx @ dx) / denom, 1e-12), 1e6)
        t = step
        while True:
            y = x - t * rg
            y /= np.linalg.norm(y)
            fy = sign * ev.value(y)
            if fy <= fx - 1e-4 * t * gnorm ** 2 or t < 1e-16:
                break
            t *= 0.5
        if t < 1e-16:
            break
        # round-off floor: steps accepted without any decrease
        stalled = stalled + 1 if fy >= fx else 0
        if stalled >= 3:
            x, fx = y, fy
            break
        prev = (x, rg)
        x, fx = y, fy
        g = sign * ev.grad(x)
        rg = g - (g @ x) * x
    return sign * fx, x


def _start_points(n: int, restarts: int, seed: int) -> list[np.ndarray]:
    return [np.random.default_rng([seed, k]).standard_normal(n) for k in range(restarts)]


def sphere_extrema_estimate(f: Form, restarts: int = 20, seed: int = 0):
    """Heuristic (p_min, p_max, argmin, argmax) of ``f`` on the unit sphere.

    Multi-start projected gradient; restart ``k`` draws its start from the RNG
    stream seeded by ``(seed, k)``.  The min is an upper bound on the true
    minimum and the max a lower bound on the true maximum.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    ev = _Evaluator(f)
    best_min = (math.inf, None)
    best_max = (-math.inf, None)
    for x0 in _start_points(f.n, restarts, seed):
        vmin, xmin = sphere_descent(ev, x0, 1.0)
        vmax, xmax = sphere_descent(ev, x0, -1.0)
        if vmin < best_min[0]:
            best_min = (vmin, xmin)
        if vmax > best_max[0]:
            best_max = (vmax, xmax)
    if f.n == 2:
        # dense angular grid covers any basin the restarts missed
        th = np.linspace(0.0, np.pi, 10_001)
        pts = np.stack([np.cos(th), np.sin(th)], axis=1)
        vals = np.array([ev.value(p) for p in pts]) if len(ev.cs) else np.zeros(len(th))
        for sign, best in ((1.0, best_min), (-1.0, best_max)):
            k = int(np.argmin(sign * vals))
            v, x = sphere_descent(ev, pts[k], sign)
            if sign * v < sign * best[0]:
                if sign > 0:
                    best_min = (v, x)
                else:
                    best_max = (v, x)
    return best_min[0], best_max[0], best_min[1], best_max[1]


def quadratic_form(A) -> Form:
    """x^T A x as a degree-2 form."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    out = {}
    for i in range(n):
        for j in range(n):
            alpha = [0] * n
            alpha[i] += 1
            alpha[j] += 1
            out[tuple(alpha)] = out.get(tuple(alpha), 0.0) + A[i, j]
    return Form(n, 2, out)


def from_terms(n: int, terms: Iterable[tuple[float, MultiIndex]]) -> Form:
    terms = list(terms)
    return Form(n, sum(terms[0][1]), {tuple(a): c for c, a in terms})

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spherehier import mindex, poly
from spherehier.hierarchy import choi_lam
from spherehier.poly import Form, FormSyntaxError, InhomogeneousError

CHOI_LAM_TEXT = """\
# Choi-Lam form, five variables
1 2 2 0 0 0
1 2 0 2 0 0
1 0 2 2 0 0
1 0 0 0 4 0
-4 1 1 1 1 0
"""


def x(i, n):
    a = [0] * n
    a[i] = 1
    return Form.monomial(tuple(a))


# ------------------------------------------------------------ Form basics

def test_form_drops_zeros_and_checks_homogeneity():
    f = Form(2, 2, {(2, 0): 1.0, (1, 1): 0.0})
    assert f.coeffs == {(2, 0): 1.0}
    with pytest.raises(InhomogeneousError):
        Form(2, 2, {(2, 0): 1.0, (1, 0): 1.0})


def test_vector_round_trip():
    rng = np.random.default_rng(0)
    f = poly.random_form(3, 4, rng)
    assert Form.from_vector(3, 4, f.to_vector()).allclose(f, 0.0)


# ------------------------------------------------------------ text format

def test_parse_choi_lam():
    f = poly.parse_form(CHOI_LAM_TEXT)
    assert (f.n, f.degree, f.nterms) == (5, 4, 5)
    assert sorted(f.coeffs.values()) == [-4, 1, 1, 1, 1]


def test_parse_single_variable_round_trip():
    f = poly.parse_form("1 2", n=1)
    assert f.coeffs == {(2,): 1.0}
    assert poly.parse_form(poly.format_form(f), n=1) == f


def test_parse_rejects_inhomogeneous():
    with pytest.raises(InhomogeneousError) as exc:
        poly.parse_form("1 1 0\n1 0 2\n", n=2)
    assert (0, 2) in exc.value.offending


def test_parse_rationals_and_duplicates():
    f = poly.parse_form("1/3 2 0\n2/3 2 0\n-0.5 1 1 # comment\n")
    assert f.coeff((2, 0)) == pytest.approx(1.0)
    assert f.coeff((1, 1)) == -0.5


@pytest.mark.parametrize("text,line,col", [
    ("1 2 0\nabc 0 2\n", 2, 1),
    ("1 2 0\n1 x 2\n", 2, 3),
    ("1 2 0\n1 2\n", 2, 1),
])
def test_parse_reports_position(text, line, col):
    with pytest.raises(FormSyntaxError) as exc:
        poly.parse_form(text)
    assert (exc.value.line, exc.value.column) == (line, col)


@given(st.integers(1, 4), st.integers(0, 5), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=40, deadline=None)
def test_format_parse_round_trip(n, degree, seed):
    f = poly.random_form(n, degree, np.random.default_rng(seed))
    assert poly.parse_form(poly.format_form(f), n=n) == f


# ------------------------------------------------------------ evaluation, products

def test_evaluate_examples():
    p = poly.embed(choi_lam(), 5)
    assert p([1, 1, 1, 1, 0]) == 0.0
    assert poly.s_power(3, 1)([0, 1, 0]) == 1.0
    assert Form.monomial((2, 1))([2, 3]) == 12.0
    with pytest.raises(ValueError):
        p([1, 2])


def test_multiply_and_s_power():
    assert poly.s_power(2, 2).coeffs == {(4, 0): 1.0, (2, 2): 2.0, (0, 4): 1.0}
    assert poly.multiply(x(0, 2), x(1, 2)).coeffs == {(1, 1): 1.0}
    assert poly.s_power(3, 3).coeff((2, 2, 2)) == 6.0


def test_product_evaluates_to_product():
    rng = np.random.default_rng(1)
    for _ in range(20):
        f, g = poly.random_form(3, 3, rng), poly.random_form(3, 2, rng)
        pt = rng.standard_normal(3)
        lhs, rhs = (f * g)(pt), f(pt) * g(pt)
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))


def test_evaluator_gradient_matches_finite_differences():
    rng = np.random.default_rng(2)
    f = poly.random_form(4, 5, rng)
    ev = poly._Evaluator(f)
    pt = rng.standard_normal(4)
    h = 1e-6
    fd = np.array([(f(pt + h * e) - f(pt - h * e)) / (2 * h) for e in np.eye(4)])
    assert np.allclose(ev.grad(pt), fd, atol=1e-6)
    assert ev.value(pt) == pytest.approx(f(pt), rel=1e-12)


# ------------------------------------------------------------ Laplacian, apolar

def test_laplacian_examples():
    s = poly.s_power(3, 1)
    assert poly.laplacian(s).allclose(Form.constant(3, 6.0))
    assert poly.laplacian(x(0, 3) * x(0, 3) - s / 3).allclose(Form.zero(3, 0))
    assert poly.laplacian(Form.monomial((3,))).coeffs == {(1,): 6.0}
    assert poly.laplacian(x(0, 2)).nterms == 0


def test_laplacian_of_s_times_g():
    rng = np.random.default_rng(3)
    for n, k in [(2, 2), (3, 3), (4, 2)]:
        g = poly.random_form(n, k, rng)
        s = poly.s_power(n, 1)
        lhs = poly.laplacian(s * g)
        rhs = g * (2 * (n + 2 * k)) + s * poly.laplacian(g)
        assert lhs.max_abs_diff(rhs) <= 1e-10


def test_apolar_examples():
    assert poly.apolar(Form.monomial((2, 0)), Form.monomial((2, 0))) == 2.0
    assert poly.apolar(Form.monomial((1, 1)), Form.monomial((1, 1))) == 1.0
    with pytest.raises(ValueError):
        poly.apolar(Form.monomial((2, 0)), Form.monomial((1, 0)))


def test_apolar_adjunction():
    rng = np.random.default_rng(4)
    s = poly.s_power(3, 1)
    for _ in range(10):
        f, g = poly.random_form(3, 4, rng), poly.random_form(3, 2, rng)
        assert poly.apolar(f, s * g) == pytest.approx(poly.apolar(poly.laplacian(f), g), abs=1e-10)


# ------------------------------------------------------------ harmonic decomposition

def test_harmonic_of_s_power():
    dec = poly.harmonic_decompose(poly.s_power(3, 2))
    assert [c.nterms for c in dec.components[1:]] == [0, 0]
    assert dec.components[0].coeff((0, 0, 0)) == pytest.approx(1.0)


def test_harmonic_of_x1_squared():
    dec = poly.harmonic_decompose(Form.monomial((2, 0)))
    f2 = Form(2, 2, {(2, 0): 0.5, (0, 2): -0.5})
    assert dec.components[1].allclose(f2)
    assert dec.components[0].coeff((0, 0)) == pytest.approx(0.5)
    assert poly.laplacian(dec.components[1]).allclose(Form.zero(2, 0))


def test_harmonic_rejects_odd_degree():
    with pytest.raises(ValueError):
        poly.harmonic_decompose(Form.monomial((2, 1)))


@pytest.mark.parametrize("seed", range(5))
def test_harmonic_recomposition_and_orthogonality(seed):
    n = 3
    f = poly.random_form(n, 6, np.random.default_rng(seed))
    dec = poly.harmonic_decompose(f)
    assert dec.recompose().max_abs_diff(f) <= 1e-10
    r = dec.r
    pieces = []
    for k, fk in enumerate(dec.components):
        assert fk.degree in (2 * k, 0) or fk.nterms == 0
        if k:
            assert poly.laplacian(fk).max_abs_diff(Form.zero(n, 2 * k - 2)) <= 1e-10
        pieces.append(poly.s_power(n, r - k) * fk)
    for k in range(len(pieces)):
        for j in range(k):
            if pieces[k].nterms and pieces[j].nterms:
                assert abs(poly.apolar(pieces[k], pieces[j])) <= 1e-9


# ------------------------------------------------------------ sphere search

def test_sphere_extrema_of_s_power():
    pmin, pmax, _, _ = poly.sphere_extrema_estimate(poly.s_power(3, 2), restarts=5)
    assert pmin == pytest.approx(1.0, abs=1e-12)
    assert pmax == pytest.approx(1.0, abs=1e-12)


def test_sphere_extrema_of_quadratic():
    rng = np.random.default_rng(5)
    for _ in range(5):
        A = rng.standard_normal((4, 4))
        A = A + A.T
        lam = np.linalg.eigvalsh(A)
        pmin, pmax, xmin, _ = poly.sphere_extrema_estimate(poly.quadratic_form(A), restarts=10)
        assert abs(pmin - lam[0]) <= 1e-8 and abs(pmax - lam[-1]) <= 1e-8
        assert np.linalg.norm(xmin) == pytest.approx(1.0)


def test_sphere_extrema_choi_lam():
    pmin, _, xmin, _ = poly.sphere_extrema_estimate(poly.embed(choi_lam(), 5), restarts=20)
    assert abs(pmin) <= 1e-8


def test_sphere_extrema_within_grid_range():
    rng = np.random.default_rng(6)
    th = np.linspace(0, 2 * np.pi, 10_000)
    pts = np.stack([np.cos(th), np.sin(th)], axis=1)
    for _ in range(5):
        f = poly.random_form(2, 6, rng)
        vals = np.array([f(p) for p in pts])
        pmin, pmax, _, _ = poly.sphere_extrema_estimate(f, restarts=5)
        assert vals.min() - 1e-6 <= pmin <= vals.max() + 1e-6
        assert vals.min() - 1e-6 <= pmax <= vals.max() + 1e-6
        assert pmin <= vals.min() + 1e-6 and pmax >= vals.max() - 1e-6


def test_sphere_extrema_deterministic():
    f = poly.random_form(4, 4, np.random.default_rng(7))
    assert poly.sphere_extrema_estimate(f, 5, seed=3)[:2] == poly.sphere_extrema_estimate(f, 5, seed=3)[:2]
    with pytest.raises(ValueError):
        poly.sphere_extrema_estimate(f, 0)


def test_embed_pads_variables():
    p = choi_lam()
    q = poly.embed(p, 5)
    assert q.n == 5 and all(a[4] == 0 for a in q.coeffs)
    with pytest.raises(ValueError):
        poly.embed(q, 4)
    assert mindex.dim_sym(5, 4) > q.nterms

import math

import numpy as np
import pytest

from spherehier import hierarchy as hy
from spherehier import mindex, poly, sdp
from spherehier import symmat as sm
from spherehier.poly import Form, embed, quadratic_form, s_power


@pytest.fixture(scope="module")
def p_cl():
    return embed(hy.choi_lam(), 5)


def random_quadratic(n, rng):
    A = rng.standard_normal((n, n))
    return A + A.T


# ------------------------------------------------------------ building blocks

def test_build_at_level_d():
    rng = np.random.default_rng(0)
    p = poly.random_form(3, 4, rng)
    Q, M = hy.build_Qr_Mr(p, 2)
    assert np.allclose(Q.data, sm.maxsym_of_form(p).as_sym_matrix().data)
    assert np.allclose(M.data, sm.maxsym_of_form(s_power(3, 2)).as_sym_matrix().data)


def test_lifted_matrices_represent_products(p_cl):
    _, M = hy.build_Qr_Mr(poly.random_form(3, 4, np.random.default_rng(1)), 4)
    assert sm.form_of_gram(M).allclose(s_power(3, 4), 1e-10)
    assert np.linalg.eigvalsh(M.data)[0] > 0
    Q, _ = hy.build_Qr_Mr(p_cl, 3)
    assert sm.form_of_gram(Q).allclose(s_power(5, 1) * p_cl, 1e-10)


def test_build_errors():
    p = poly.random_form(5, 4, np.random.default_rng(2))
    with pytest.raises(ValueError):
        hy.build_Qr_Mr(p, 1)
    with pytest.raises(sm.SizeCapError):
        hy.build_Qr_Mr(p, 6, cap=100)
    with pytest.raises(ValueError):
        hy.build_Qr_Mr(Form.monomial((2, 1)), 2)


def test_choi_lam_form(p_cl):
    f = hy.choi_lam()
    assert f.nterms == 5 and sorted(f.coeffs.values()) == [-4, 1, 1, 1, 1]
    assert f([1, 1, 1, 1]) == 0.0
    x = np.array([0.3, -0.2, 0.5, 0.1])
    assert p_cl(np.append(x, 0.7)) == pytest.approx(f(x))


def test_embedded_maxsym_has_zero_block(p_cl):
    G = sm.maxsym_of_form(p_cl).as_sym_matrix().data
    basis = mindex.enumerate_multi_indices(5, 2)
    touches = np.array([a[4] > 0 for a in basis])
    assert np.all(G[touches] == 0) and np.all(G[:, touches] == 0)
    small = sm.maxsym_of_form(hy.choi_lam()).as_sym_matrix().data
    assert np.allclose(G[np.ix_(~touches, ~touches)], small)


# ------------------------------------------------------------ bounds

def test_quadratic_bounds_are_lambda_min():
    rng = np.random.default_rng(3)
    for _ in range(3):
        A = random_quadratic(4, rng)
        lam = np.linalg.eigvalsh(A)[0]
        p = quadratic_form(A)
        assert hy.spectral_bound(p, 1).value == pytest.approx(lam, abs=1e-8)
        assert hy.sos_bound(p, 1).value == pytest.approx(lam, abs=1e-8)


@pytest.mark.parametrize("r", [2, 3, 4])
def test_s_power_bounds_are_one(r):
    p = s_power(3, 2)
    assert hy.spectral_bound(p, r).value == pytest.approx(1.0, abs=1e-10)
    assert hy.sos_bound(p, r).value == pytest.approx(1.0, abs=1e-8)


def test_spectral_report_diagnostics(p_cl):
    rep = hy.spectral_bound(p_cl, 3, label="cl")
    assert rep.method == "spectral" and rep.label == "cl"
    assert rep.diagnostics["N"] == mindex.dim_sym(5, 3)
    assert 0 < rep.diagnostics["lambda_min_Mr"] <= rep.diagnostics["lambda_max_Mr"]
    assert rep.as_dict()["value"] == rep.value


def test_choi_lam_bounds_are_negative_and_sandwiched(p_cl):
    prev_sp = prev_sos = -math.inf
    for r in (2, 3):
        sp = hy.spectral_bound(p_cl, r).value
        rep = hy.sos_bound(p_cl, r)
        sos = rep.value
        assert sp < 0 and sos < 0
        assert sp <= sos + 1e-6
        assert sp >= prev_sp - 1e-8 and sos >= prev_sos - 1e-8
        assert rep.diagnostics["status"] == "Optimal"
        assert rep.diagnostics["gram_min_eig"] >= -1e-7
        assert rep.diagnostics["gram_residual"] <= 1e-6
        prev_sp, prev_sos = sp, sos


def test_sos_gram_reexpands_to_target():
    rng = np.random.default_rng(4)
    p = poly.random_form(3, 4, rng)
    r = 3
    rep = hy.sos_bound(p, r)
    prob, c, t = hy.sos_problem(p, r)
    sol = sdp.solve(prob)
    g = hy.gram_polynomial(sol.X, 3, r)
    target = (s_power(3, 1) * p - s_power(3, r) * rep.value).to_vector()
    assert np.abs(g - target).max() <= 1e-6


def test_shift_and_scale_equivariance():
    rng = np.random.default_rng(5)
    p = poly.random_form(3, 4, rng)
    s2 = s_power(3, 2)
    for r in (2, 3):
        sp = hy.spectral_bound(p, r).value
        sos = hy.sos_bound(p, r).value
        assert hy.spectral_bound(p + s2 * 0.75, r).value == pytest.approx(sp + 0.75, abs=1e-8)
        assert hy.sos_bound(p + s2 * 0.75, r).value == pytest.approx(sos + 0.75, abs=1e-7)
        assert hy.spectral_bound(p * 3.0, r).value == pytest.approx(3 * sp, rel=1e-8)
        assert hy.sos_bound(p * 3.0, r).value == pytest.approx(3 * sos, rel=1e-7)


@pytest.mark.parametrize("seed", range(3))
def test_sandwich_random_forms(seed):
    rng = np.random.default_rng(100 + seed)
    p = poly.random_form(3, 4, rng)
    pmin = poly.sphere_extrema_estimate(p, 10, seed)[0]
    prev = -math.inf
    for r in (2, 3, 4):
        sp, sos = hy.spectral_bound(p, r).value, hy.sos_bound(p, r).value
        assert sp <= sos + 1e-6 <= pmin + 2e-6
        assert sp >= prev - 1e-8
        prev = sp


def test_sos_size_cap():
    with pytest.raises(sm.SizeCapError):
        hy.sos_bound(poly.random_form(5, 4, np.random.default_rng(6)), 5, cap=100)


# ------------------------------------------------------------ constants

def test_gamma_constant():
    assert hy.gamma_const(s_power(2, 2), p_min=1.0) == pytest.approx(1 / 3, abs=1e-12)
    A = random_quadratic(3, np.random.default_rng(7))
    lam = np.linalg.eigvalsh(A)
    assert hy.gamma_const(quadratic_form(A), p_min=lam[0]) == pytest.approx(lam[-1] - lam[0], abs=1e-10)


def test_gamma_constant_choi_lam(p_cl):
    assert hy.gamma_const(p_cl, restarts=5) > 0


def test_kappa():
    k = hy.kappa(2, 2)
    assert k["lambda_max"] == pytest.approx(4 / 3) and k["kappa"] == pytest.approx(2.0)
    assert hy.kappa(5, 2)["kappa"] == pytest.approx(3.5)
    assert hy.kappa(1, 3)["kappa"] == pytest.approx(1.0)


def test_choi_lam_experiment_rows():
    rows = hy.choi_lam_experiment(4, sos_r_max=2, workers=2)
    assert [row.r for row in rows] == [2, 3, 4]
    assert all(row.passed for row in rows)
    assert rows[0].floor <= abs(rows[0].sp)
    assert rows[0].sos is not None and rows[1].sos is None
    assert rows[0].sp <= rows[0].sos + 1e-6


def test_thread_env(monkeypatch):
    monkeypatch.setenv("SPHERE_HIER_THREADS", "3")
    assert hy.max_workers() == 3
    monkeypatch.setenv("SPHERE_HIER_THREADS", "zero")
    assert hy.max_workers() == 1

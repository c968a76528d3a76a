import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import i0, i1

import transmute.spps as spps_mod
from helpers import expand
from oracles import recursive_integrals_ode, shoot, shoot_path
from transmute.chebfun import cheb_nodes, derivative
from transmute.errors import ConstructionError, NonVanishingError
from transmute.spps import (
    formal_powers,
    particular_solution,
    recursive_integrals,
    sanity_ratio,
    spps_char_roots,
    spps_solution,
)

U = np.finfo(float).eps
SQ15 = math.sqrt(15.0)


def zero_table(N, b=1.0, M=64):
    q = expand(lambda x: 0 * x, (0, b), M)
    return formal_powers(particular_solution(q), N)


def well_solution(M=128):
    """Closed-form ``f = exp(i sqrt(15) x)`` for ``q = -15`` on ``(0, 2)``."""
    q = expand(lambda x: -15 + 0 * x, (0, 2), M)
    x = cheb_nodes(M, (0, 2))
    f = np.exp(1j * SQ15 * x)
    return particular_solution(q, strategy="closed-form-samples", samples=f, derivative_samples=1j * SQ15 * f)


def paine_solution(M=256):
    return particular_solution(expand(np.exp, (0, math.pi), M))


# ---------------------------------------------------------------- q = 0


def _monomial_ratio(N, b):
    t = zero_table(N, b)
    x = t.nodes
    worst = 0.0
    for n in range(N + 1):
        bound = 100 * max(N, 1) * U * b**n
        worst = max(worst, np.abs(t.X_values[n] - x**n).max() / bound, np.abs(t.Xt_values[n] - x**n).max() / bound)
    return worst


@settings(max_examples=25, deadline=None)
@given(N=st.integers(0, 12), b=st.floats(0.3, 3.0))
def test_free_recursive_integrals_are_monomials(N, b):
    assert _monomial_ratio(N, b) <= 1.0


@pytest.mark.xfail(
    strict=True,
    reason="each integration rescales the previous roundoff by n, so the error grows like n! u b^n "
    "and outruns a 100 N u b^n bound from about N = 14",
)
def test_free_recursive_integrals_high_order():
    assert _monomial_ratio(20, 1.0) <= 1.0


def test_free_formal_powers_and_traces():
    t = zero_table(12, 1.7)
    x = t.nodes
    for k in range(13):
        tol = 1e-12 * 1.7**k
        assert np.abs(t.phi_values[k] - x**k).max() <= tol
        assert np.abs(t.psi_values[k] - x**k).max() <= tol
    for m in range(1, 13):
        tol = 1e-12 * 3.4**m
        assert np.abs(t.c_values[m] - 2.0 ** (m - 1) * x**m).max() <= tol
        assert np.abs(t.s_values[m] - 2.0 ** (m - 1) * x**m).max() <= tol


def test_free_particular_solution():
    ps = particular_solution(expand(lambda x: 0 * x, (0, 1), 32))
    np.testing.assert_allclose(ps.f.values(), 1.0)
    assert ps.h == 0
    assert ps.gamma is None


# ---------------------------------------------------------------- particular solutions


def test_square_well_auto_picks_exponential():
    ps = particular_solution(expand(lambda x: -15 + 0 * x, (0, 2), 128))
    x = np.linspace(0, 2, 41)
    assert np.abs(ps.f(x) - np.exp(1j * SQ15 * x)).max() < 1e-12
    assert abs(ps.h - 1j * SQ15) < 1e-12


def test_closed_form_samples():
    ps = well_solution()
    assert abs(ps.h - 1j * SQ15) < 1e-14
    assert ps.residual < 1e-9


def test_paine_particular_solution_against_ode():
    ps = paine_solution()
    xs = np.linspace(0.1, math.pi, 9)
    ref, dref = shoot_path(lambda x: math.exp(x), 0.0, xs, 1.0, ps.h)
    assert np.abs(ps.f(xs) - ref).max() / np.abs(ref).max() < 1e-12
    assert np.abs(ps.f_prime(xs) - dref).max() / np.abs(dref).max() < 1e-11


def test_paine_bessel_closed_form():
    # I0(2 e^{x/2}) solves f'' = e^x f
    M = 256
    q = expand(np.exp, (0, math.pi), M)
    x = cheb_nodes(M, (0, math.pi))
    f = i0(2 * np.exp(x / 2)) / i0(2.0)
    fp = i1(2 * np.exp(x / 2)) * np.exp(x / 2) / i0(2.0)
    ps = particular_solution(q, strategy="closed-form-samples", samples=f, derivative_samples=fp)
    assert abs(ps.h - i1(2.0) / i0(2.0)) < 1e-15
    end, _ = shoot(lambda s: math.exp(s), 0.0, math.pi, 1.0, ps.h)
    assert abs(ps.f(math.pi) - end) / abs(end) < 1e-12


def test_vanishing_samples_rejected():
    q = expand(lambda x: 0 * x, (0, 1), 16)
    x = cheb_nodes(16, (0, 1))
    with pytest.raises(NonVanishingError):
        particular_solution(q, strategy="closed-form-samples", samples=1 - x)


def test_construction_error_carries_min_abs(monkeypatch):
    monkeypatch.setattr(spps_mod, "NONVANISH_TOL", 1e9)
    with pytest.raises(ConstructionError) as info:
        particular_solution(expand(lambda x: -15 + 0 * x, (0, 2), 64))
    assert info.value.min_abs > 0


def test_bad_strategy_and_sample_count():
    q = expand(lambda x: 0 * x, (0, 1), 16)
    with pytest.raises(ValueError):
        particular_solution(q, strategy="magic")
    with pytest.raises(ValueError):
        particular_solution(q, strategy="closed-form-samples", samples=np.ones(5))


# ---------------------------------------------------------------- recursive integrals


def test_first_integral_is_inverse_square():
    ps = well_solution()
    X, _ = recursive_integrals(ps, 1)
    x = ps.nodes
    expect = (1 - np.exp(-2j * SQ15 * x)) / (2j * SQ15)
    assert np.abs(X[1] - expect).max() < 1e-13


def test_well_integrals_against_quadrature_chain():
    ps = well_solution()
    X, Xt = recursive_integrals(ps, 8)
    ref = recursive_integrals_ode(lambda s: np.exp(1j * SQ15 * s), 8, 2.0)
    reft = recursive_integrals_ode(lambda s: np.exp(1j * SQ15 * s), 8, 2.0, tilde=True)
    assert np.max(np.abs(X[:, 0] - ref) / np.maximum(1, np.abs(ref))) < 1e-12
    assert np.max(np.abs(Xt[:, 0] - reft) / np.maximum(1, np.abs(reft))) < 1e-12


def test_negative_order():
    with pytest.raises(ValueError):
        recursive_integrals(well_solution(), -1)


def test_formal_powers_vanish_at_origin():
    t = formal_powers(paine_solution(), 20)
    phi0, psi0 = t.phi_values[:, -1], t.psi_values[:, -1]
    assert phi0[0] == pytest.approx(1) and psi0[0] == pytest.approx(1)
    assert np.all(phi0[1:] == 0) and np.all(psi0[1:] == 0)


# ---------------------------------------------------------------- power series solutions


def test_spps_lambda_zero():
    t = formal_powers(paine_solution(128), 9)
    y1, y2, _, _ = spps_solution(t, 0.0, 4)
    np.testing.assert_allclose(y1.values(), t.solution.f_values, atol=1e-12)
    np.testing.assert_allclose(y2.values(), t.phi_values[1], atol=1e-12)
    v1, v2, _, _ = spps_solution(t, 0.0, 4, samples=True)
    np.testing.assert_array_equal(v1, t.solution.f_values)
    np.testing.assert_array_equal(v2, t.phi_values[1])


def test_spps_free_trig():
    t = zero_table(41, 1.0, 64)
    w = 3.0
    y1, y2, d1, d2 = spps_solution(t, -(w**2), 20)
    x = np.linspace(0, 1, 11)
    np.testing.assert_allclose(y1(x), np.cos(w * x), atol=1e-13)
    np.testing.assert_allclose(y2(x), np.sin(w * x) / w, atol=1e-13)
    np.testing.assert_allclose(d1(x), -w * np.sin(w * x), atol=1e-12)
    np.testing.assert_allclose(d2(x), np.cos(w * x), atol=1e-13)


def test_spps_initial_values():
    t = formal_powers(paine_solution(128), 21)
    h = t.solution.h
    y1, y2, d1, d2 = spps_solution(t, 7.5 - 2j, 10, samples=True)
    # x = 0 is the last node
    assert abs(y1[-1] - 1) <= 10 * U
    assert abs(d1[-1] - h) <= 10 * U * (1 + abs(h))
    assert abs(y2[-1]) <= 10 * U
    assert abs(d2[-1] - 1) <= 10 * U
    # the interpolants reproduce this up to coefficient-sum roundoff
    e1, e2, _, _ = spps_solution(t, 7.5 - 2j, 10)
    scale = np.abs(y1).max() + np.abs(y2).max()
    assert abs(e1(0.0) - 1) <= 100 * U * scale
    assert abs(e2(0.0)) <= 100 * U * scale


def _spps_shooting_error(M=256):
    t = formal_powers(paine_solution(M), 121)
    h = t.solution.h
    y1, y2, _, _ = spps_solution(t, 10.0, 60)
    xs = np.linspace(0.2, math.pi, 7)
    # y'' - q y = 10 y  is  -y'' + q y = -10 y
    r1, _ = shoot_path(lambda s: math.exp(s), -10.0, xs, 1.0, h)
    r2, _ = shoot_path(lambda s: math.exp(s), -10.0, xs, 0.0, 1.0)
    return max(np.abs(y1(xs) - r1).max() / np.abs(r1).max(), np.abs(y2(xs) - r2).max() / np.abs(r2).max())


def test_spps_against_shooting():
    assert _spps_shooting_error() < 5e-9


@pytest.mark.xfail(
    strict=True,
    reason="the low-order recursive integrals for q = e^x already carry relative errors of 1e-12..1e-10 "
    "(checked against a 25-digit ODE integration), so y1, y2 agree with shooting to about 6e-10",
)
def test_spps_against_shooting_1e10():
    assert _spps_shooting_error() < 1e-10


def test_spps_residual_decreases_with_K():
    t = formal_powers(paine_solution(256), 81)
    q = t.solution.q.values()
    x = t.nodes
    res = []
    for K in range(10, 41, 5):
        y1, _, d1, _ = spps_solution(t, -25.0, K)
        res.append(np.abs(derivative(d1)(x) - (q - 25.0) * y1.values()).max())
    for a, b in zip(res, res[1:]):
        assert b <= 1.1 * a


def test_spps_table_too_short():
    with pytest.raises(ValueError):
        spps_solution(zero_table(5), 1.0, 3)


# ---------------------------------------------------------------- polynomial roots


def test_char_roots_free_dirichlet():
    t = zero_table(25, math.pi, 64)
    roots = spps_char_roots(t, (1, 0), (1, 0), 12, 5.0)
    assert abs(roots[0] - 1.0) < 1e-8


def test_char_roots_complex_neumann():
    q = expand(lambda x: 3 + 4j + 0 * x, (0, math.pi), 128)
    t = formal_powers(particular_solution(q), 29)
    roots = spps_char_roots(t, (0, 1), (0, 1), 14, 8.0)
    # K = 14 truncation error at |lam| = 5 on (0, pi)
    assert np.min(np.abs(roots - (3 + 4j))) < 1e-6


def test_char_roots_degree_checks():
    t = zero_table(5)
    with pytest.raises(ValueError):
        spps_char_roots(t, (1, 0), (1, 0), 0, 1.0)
    with pytest.raises(ValueError):
        spps_char_roots(t, (1, 0), (1, 0), 3, 1.0)


# ---------------------------------------------------------------- diagnostic


def test_sanity_free_is_one():
    rep = sanity_ratio(zero_table(20, 1.0, 64), 1.0)
    np.testing.assert_allclose(rep.ratios[:13], 1.0, rtol=1e-12)
    assert not rep.flagged


def test_sanity_healthy_at_right_end():
    t = formal_powers(paine_solution(256), 40)
    rep = sanity_ratio(t, math.pi)
    assert not rep.flagged
    last = rep.ratios[-(rep.ratios.size // 4):]
    assert np.all((last > 0.1) & (last < 10))


@pytest.mark.xfail(
    strict=True,
    reason="at interior x the ratio phi_k(x)/x^k divides Clenshaw-Curtis roundoff of size u*pi^k by x^k, "
    "so the last quartile reaches 1e11 in double precision",
)
def test_sanity_interior_point_double_precision():
    t = formal_powers(paine_solution(256), 40)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        assert not sanity_ratio(t, 1.0).flagged


def test_sanity_flags_under_resolved_run():
    with pytest.warns(RuntimeWarning, match="residual"):
        t = formal_powers(paine_solution(8), 40)
    with pytest.warns(RuntimeWarning):
        assert sanity_ratio(t, 1.0).flagged


def test_sanity_domain():
    with pytest.raises(ValueError):
        sanity_ratio(zero_table(4), 0.0)

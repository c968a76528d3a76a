"""Independent reference solvers used only by the tests.

Nothing here touches the transmutation machinery: initial-value problems go
through scipy's DOP853 integrator, Dirichlet eigenvalues through a modified
Prüfer angle, moments through mpmath's adaptive quadrature.
"""

from __future__ import annotations

import mpmath
import numpy as np
from scipy.integrate import solve_ivp

RTOL = 1e-13
ATOL = 1e-14


def shoot(q, lam, x_end, y0, yp0, x_start=0.0):
    """``(y, y')`` at ``x_end`` for ``-y'' + q y = lam y`` (complex ``q``, ``lam`` allowed)."""

    def rhs(x, u):
        return [u[1], (q(x) - lam) * u[0]]

    sol = solve_ivp(
        rhs,
        (x_start, x_end),
        np.array([y0, yp0], dtype=complex),
        method="DOP853",
        rtol=RTOL,
        atol=ATOL,
    )
    return sol.y[0, -1], sol.y[1, -1]


def shoot_path(q, lam, xs, y0, yp0):
    """Solution values at the sorted abscissas ``xs`` (starting from 0)."""

    def rhs(x, u):
        return [u[1], (q(x) - lam) * u[0]]

    xs = np.asarray(xs, dtype=float)
    sol = solve_ivp(
        rhs,
        (0.0, float(xs.max())),
        np.array([y0, yp0], dtype=complex),
        method="DOP853",
        rtol=RTOL,
        atol=ATOL,
        t_eval=xs,
        dense_output=False,
    )
    return sol.y[0], sol.y[1]


def prufer_phase(q, lams, b):
    """Deviation ``eta(b) = theta(b) - sqrt(lam) b`` of the modified Prüfer angle.

    With ``y = r sin(theta) / sqrt(S)``, ``y' = r sqrt(S) cos(theta)`` and
    ``S = sqrt(lam)``, ``theta' = S - (q / S) sin^2(theta)`` from
    ``theta(0) = 0`` (Dirichlet).  Integrating the small deviation instead
    of ``theta`` keeps the error tolerance relative to ``q b / S`` rather
    than to ``S b``, which matters for high indices.
    """
    lams = np.asarray(lams, dtype=float)
    S = np.sqrt(lams)

    def rhs(x, eta):
        return -q(x) / S * np.sin(S * x + eta) ** 2

    sol = solve_ivp(rhs, (0.0, b), np.zeros_like(lams), method="DOP853", rtol=RTOL, atol=1e-16)
    return sol.y[:, -1]


def prufer_angle(q, lams, b):
    """Modified Prüfer angle at ``b``; the n-th Dirichlet eigenvalue has ``theta(b) = n pi``."""
    lams = np.asarray(lams, dtype=float)
    return np.sqrt(lams) * b + prufer_phase(q, lams, b)


def dirichlet_eigenvalues(q, b, n_max, q_min, q_max, tol=1e-15, max_iter=80):
    """Dirichlet eigenvalues ``lam_1..lam_{n_max}`` of ``-y'' + q y`` on ``(0, b)``.

    All indices are refined together by the Illinois variant of regula falsi
    on ``theta(b; lam) - n pi``.  The comparison brackets
    ``(n pi / b)^2 + [q_min, q_max]`` hold for every index; the potential
    must keep ``lam > 0`` throughout (``q_min > -(pi/b)^2``).
    """
    n = np.arange(1, n_max + 1)
    base = (n * np.pi / b) ** 2
    lo = base + q_min - 1e-9
    hi = base + q_max + 1e-9
    if np.any(lo <= 0):
        raise ValueError("oracle needs positive lam brackets")
    target = n * np.pi

    def mismatch(lam):
        # subtract n pi from S b before adding the small phase deviation
        return (np.sqrt(lam) * b - target) + prufer_phase(q, lam, b)

    flo = mismatch(lo)
    fhi = mismatch(hi)
    assert np.all(flo <= 0) and np.all(fhi >= 0)
    side = np.zeros(n_max)
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = (lo * fhi - hi * flo) / (fhi - flo)
        fm = mismatch(mid)
        left = fm < 0
        lo = np.where(left, mid, lo)
        flo = np.where(left, fm, flo)
        hi = np.where(left, hi, mid)
        fhi = np.where(left, fhi, fm)
        # Illinois: halve the stale end when the same side repeats
        fhi = np.where(left & (side == 1), 0.5 * fhi, fhi)
        flo = np.where(~left & (side == -1), 0.5 * flo, flo)
        side = np.where(left, 1, -1)
        if np.all((hi - lo <= tol * hi) | (np.abs(fm) <= 4 * np.finfo(float).eps * target)):
            break
    return mid


def count_below(q, b, lam_top):
    """Number of Dirichlet eigenvalues below ``lam_top`` (``floor(theta(b) / pi)``)."""
    theta = prufer_angle(q, np.array([lam_top]), b)[0]
    return int(np.floor(theta / np.pi))


def recursive_integrals_ode(f, n_max, x_end, tilde=False):
    """``X^(n)(x_end)`` (or ``X~^(n)``) for ``n <= n_max`` from the ODE chain.

    ``X^(n)' = n X^(n-1) w_n`` with ``w_n = f^(-2)`` for odd ``n`` and
    ``f^2`` for even ``n`` (swapped for the tilde family), integrated as one
    system from ``X^(n)(0) = 0``.  ``f`` is any callable.
    """
    n = np.arange(1, n_max + 1)
    odd = (n % 2 == 1) != tilde

    def rhs(x, X):
        fx = f(x)
        w = np.where(odd, 1.0 / fx**2, fx**2)
        prev = np.concatenate([[1.0], X[:-1]])
        return n * prev * w

    sol = solve_ivp(rhs, (0.0, x_end), np.zeros(n_max, dtype=complex), method="DOP853", rtol=RTOL, atol=ATOL)
    return np.concatenate([[1.0], sol.y[:, -1]])


def moment_quad(omega, x, k, kind):
    """``int_0^x t^k sin/cos(omega t) dt`` by 30-digit adaptive quadrature."""
    with mpmath.workdps(30):
        w = mpmath.mpc(omega)
        fn = mpmath.sin if kind == "sin" else mpmath.cos
        # split the range so oscillatory integrands stay well sampled
        pts = mpmath.linspace(0, x, 2 + int(abs(omega) * x))
        val = mpmath.quad(lambda t: t**k * fn(w * t), pts)
        return complex(val)

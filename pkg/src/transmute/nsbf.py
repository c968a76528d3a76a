"""Approximate solutions as finite sums of trigonometric moments.

With the kernel coefficients ``a_n, b_n`` fixed, the solutions of
``-y'' + q y = omega^2 y`` with ``c(0) = 1, c'(0) = h`` and
``s(0) = 0, s'(0) = 1`` are approximated by

    c_N = cos(omega x) + 2 sum_n a_n sum_{k even} C(n,k) phi_{n-k}(x) int_0^x t^k cos(omega t) dt
    s_N = (sin(omega x) + 2 sum_n b_n sum_{k odd} C(n,k) phi_{n-k}(x) int_0^x t^k sin(omega t) dt) / omega

and the derivative approximations ``dc_N``, ``ds_N`` come from the Darboux
kernel, which shares the same coefficients but uses ``psi`` in place of
``phi``.  For a fixed ``x`` every one of these is a dot product of a weight
vector (cached per ``x``) with the moment vector of the current ``omega``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import comb

from .traces import KernelApproximation

__all__ = [
    "TrigMoments",
    "trig_moments",
    "SolutionBasis",
    "c_N",
    "s_N",
    "dc_N",
    "ds_N",
    "solutions",
    "kernel_eval",
]

EPS = np.finfo(float).eps
# below this |omega x| the moments come from their Maclaurin series
SERIES_THRESHOLD = 0.5
# extra orders used to start the downward recurrence
DOWNWARD_PAD = 20


@dataclass(frozen=True, eq=False)
class TrigMoments:
    """``int_0^x t^k sin(omega t) dt`` and the cosine analogue, ``k = 0..k_max``.

    ``sin_over_omega`` holds the sine moments divided by ``omega``, taken as a
    limit when ``omega = 0``; ``sinc`` is ``sin(omega x) / omega`` likewise.
    """

    omega: complex
    x: float
    sin_moments: np.ndarray
    cos_moments: np.ndarray
    sin_over_omega: np.ndarray
    sinc: complex


def _series_moments(omega, x, k_max):
    """Maclaurin sums for small ``|omega x|``; returns ``(S/omega, C, sinc)``."""
    z2 = (omega * x) ** 2
    k = np.arange(k_max + 1)
    s_acc = np.zeros(k_max + 1, dtype=complex)
    c_acc = np.zeros(k_max + 1, dtype=complex)
    sinc_acc = 0.0j
    zpow = 1.0 + 0.0j
    for j in range(60):
        ts = zpow / (math.factorial(2 * j + 1) * (k + 2 * j + 2))
        tc = zpow / (math.factorial(2 * j) * (k + 2 * j + 1))
        t_sinc = zpow / math.factorial(2 * j + 1)
        s_acc += ts
        c_acc += tc
        sinc_acc += t_sinc
        if np.all(np.abs(ts) <= EPS * np.abs(s_acc)) and np.all(np.abs(tc) <= EPS * np.abs(c_acc)):
            break
        zpow *= -z2
    xk = x ** k.astype(float)
    return s_acc * xk * x * x, c_acc * xk * x, sinc_acc * x


def _exp_moments(z, k_max):
    """``e_k = int_0^1 s^k exp(i z s) ds`` for ``k = 0..k_max``.

    Upward recurrence while ``k <= |z|`` and downward recurrence, started
    from a confluent series, above it; each direction is the stable one in
    its range.
    """
    iz = 1j * z
    ez = cmath.exp(iz)
    e = np.empty(k_max + 1, dtype=complex)
    m = min(k_max, int(math.floor(abs(z))))
    e[0] = (ez - 1.0) / iz
    for k in range(1, m + 1):
        e[k] = (ez - k * e[k - 1]) / iz
    if m < k_max:
        K0 = max(k_max, int(math.ceil(abs(z)))) + DOWNWARD_PAD
        # int_0^1 s^K e^{izs} ds = e^{iz} sum_j (-iz)^j / ((K+1)...(K+j+1))
        term = 1.0 / (K0 + 1)
        total = term
        j = 0
        while abs(term) > EPS * abs(total) and j < 2000:
            j += 1
            term *= -iz / (K0 + j + 1)
            total += term
        ek = ez * total
        for k in range(K0, m + 1, -1):
            ek = (ez - iz * ek) / k
            if k - 1 <= k_max:
                e[k - 1] = ek
    return e


def trig_moments(omega, x: float, k_max: int, threshold: float = SERIES_THRESHOLD) -> TrigMoments:
    """Sine and cosine moments of orders ``0..k_max`` on ``[0, x]``.

    Args:
        omega: complex spectral parameter.
        x: upper integration limit (``x >= 0``).
        k_max: highest power of ``t``.
        threshold: ``|omega x|`` below which the Maclaurin branch is used.
    """
    if k_max < 0:
        raise ValueError("k_max must be non-negative")
    omega = complex(omega)
    x = float(x)
    z = omega * x
    if abs(z) < threshold:
        s_div, cos_m, sinc = _series_moments(omega, x, k_max)
        sin_m = omega * s_div
    else:
        xk1 = x ** np.arange(1, k_max + 2, dtype=float)
        ep = _exp_moments(z, k_max) * xk1
        em = _exp_moments(-z, k_max) * xk1
        cos_m = 0.5 * (ep + em)
        sin_m = -0.5j * (ep - em)
        s_div = sin_m / omega
        sinc = cmath.sin(z) / omega
    return TrigMoments(omega, x, sin_m, cos_m, s_div, complex(sinc))


@dataclass(frozen=True, eq=False)
class _Weights:
    wc: np.ndarray  # even k, against cos moments
    ws: np.ndarray  # odd k, against sin moments / omega
    wcd: np.ndarray  # odd k, against omega * sin moments
    wsd: np.ndarray  # even k, against cos moments
    dlog: complex  # f'/f at x
    phi: np.ndarray
    psi: np.ndarray


@dataclass(frozen=True, eq=False)
class SolutionBasis:
    """Kernel coefficients together with the formal powers they refer to."""

    kernel: KernelApproximation
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def table(self):
        return self.kernel.table

    @property
    def solution(self):
        return self.kernel.table.solution

    @property
    def N(self) -> int:
        return self.kernel.N

    @property
    def h(self) -> complex:
        return self.kernel.h

    @property
    def interval(self):
        return self.table.interval

    def check_x(self, x) -> float:
        lo, hi = self.interval
        x = float(x)
        if x < lo - 1e-12 * (hi - lo) or x > hi + 1e-12 * (hi - lo):
            raise ValueError(f"x={x} outside [{lo}, {hi}]")
        return min(max(x, lo), hi)

    def powers_at(self, x):
        """``phi_0..phi_N`` and ``psi_0..psi_N`` at ``x``; node values at the ends."""
        N = self.N
        return self.table.phi_at(x)[: N + 1], self.table.psi_at(x)[: N + 1]

    def weights(self, x) -> _Weights:
        x = self.check_x(x)
        w = self._cache.get(x)
        if w is not None:
            return w
        N = self.N
        phi, psi = self.powers_at(x)
        a, b = self.kernel.a, self.kernel.b
        n = np.arange(N + 1)
        binom = comb(n[:, None], n[None, :])  # C(n, k), zero for k > n
        diff = n[:, None] - n[None, :]
        valid = diff >= 0
        Pphi = np.where(valid, phi[np.clip(diff, 0, N)], 0.0)
        Ppsi = np.where(valid, psi[np.clip(diff, 0, N)], 0.0)
        even = n % 2 == 0
        b1 = b.copy()
        b1[0] = 0.0
        a1 = a.copy()
        a1[0] = 0.0
        wc = 2.0 * (a @ (binom * Pphi)) * even
        ws = 2.0 * (b1 @ (binom * Pphi)) * ~even
        wcd = 2.0 * (a1 @ (binom * Ppsi)) * ~even
        wsd = 2.0 * (b @ (binom * Ppsi)) * even
        sol = self.solution
        if x == self.interval[1]:
            dlog = sol.fp_values[0] / sol.f_values[0]
        elif x == self.interval[0]:
            dlog = sol.fp_values[-1] / sol.f_values[-1]
        else:
            dlog = sol.f_prime(x) / sol.f(x)
        w = _Weights(wc, ws, wcd, wsd, complex(dlog), phi, psi)
        self._cache[x] = w
        return w


def solutions(basis: SolutionBasis, omega, x, moments: TrigMoments | None = None):
    """``(c_N, s_N, dc_N, ds_N)`` at ``(omega, x)`` from one moment evaluation."""
    w = basis.weights(x)
    x = basis.check_x(x)
    omega = complex(omega)
    if moments is None:
        moments = trig_moments(omega, x, basis.N)
    z = omega * x
    cz = cmath.cos(z)
    c = cz + np.dot(w.wc, moments.cos_moments)
    s = moments.sinc + np.dot(w.ws, moments.sin_over_omega)
    dc = -omega * cmath.sin(z) + omega * np.dot(w.wcd, moments.sin_moments) + w.dlog * c
    ds = cz - np.dot(w.wsd, moments.cos_moments) + w.dlog * s
    return complex(c), complex(s), complex(dc), complex(ds)


def c_N(basis: SolutionBasis, omega, x) -> complex:
    """Approximation of the solution with ``c(0) = 1``, ``c'(0) = h``."""
    return solutions(basis, omega, x)[0]


def s_N(basis: SolutionBasis, omega, x) -> complex:
    """Approximation of the solution with ``s(0) = 0``, ``s'(0) = 1``."""
    return solutions(basis, omega, x)[1]


def dc_N(basis: SolutionBasis, omega, x) -> complex:
    """Darboux-kernel approximation of ``c'(omega, x)``."""
    return solutions(basis, omega, x)[2]


def ds_N(basis: SolutionBasis, omega, x) -> complex:
    """Darboux-kernel approximation of ``s'(omega, x)``."""
    return solutions(basis, omega, x)[3]


KERNELS = ("Kf", "K1f", "C", "S")


def kernel_eval(basis: SolutionBasis, x, t, which: str = "Kf") -> complex:
    """Truncated kernel ``K_{f,N}``, ``K_{1/f,N}``, ``C_N`` or ``S_N`` at ``(x, t)``.

    The generalized wave polynomials are assembled directly from powers of
    ``t``; this is a diagnostic path, solutions never integrate it.
    """
    if which not in KERNELS:
        raise ValueError(f"unknown kernel {which!r}; expected one of {KERNELS}")
    x = float(x)
    t = float(t)
    lo, hi = basis.interval
    tol = 1e-12 * (hi - lo)
    if x < -tol or x > hi + tol or abs(t) > abs(x) + tol:
        raise ValueError(f"({x}, {t}) outside the triangle |t| <= x <= {hi}")
    x = basis.check_x(x)
    N = basis.N
    a, b = basis.kernel.a, basis.kernel.b
    phi, psi = basis.powers_at(x)
    tk = t ** np.arange(N + 1, dtype=float)

    def wave(powers, m, parity):
        k = np.arange(parity, m + 1, 2)
        return np.sum(comb(m, k) * powers[m - k] * tk[k])

    if which in ("Kf", "C", "S"):
        even_part = a[0] * phi[0] + sum(a[n] * wave(phi, n, 0) for n in range(1, N + 1))
        odd_part = sum(b[n] * wave(phi, n, 1) for n in range(1, N + 1))
        if which == "Kf":
            return complex(even_part + odd_part)
        return complex(2.0 * (even_part if which == "C" else odd_part))
    total = b[0] * psi[0]
    for n in range(1, N + 1):
        total += a[n] * wave(psi, n, 1) + b[n] * wave(psi, n, 0)
    return complex(-total)

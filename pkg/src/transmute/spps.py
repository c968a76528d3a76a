"""Formal powers, particular solutions and spectral parameter power series.

Everything here is anchored at ``x0 = 0`` (the left end of the interval) and
computed on the Chebyshev node set of the potential's expansion.  Two sign
conventions meet in this module: the power series solve ``y'' - q y = lam y``
(``spps_solution`` takes ``lam`` in that form), while ``spps_char_roots``
returns eigenvalues of ``-y'' + q y = lam y``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from itertools import count

import numpy as np
from scipy.special import comb

from .chebfun import (
    ChebyshevExpansion,
    _coeffs_to_values,
    _values_to_coeffs,
    cheb_nodes,
    derivative,
    evaluate_many,
    integrate_samples,
    to_expansion,
)
from .errors import ConstructionError, NonVanishingError

log = logging.getLogger(__name__)

__all__ = [
    "ParticularSolution",
    "FormalPowerTable",
    "SanityReport",
    "particular_solution",
    "recursive_integrals",
    "formal_powers",
    "spps_solution",
    "spps_char_roots",
    "sanity_ratio",
]

EPS = np.finfo(float).eps
PICARD_MAX_ITER = 200
# |f| below this on the check grid counts as vanishing (f(0) = 1)
NONVANISH_TOL = 1e-3
# extra imaginary weights kappa * i * logspace(-2, 1) tried after the sweep
GAMMA_GRID = 31


def _gamma_sweep(scale=1.0):
    """i, 1, -i, 2i, 2, -2i, 3i, ... times ``scale``: the fixed trial order."""
    for k in count(1):
        yield 1j * k * scale
        yield complex(k) * scale
        yield -1j * k * scale


@dataclass(frozen=True, eq=False)
class ParticularSolution:
    """Non-vanishing solution of ``f'' = q f`` with ``f(0) = 1``.

    Attributes:
        f, f_prime: expansions on the potential's node set.
        h: ``f'(0)``.
        q: the potential used to build ``f``.
        min_abs: smallest ``|f|`` seen on the non-vanishing check grid.
        residual: max node residual of ``f'' - q f``.
        gamma: the ``f2`` weight that was selected (``None`` when ``f = f1``
            or closed-form samples were supplied).
        f_values, fp_values: the node samples behind ``f`` and ``f_prime``.
    """

    f: ChebyshevExpansion
    f_prime: ChebyshevExpansion
    h: complex
    q: ChebyshevExpansion
    min_abs: float
    residual: float
    gamma: complex | None = None
    f_values: np.ndarray | None = field(default=None, repr=False)
    fp_values: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        # keep the exact samples; a DCT round trip would blur f(0) = 1
        if self.f_values is None:
            object.__setattr__(self, "f_values", self.f.values())
        if self.fp_values is None:
            object.__setattr__(self, "fp_values", self.f_prime.values())

    @property
    def interval(self):
        return self.f.interval

    @property
    def M(self) -> int:
        return self.f.degree

    @property
    def nodes(self) -> np.ndarray:
        return cheb_nodes(self.M, self.interval)


@dataclass(frozen=True, eq=False)
class FormalPowerTable:
    """Recursive integrals, formal powers and trace functions up to ``order``.

    The ``*_values`` arrays hold node samples, shape ``(order + 1, M + 1)``;
    the list attributes give the same functions as expansions.  ``traces_s``
    is indexed from 0 for convenience, with ``traces_s[0]`` identically zero.
    """

    order: int
    solution: ParticularSolution
    X_values: np.ndarray
    Xt_values: np.ndarray
    phi_values: np.ndarray
    psi_values: np.ndarray
    c_values: np.ndarray
    s_values: np.ndarray
    _coeff_cache: dict = field(default_factory=dict, repr=False)

    @property
    def interval(self):
        return self.solution.interval

    @property
    def nodes(self) -> np.ndarray:
        return self.solution.nodes

    def _expansions(self, name):
        return [to_expansion(v, self.interval) for v in getattr(self, name)]

    @property
    def phi(self) -> list[ChebyshevExpansion]:
        return self._expansions("phi_values")

    @property
    def psi(self) -> list[ChebyshevExpansion]:
        return self._expansions("psi_values")

    @property
    def X(self) -> list[ChebyshevExpansion]:
        return self._expansions("X_values")

    @property
    def Xt(self) -> list[ChebyshevExpansion]:
        return self._expansions("Xt_values")

    @property
    def traces_c(self) -> list[ChebyshevExpansion]:
        return self._expansions("c_values")

    @property
    def traces_s(self) -> list[ChebyshevExpansion]:
        return self._expansions("s_values")

    def _coeffs(self, name):
        if name not in self._coeff_cache:
            self._coeff_cache[name] = _values_to_coeffs(getattr(self, name).T).T
        return self._coeff_cache[name]

    def _at(self, name, x):
        lo, hi = self.interval
        if np.ndim(x) == 0 and float(x) in (lo, hi):
            # endpoints are nodes; the stored samples beat a coefficient sum
            return getattr(self, name)[:, 0 if float(x) == hi else -1].copy()
        return evaluate_many(self._coeffs(name), self.interval, x)

    def phi_at(self, x):
        """``phi_0..phi_order`` at ``x`` by Chebyshev interpolation."""
        return self._at("phi_values", x)

    def psi_at(self, x):
        """``psi_0..psi_order`` at ``x`` by Chebyshev interpolation."""
        return self._at("psi_values", x)


@dataclass(frozen=True)
class SanityReport:
    """``|phi_k(x) / x^k|`` for ``k = 0..order`` and whether it drifted."""

    x: float
    ratios: np.ndarray
    flagged: bool


def _double_integral(values, interval):
    return integrate_samples(integrate_samples(values, interval), interval)


def _solve_fundamental(qv, xv, interval):
    """``f1`` (1, 0) and ``f2`` (0, 1) at the nodes, plus their derivatives.

    Picard iteration on ``f = init + int int q f``; if it has not settled in
    ``PICARD_MAX_ITER`` sweeps the same discrete fixed point is solved directly.
    """
    init = np.stack([np.ones_like(xv, dtype=complex), xv.astype(complex)], axis=1)
    F = init.copy()
    converged = False
    for it in range(PICARD_MAX_ITER):
        F_new = init + _double_integral(qv[:, None] * F, interval)
        delta = np.abs(F_new - F).max(axis=0)
        F = F_new
        if np.all(delta <= 4 * EPS * np.abs(F).max(axis=0)):
            converged = True
            break
    if not converged:
        log.info("Picard iteration did not settle in %d sweeps; solving directly", PICARD_MAX_ITER)
        n = xv.size
        J2 = _double_integral(np.eye(n, dtype=complex), interval)
        F = np.linalg.solve(np.eye(n) - J2 * qv[None, :], init)
    Fp = np.array([[0.0, 1.0]]) + integrate_samples(qv[:, None] * F, interval)
    return F, Fp


def _min_abs_fine(values, interval, refine=4):
    """``min |f|`` over the nodes and a ``refine`` times denser Chebyshev grid."""
    M = values.size - 1
    coeffs = np.zeros(refine * M + 1, dtype=complex)
    coeffs[: M + 1] = _values_to_coeffs(values)
    fine = _coeffs_to_values(coeffs)
    return float(min(np.abs(values).min(), np.abs(fine).min()))


def _finish(qexp, fv, fpv, gamma, residual_tol, fine=True):
    interval = qexp.interval
    f0 = fv[-1]
    fv, fpv = fv / f0, fpv / f0
    f = to_expansion(fv, interval)
    fp = to_expansion(fpv, interval)
    fpp = derivative(fp)(cheb_nodes(fv.size - 1, interval))
    qv = qexp.values()
    scale = max(1.0, np.abs(fv).max())
    residual = float(np.abs(fpp - qv * fv).max())
    if residual > residual_tol * (1.0 + np.abs(qv).max()) * scale:
        warnings.warn(
            f"particular solution residual {residual:.3e} exceeds tolerance", RuntimeWarning, stacklevel=3
        )
    return ParticularSolution(
        f=f,
        f_prime=fp,
        h=complex(fpv[-1]),
        q=qexp,
        min_abs=_min_abs_fine(fv, interval) if fine else float(np.abs(fv).min()),
        residual=residual,
        gamma=gamma,
        f_values=fv,
        fp_values=fpv,
    )


def particular_solution(
    q: ChebyshevExpansion,
    strategy: str = "auto",
    samples=None,
    derivative_samples=None,
    residual_tol: float = 1e-8,
    max_gamma: int = 12,
) -> ParticularSolution:
    """Build a non-vanishing solution of ``f'' = q f`` normalised to ``f(0) = 1``.

    Args:
        q: potential sampled on the working node set.
        strategy: ``"auto"`` runs Picard iteration for ``f1``/``f2``.  A
            non-vanishing ``f1`` (sign-definite when ``q`` is real) is used
            as is.  Otherwise ``f1 + gamma f2`` is tried for ``gamma`` in
            ``kappa * (i, 1, -i, 2i, 2, ...)`` and on ``i kappa`` times a
            log grid, ``kappa = sqrt(max(1, max|q|))``, and the admissible
            candidate with the largest ``min|f| / max|f|`` wins; for
            ``q = -U`` that is ``exp(i sqrt(U) x)``.
            ``"closed-form-samples"`` takes ``samples`` (and optionally
            ``derivative_samples``) at the nodes instead.
        samples: values of a known solution at the nodes.
        derivative_samples: values of its derivative; differentiated
            spectrally when omitted.
        residual_tol: relative tolerance for the ``f'' - q f`` check (warning).
        max_gamma: how many sweep candidates to try.

    Raises:
        ConstructionError: no non-vanishing combination was found.
    """
    interval = q.interval
    M = q.degree
    xv = cheb_nodes(M, interval)
    qv = q.values()

    if strategy == "closed-form-samples":
        if samples is None:
            raise ValueError("closed-form strategy needs samples")
        fv = np.asarray(samples, dtype=complex)
        if fv.size != M + 1:
            raise ValueError(f"expected {M + 1} samples, got {fv.size}")
        if derivative_samples is None:
            fpv = derivative(to_expansion(fv, interval))(xv)
        else:
            fpv = np.asarray(derivative_samples, dtype=complex)
        # exact samples: the node values are the invariant; an interpolant
        # of a function with a huge range can dip below zero between nodes
        ps = _finish(q, fv, fpv, None, residual_tol, fine=False)
        if ps.min_abs <= 0.0:
            raise NonVanishingError("supplied particular solution vanishes", ps.min_abs)
        return ps
    if strategy != "auto":
        raise ValueError(f"unknown strategy {strategy!r}")

    F, Fp = _solve_fundamental(qv, xv, interval)
    f1 = F[:, 0]
    m1 = _min_abs_fine(f1, interval)
    if np.all(qv.imag == 0) and np.any(np.sign(f1.real[:-1]) != np.sign(f1.real[1:])):
        m1 = 0.0  # a real f1 must not change sign
    if m1 > NONVANISH_TOL:
        return _finish(q, f1, Fp[:, 0], None, residual_tol)

    kappa = math.sqrt(max(1.0, float(np.abs(qv).max())))
    sweep = _gamma_sweep(kappa)
    candidates = [next(sweep) for _ in range(max_gamma)]
    candidates += list(1j * kappa * np.logspace(-2, 1, GAMMA_GRID))
    best_gamma, best_score, best_min = None, -1.0, m1
    for gamma in candidates:
        fv = f1 + gamma * F[:, 1]
        m = _min_abs_fine(fv, interval)
        best_min = max(best_min, m)
        if m <= NONVANISH_TOL:
            continue
        # complex zeros of f close to the axis make 1/f^2 hard to resolve,
        # so prefer the candidate whose modulus varies least
        score = m / np.abs(fv).max()
        if score > best_score:
            best_gamma, best_score = gamma, score
    if best_gamma is None:
        raise ConstructionError(f"no non-vanishing particular solution found (min |f| = {best_min:.3e})", best_min)
    fv = f1 + best_gamma * F[:, 1]
    fpv = Fp[:, 0] + best_gamma * Fp[:, 1]
    return _finish(q, fv, fpv, complex(best_gamma), residual_tol)


def recursive_integrals(ps: ParticularSolution, N: int):
    """Node samples of ``X^(n)`` and ``X~^(n)`` for ``n = 0..N`` (anchored at 0).

    Returns:
        ``(X, Xt)``, arrays of shape ``(N + 1, M + 1)``.
    """
    if N < 0:
        raise ValueError("order must be non-negative")
    fv = ps.f_values
    if np.abs(fv).min() == 0.0:
        raise NonVanishingError("particular solution vanishes at a node", 0.0)
    interval = ps.interval
    f2 = fv * fv
    inv_f2 = 1.0 / f2
    X = np.empty((N + 1, fv.size), dtype=complex)
    Xt = np.empty_like(X)
    X[0] = Xt[0] = 1.0
    for n in range(1, N + 1):
        w, wt = (inv_f2, f2) if n % 2 else (f2, inv_f2)
        with np.errstate(over="ignore", invalid="ignore"):
            X[n] = n * integrate_samples(X[n - 1] * w, interval)
            Xt[n] = n * integrate_samples(Xt[n - 1] * wt, interval)
        if not (np.all(np.isfinite(X[n])) and np.all(np.isfinite(Xt[n]))):
            raise ConstructionError(
                f"recursive integral of order {n} overflowed; the particular solution's "
                "range is too wide for working precision",
                float(np.abs(fv).min()),
            )
    return X, Xt


def formal_powers(ps: ParticularSolution, N: int) -> FormalPowerTable:
    """Formal powers ``phi_k``, ``psi_k`` and traces ``c_m``, ``s_m`` up to ``N``."""
    X, Xt = recursive_integrals(ps, N)
    fv = ps.f_values
    odd = (np.arange(N + 1) % 2 == 1)[:, None]
    phi = np.where(odd, X, Xt) * fv
    psi = np.where(odd, Xt, X) / fv
    phi[0] = fv
    psi[0] = 1.0 / fv

    xv = ps.nodes
    c = np.zeros_like(phi)
    s = np.zeros_like(phi)
    c[0] = fv
    xpow = xv[None, :] ** np.arange(N + 1)[:, None]
    for m in range(1, N + 1):
        k = np.arange(m + 1)
        terms = comb(m, k)[:, None] * xpow[: m + 1] * phi[m - k]
        c[m] = terms[0::2].sum(axis=0)
        s[m] = terms[1::2].sum(axis=0)
    return FormalPowerTable(
        order=N,
        solution=ps,
        X_values=X,
        Xt_values=Xt,
        phi_values=phi,
        psi_values=psi,
        c_values=c,
        s_values=s,
    )


def spps_solution(table: FormalPowerTable, lam: complex, K: int, samples: bool = False):
    """Truncated power series solutions of ``y'' - q y = lam y``.

    ``y1(0) = 1, y1'(0) = h, y2(0) = 0, y2'(0) = 1``.

    Args:
        samples: return the node samples instead of expansions.

    Returns:
        ``(y1, y2, y1', y2')`` as expansions (or node arrays).
    """
    if K < 0 or 2 * K + 1 > table.order:
        raise ValueError(f"truncation K={K} needs table order >= {2 * K + 1}, have {table.order}")
    interval = table.interval
    phi, psi = table.phi_values, table.psi_values
    ps = table.solution
    fv = ps.f_values
    dlog = ps.fp_values / fv
    y1 = np.zeros_like(fv)
    y2 = np.zeros_like(fv)
    d1 = np.zeros_like(fv)
    d2 = np.zeros_like(fv)
    for k in range(K + 1):
        w1 = lam**k / math.factorial(2 * k)
        w2 = lam**k / math.factorial(2 * k + 1)
        y1 += w1 * phi[2 * k]
        y2 += w2 * phi[2 * k + 1]
        d1 += w1 * (dlog * phi[2 * k] + (2 * k * psi[2 * k - 1] if k else 0.0))
        d2 += w2 * (dlog * phi[2 * k + 1] + (2 * k + 1) * psi[2 * k])
    if samples:
        return y1, y2, d1, d2
    return tuple(to_expansion(v, interval) for v in (y1, y2, d1, d2))


def _bc_constants(bc):
    if hasattr(bc, "constant_coefficients"):
        return bc.constant_coefficients()
    alpha, beta = bc
    return complex(alpha), complex(beta)


def spps_char_roots(table: FormalPowerTable, left, right, K: int, radius: float) -> np.ndarray:
    """Eigenvalues of ``-y'' + q y = lam y`` from the truncated power series.

    The characteristic expression ``alpha_b y(b) + beta_b y'(b)`` for the
    solution with ``y(0) = beta_0``, ``y'(0) = -alpha_0`` becomes a degree-K
    polynomial in ``lam``; its roots (companion matrix eigenvalues) inside
    ``|lam| <= radius`` are returned sorted by modulus.

    Args:
        left, right: boundary conditions with constant coefficients, given as
            ``(alpha, beta)`` pairs or objects exposing
            ``constant_coefficients()``.
    """
    if K < 1:
        raise ValueError("polynomial degree K must be >= 1")
    if 2 * K + 1 > table.order:
        raise ValueError(f"degree K={K} needs table order >= {2 * K + 1}, have {table.order}")
    a0, b0 = _bc_constants(left)
    ab, bb = _bc_constants(right)
    ps = table.solution
    h = ps.h
    # everything at x = b, i.e. node 0
    phi = table.phi_values[:, 0]
    psi = table.psi_values[:, 0]
    dlog = ps.fp_values[0] / ps.f_values[0]
    mix = a0 + b0 * h
    coeffs = np.zeros(K + 1, dtype=complex)
    for k in range(K + 1):
        e = 1.0 / math.factorial(2 * k)
        o = 1.0 / math.factorial(2 * k + 1)
        y1, y2 = e * phi[2 * k], o * phi[2 * k + 1]
        d1 = e * (dlog * phi[2 * k] + (2 * k * psi[2 * k - 1] if k else 0.0))
        d2 = o * (dlog * phi[2 * k + 1] + (2 * k + 1) * psi[2 * k])
        # lam_spps = -lam
        coeffs[k] = (-1) ** k * (ab * (b0 * y1 - mix * y2) + bb * (b0 * d1 - mix * d2))
    # rescale so the roots of interest sit near the unit circle
    scaled = coeffs * float(radius) ** np.arange(K + 1)
    nz = np.flatnonzero(scaled)
    if nz.size == 0:
        return np.array([], dtype=complex)
    scaled = scaled[: nz[-1] + 1]
    roots = np.roots(scaled[::-1]) * radius
    roots = roots[np.abs(roots) <= radius]
    return roots[np.argsort(np.abs(roots), kind="stable")]


def sanity_ratio(table: FormalPowerTable, x: float, band=(1e-3, 1e3)) -> SanityReport:
    """``|phi_k(x) / x^k|``; flags drift of the last quartile outside ``band``.

    The ratios tend to 1 for exact formal powers, so a blow-up or collapse
    among the highest orders means the recursive integrals have lost accuracy.
    """
    lo, hi = table.interval
    if not (lo < x <= hi):
        raise ValueError(f"x must lie in ({lo}, {hi}]")
    phi = table.phi_at(x)
    k = np.arange(table.order + 1)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        ratios = np.abs(phi) / np.abs(x) ** k
    tail = ratios[-max(1, (table.order + 1) // 4) :]
    flagged = bool(np.any(~np.isfinite(tail)) or np.any(tail < band[0]) or np.any(tail > band[1]))
    if flagged:
        warnings.warn(f"formal powers look unreliable at x={x}: phi_k/x^k left {band}", RuntimeWarning, stacklevel=2)
    return SanityReport(x=float(x), ratios=ratios, flagged=flagged)

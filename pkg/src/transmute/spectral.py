"""Characteristic functions and eigenvalue search.

Boundary conditions are written ``alpha y + beta y' = 0`` at each end, with
``alpha`` and ``beta`` allowed to depend on ``omega = sqrt(lam)``.  The
solution satisfying the left condition is

    y = beta0 c(omega, x) - (alpha0 + beta0 h) s(omega, x)

(so ``y(0) = beta0``, ``y'(0) = -alpha0``) and the eigenvalues are the zeros of

    Phi(omega) = alpha_b y(b) + beta_b y'(b) + gamma_b y(0) + delta_b y'(0).

The last two terms are zero unless the right condition couples both ends,
as in ``u(0) + mu u(1) = 0``.
"""

from __future__ import annotations

import cmath
import logging
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .chebfun import ChebyshevExpansion
from .errors import BoundaryConditionError
from .nsbf import SolutionBasis, solutions
from .spps import formal_powers, particular_solution, spps_char_roots
from .traces import fit_kernel, goursat_targets

log = logging.getLogger(__name__)

__all__ = [
    "BoundaryCondition",
    "SpectralProblem",
    "EigenResult",
    "build_problem",
    "char_function",
    "find_eigenvalues",
    "eigenfunction",
    "ivp_solution",
    "quantum_well",
    "well_conditions",
    "spectral_shift",
]

EPS = np.finfo(float).eps
REFINE_RTOL = 1e-13
MAX_ITER = 60
# roots closer than this times u |omega| are reported as a cluster
CLUSTER_FACTOR = 1e3
# accepted roots must bring |Phi| this far below its local scale
ACCEPT_RATIO = 1e-8


def _as_function(v):
    if callable(v):
        return v
    c = complex(v)
    return lambda omega: c


@dataclass(frozen=True, eq=False)
class BoundaryCondition:
    """``alpha(omega) y + beta(omega) y' = 0`` at one end of the interval.

    Attributes:
        alpha, beta: constants or callables of ``omega``.
        gamma, delta: optional coefficients of ``y(0)`` and ``y'(0)`` added
            to a right-end condition (non-separated conditions).
        label: name used in reports.
    """

    alpha: object = 1.0
    beta: object = 0.0
    gamma: object = 0.0
    delta: object = 0.0
    label: str = ""

    @classmethod
    def dirichlet(cls):
        return cls(1.0, 0.0, label="dirichlet")

    @classmethod
    def neumann(cls):
        return cls(0.0, 1.0, label="neumann")

    @property
    def is_constant(self) -> bool:
        return not any(callable(v) for v in (self.alpha, self.beta, self.gamma, self.delta))

    @property
    def is_coupled(self) -> bool:
        return callable(self.gamma) or callable(self.delta) or complex(self.gamma) != 0 or complex(self.delta) != 0

    def at(self, omega):
        """``(alpha, beta, gamma, delta)`` at ``omega``; checks ``|alpha| + |beta| > 0``."""
        vals = tuple(complex(_as_function(v)(omega)) for v in (self.alpha, self.beta, self.gamma, self.delta))
        if abs(vals[0]) + abs(vals[1]) == 0.0:
            raise BoundaryConditionError(f"alpha and beta both vanish at omega={omega}")
        return vals

    def constant_coefficients(self):
        if not self.is_constant or self.is_coupled:
            raise BoundaryConditionError("boundary condition depends on omega or couples both ends")
        return complex(self.alpha), complex(self.beta)


@dataclass(frozen=True, eq=False)
class SpectralProblem:
    """``-y'' + q y = lam y`` on ``interval`` with two boundary conditions.

    ``shift`` records a spectral shift already folded into ``q``; reported
    eigenvalues are always for the unshifted problem.
    """

    q: ChebyshevExpansion
    left: BoundaryCondition
    right: BoundaryCondition
    basis: SolutionBasis
    shift: complex = 0.0
    options: dict = field(default_factory=dict)

    @property
    def interval(self):
        return self.q.interval

    @property
    def b(self) -> float:
        lo, hi = self.interval
        return hi - lo

    @property
    def h(self) -> complex:
        return self.basis.h

    @property
    def eps(self) -> tuple[float, float]:
        return self.basis.kernel.eps1, self.basis.kernel.eps2


@dataclass
class EigenResult:
    """Eigenvalues with per-root diagnostics, sorted by real then imaginary part.

    Attributes:
        eigenvalues: complex ``lam`` values.
        omegas: the ``omega`` each was found at.
        methods: ``"spps"`` or ``"phiN"`` per root.
        residuals: ``|Phi_N|`` at the accepted root (0 for SPPS roots).
        flags: per-root lists of warnings (``"cluster"``, ``"unconverged"``).
        eps1, eps2: kernel fit errors.
        shortfall: how many of the requested roots are missing.
    """

    eigenvalues: np.ndarray
    omegas: np.ndarray
    methods: list
    residuals: np.ndarray
    flags: list
    eps1: float
    eps2: float
    shortfall: int = 0

    def __len__(self):
        return len(self.eigenvalues)


def _empty_result(problem, shortfall=0):
    e1, e2 = problem.eps
    return EigenResult(np.array([], complex), np.array([], complex), [], np.array([]), [], e1, e2, shortfall)


def build_problem(
    q: ChebyshevExpansion,
    left: BoundaryCondition,
    right: BoundaryCondition,
    N: int = 30,
    spps_degree: int | None = None,
    particular=None,
    **kwargs,
) -> SpectralProblem:
    """Particular solution, formal powers, kernel fit and basis for ``q``.

    Args:
        q: potential expanded on the working node set of ``(0, b)``.
        N: kernel order.
        spps_degree: degree of the power-series polynomial used near the
            origin; the formal power table is built to order
            ``max(N, 2 * spps_degree + 1)``.  Defaults to ``N // 2``.
        particular: a ready :class:`ParticularSolution` (closed form, say).
        **kwargs: stored as search options (``spps_radius``, ``seed_offset``).
    """
    if spps_degree is None:
        spps_degree = max(1, N // 2)
    ps = particular if particular is not None else particular_solution(q)
    table = formal_powers(ps, max(N, 2 * spps_degree + 1))
    g1, g2 = goursat_targets(q, ps.h)
    kernel = fit_kernel(table, g1, g2, N)
    opts = dict(kwargs)
    opts["spps_degree"] = spps_degree
    return SpectralProblem(q=q, left=left, right=right, basis=SolutionBasis(kernel), options=opts)


def _phi(problem: SpectralProblem, omega, left_vals=None):
    b_end = problem.interval[1]
    c, s, dc, ds = solutions(problem.basis, omega, b_end)
    a0, b0, _, _ = problem.left.at(omega) if left_vals is None else left_vals
    ab, bb, gb, db = problem.right.at(omega)
    mix = a0 + b0 * problem.h
    y = b0 * c - mix * s
    yp = b0 * dc - mix * ds
    return ab * y + bb * yp + gb * b0 - db * a0


def char_function(problem: SpectralProblem, omega) -> complex:
    """``Phi_N(omega)``; zeros squared (minus the shift) are eigenvalues."""
    return complex(_phi(problem, complex(omega)))


def _lam_from_omega(problem, omega):
    return omega * omega - problem.shift


def _secant(fun, z0, z1, rtol=REFINE_RTOL, max_iter=MAX_ITER):
    f0, f1 = fun(z0), fun(z1)
    for it in range(max_iter):
        if f1 == f0:
            return z1, f1, f1 == 0
        z2 = z1 - f1 * (z1 - z0) / (f1 - f0)
        z0, f0 = z1, f1
        z1, f1 = z2, fun(z2)
        if abs(z1 - z0) <= rtol * max(1.0, abs(z1)):
            return z1, f1, True
    return z1, f1, False


def _spps_roots(problem: SpectralProblem, real: bool):
    if not (problem.left.is_constant and problem.right.is_constant) or problem.right.is_coupled:
        return np.array([], complex)
    b = problem.b
    radius = problem.options.get("spps_radius", 4.0 * (math.pi / b) ** 2)
    K = problem.options.get("spps_degree", 1)
    try:
        roots = spps_char_roots(problem.basis.table, problem.left, problem.right, K, radius)
    except Exception as exc:  # a failed polynomial solve just leaves Phi_N on its own
        log.info("power-series roots unavailable: %s", exc)
        return np.array([], complex)
    if real:
        roots = roots[np.abs(roots.imag) <= 1e-8 * (1.0 + np.abs(roots))].real.astype(complex)
    # the table carries the shifted potential
    return np.asarray(roots - problem.shift, dtype=complex)


def _merge(spps, phi_roots):
    """Small roots from the power series, the rest from ``Phi_N``.

    The two sets are joined at their closest pair; without a convincing
    match the ``Phi_N`` roots are used alone.
    """
    if len(spps) == 0 or len(phi_roots) == 0:
        return [], list(range(len(phi_roots)))
    spps = sorted(spps, key=lambda z: (z.real, z.imag))
    d = np.abs(np.subtract.outer(np.asarray(spps), np.asarray(phi_roots)))
    i, j = np.unravel_index(np.argmin(d), d.shape)
    if d[i, j] > 1e-6 * (1.0 + abs(phi_roots[j])):
        return [], list(range(len(phi_roots)))
    return list(spps[:i]), list(range(j, len(phi_roots)))


def _assemble(problem, items, count):
    """items: (lam, omega, method, residual, flags)."""
    items = sorted(items, key=lambda it: (it[0].real, it[0].imag))
    items = items[:count]
    e1, e2 = problem.eps
    return EigenResult(
        eigenvalues=np.array([it[0] for it in items], complex),
        omegas=np.array([it[1] for it in items], complex),
        methods=[it[2] for it in items],
        residuals=np.array([it[3] for it in items], float),
        flags=[it[4] for it in items],
        eps1=e1,
        eps2=e2,
        shortfall=max(0, count - len(items)),
    )


def _bracket_roots(fun, grid, values):
    """Refine every sign change of ``values`` on ``grid``; returns (root, residual, scale, ok).

    ``scale`` is 0 for converged brackets, which switches off the residual test.
    """
    out = []
    for k in range(len(grid) - 1):
        fa, fb = values[k], values[k + 1]
        if fa == 0.0:
            out.append((grid[k], 0.0, 0.0, True))
            continue
        if np.sign(fa) == np.sign(fb):
            continue
        a, b = grid[k], grid[k + 1]
        try:
            # brentq's floor is 4u; the extra digits keep lam = omega^2 accurate at high index
            r = brentq(fun, a, b, xtol=1e-300, rtol=4 * EPS, maxiter=MAX_ITER)
            ok = True
        except RuntimeError:
            r, ok = 0.5 * (a + b), False
        # a converged bracket certifies the root by the sign change alone;
        # the residual test is kept for brackets brentq could not close
        out.append((r, abs(fun(r)), 0.0 if ok else max(abs(fa), abs(fb)), ok))
    return out


def _real_scan(problem: SpectralProblem, count: int, omega_max=None):
    """Sign changes of the real characteristic function.

    Negative eigenvalues sit on the imaginary ``omega`` axis below
    ``sqrt(-min q)``; the real axis is scanned in quarter steps of the
    asymptotic root spacing and extended until ``count`` roots are in hand.
    """
    b = problem.b
    step = math.pi / (4.0 * b)
    items = []

    def on_real(omega):
        return _phi(problem, omega).real

    def on_imag(beta):
        return _phi(problem, 1j * beta).real

    qmin = float(np.min(problem.q.values().real))
    if qmin < 0:
        betas = np.arange(step, math.sqrt(-qmin) + 2 * step, step)
        vals = np.array([on_imag(bt) for bt in betas])
        for r, res, scale, ok in _bracket_roots(on_imag, betas, vals):
            items.append((_lam_from_omega(problem, 1j * r), 1j * r, res, scale, ok))

    upper = omega_max if omega_max is not None else math.pi * (count + 2) / b + step
    cap = omega_max if omega_max is not None else math.pi * (4 * count + 20) / b
    lo = 0.0
    prev = None
    while True:
        grid = np.arange(lo, upper + 0.5 * step, step)
        vals = np.array([on_real(w) for w in grid])
        for r, res, scale, ok in _bracket_roots(on_real, grid, vals):
            if prev is not None and r == grid[0]:
                continue  # already counted at the end of the previous sweep
            items.append((_lam_from_omega(problem, complex(r)), complex(r), res, scale, ok))
        prev = vals
        if len(items) >= count or upper >= cap:
            break
        lo = grid[-1]
        upper = min(cap, upper + math.pi * max(4, count) / b)
    return items


def _finish_phi_items(problem, raw):
    """Turn refined roots into result tuples with flags."""
    out = []
    omegas = [abs(it[1]) for it in raw]
    for k, (lam, omega, res, scale, ok) in enumerate(raw):
        flags = []
        if not ok:
            flags.append("unconverged")
            warnings.warn(f"root near omega={omega} did not converge", RuntimeWarning, stacklevel=3)
        if scale > 0 and res > ACCEPT_RATIO * scale:
            flags.append("unconverged")
        for j, other in enumerate(omegas):
            if j != k and abs(other - abs(omega)) < CLUSTER_FACTOR * EPS * max(1.0, abs(omega)):
                flags.append("cluster")
                break
        out.append((lam, omega, "phiN", res, flags))
    return out


def _seed(j, spacing, qmean, offset):
    """``omega`` seed for the j-th half-spacing grid point."""
    base = 0.5 * j * spacing
    # a mean potential shifts lam by roughly its value
    seed = cmath.sqrt(base * base + qmean)
    if seed.real < 0:
        seed = -seed
    return seed + 1j * offset * spacing


def _complex_search(problem: SpectralProblem, count: int, seed_offset=None, omega_max=None):
    """Secant iterations from seeds half the asymptotic spacing apart."""
    spacing = math.pi / problem.b
    offset = problem.options.get("seed_offset", 0.5) if seed_offset is None else seed_offset
    qmean = complex(np.mean(problem.q.values()))

    def fun(omega):
        return _phi(problem, omega)

    found = []

    def add_root(z, fz, scale):
        if z.real < -1e-8 * max(1.0, abs(z)):
            return
        lam = _lam_from_omega(problem, z)
        if any(abs(f_[0] - lam) <= 1e-8 * (1.0 + abs(lam)) for f_ in found):
            return
        found.append((lam, z, abs(fz), scale, True))

    n_seeds = 2 * (count + 4)
    limit = 2 * (4 * count + 20)
    if omega_max is not None:
        n_seeds = limit = int(2 * omega_max / spacing) + 2
    j = 0
    while True:
        while j < n_seeds:
            # on-axis and offset seeds: either alone can slide to a neighbour
            for off in (0.0, offset):
                z0 = _seed(j, spacing, qmean, off)
                scale = max(abs(fun(z0)), EPS)
                z, fz, ok = _secant(fun, z0, z0 + 1e-3 * spacing)
                if ok and abs(fz) <= ACCEPT_RATIO * scale:
                    add_root(z, fz, scale)
            j += 1
        if len(found) >= count or n_seeds >= limit:
            break
        n_seeds = min(limit, n_seeds + 2 * max(4, count - len(found)))
    return found


def find_eigenvalues(problem: SpectralProblem, count: int, mode: str = "real-scan", omega_max=None, use_spps=True):
    """The first ``count`` eigenvalues.

    Args:
        problem: a built :class:`SpectralProblem`.
        count: how many eigenvalues to return.
        mode: ``"real-scan"`` for self-adjoint problems (sign changes of the
            real characteristic function on the real and imaginary ``omega``
            axes) or ``"complex"`` (secant iterations from seeds spaced half
            the asymptotic root distance apart).
        omega_max: optional fixed end of the scan; no extension beyond it.
        use_spps: merge in power-series roots near the origin.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if mode == "real-scan":
        raw = _real_scan(problem, count, omega_max)
        spps = _spps_roots(problem, real=True) if use_spps else []
    elif mode == "complex":
        raw = _complex_search(problem, count, omega_max=omega_max)
        spps = _spps_roots(problem, real=False) if use_spps else []
    else:
        raise ValueError(f"unknown mode {mode!r}")
    raw.sort(key=lambda it: (it[0].real, it[0].imag))
    if omega_max is not None:
        raw = [it for it in raw if abs(it[1]) <= omega_max]
    phi_items = _finish_phi_items(problem, raw)
    keep_spps, keep_phi = _merge(list(spps), [it[0] for it in phi_items])
    items = [(lam, cmath.sqrt(lam + problem.shift), "spps", 0.0, []) for lam in keep_spps]
    items += [phi_items[k] for k in keep_phi]
    return _assemble(problem, items, count)


def eigenfunction(problem: SpectralProblem, lam, xs) -> np.ndarray:
    """``beta0 c_N - (alpha0 + beta0 h) s_N`` at the abscissas ``xs``."""
    omega = cmath.sqrt(complex(lam) + problem.shift)
    lo, hi = problem.interval
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    tol = 1e-12 * (hi - lo)
    if np.any(xs < lo - tol) or np.any(xs > hi + tol):
        raise ValueError(f"abscissa outside [{lo}, {hi}]")
    a0, b0, _, _ = problem.left.at(omega)
    mix = a0 + b0 * problem.h
    out = np.empty(xs.size, dtype=complex)
    for k, x in enumerate(xs):
        c, s, _, _ = solutions(problem.basis, omega, x)
        out[k] = b0 * c - mix * s
    return out


def ivp_solution(problem: SpectralProblem, lam, y0, y1, xs):
    """Solution with ``y(0) = y0``, ``y'(0) = y1`` and its derivative at ``xs``.

    ``y = y0 c_N + (y1 - y0 h) s_N``; the derivative uses the Darboux
    approximations.
    """
    omega = cmath.sqrt(complex(lam) + problem.shift)
    w = complex(y1) - complex(y0) * problem.h
    ys = []
    dys = []
    for x in np.atleast_1d(np.asarray(xs, dtype=float)):
        c, s, dc, ds = solutions(problem.basis, omega, x)
        ys.append(y0 * c + w * s)
        dys.append(y0 * dc + w * ds)
    return np.array(ys, complex), np.array(dys, complex)


def well_conditions():
    """Left and right conditions of a well with zero potential outside.

    ``u'(0) = beta u(0)`` and ``u'(l) = -beta u(l)`` with ``omega = i beta``.
    """
    left = BoundaryCondition(lambda w: 1j * w, 1.0, label="decay-left")
    right = BoundaryCondition(lambda w: -1j * w, 1.0, label="decay-right")
    return left, right


def quantum_well(problem: SpectralProblem, n_scan: int = 400) -> EigenResult:
    """Bound states ``lam = -beta^2`` of a well with zero exterior potential.

    The problem's own boundary conditions are replaced by the decaying ones;
    ``beta`` is scanned over ``(0, sqrt(max(-q)))`` and sign changes of the
    (real) characteristic function are refined.
    """
    left, right = well_conditions()
    well = replace(problem, left=left, right=right)
    qmax_neg = float(np.max(-well.q.values().real))
    if qmax_neg <= 0:
        return _empty_result(well)
    beta_max = math.sqrt(qmax_neg)
    betas = np.linspace(0.0, beta_max, n_scan + 1)[1:]
    # keep the top of the range open
    betas[-1] = beta_max * (1.0 - 1e-12)

    def fun(beta):
        return _phi(well, 1j * beta).real

    vals = np.array([fun(bt) for bt in betas])
    raw = []
    for r, res, scale, ok in _bracket_roots(fun, betas, vals):
        raw.append((-(r * r) - well.shift, 1j * r, res, scale, ok))
    items = _finish_phi_items(well, raw)
    return _assemble(well, items, len(items))


def spectral_shift(problem: SpectralProblem, lam_star) -> SpectralProblem:
    """The same problem with ``q + lam_star`` in place of ``q``.

    Eigenvalues found for the returned problem are reported unshifted.  Only
    constant boundary conditions are supported, since the conditions are
    functions of the unshifted ``omega``.
    """
    lam_star = complex(lam_star)
    if lam_star == 0:
        return problem
    if not (problem.left.is_constant and problem.right.is_constant):
        raise BoundaryConditionError("spectral shift needs omega-independent boundary conditions")
    q_new = ChebyshevExpansion(problem.q.interval, problem.q.coeffs + np.eye(1, problem.q.coeffs.size)[0] * lam_star)
    kernel = problem.basis.kernel
    opts = {k: v for k, v in problem.options.items() if k != "spps_degree"}
    new = build_problem(
        q_new, problem.left, problem.right, N=kernel.N, spps_degree=problem.options.get("spps_degree"), **opts
    )
    return replace(new, shift=problem.shift + lam_star)

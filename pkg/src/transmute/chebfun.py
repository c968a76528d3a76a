"""Chebyshev expansions on a finite interval.

Every function of ``x`` in the package is carried as a truncated series in
first-kind Chebyshev polynomials mapped affinely onto ``[lo, hi]``.  Samples
live on the Chebyshev extreme points, listed in *descending* order::

    x_k = lo + (hi - lo) / 2 * (1 + cos(k*pi/M)),   k = 0..M

so ``x_0 = hi`` and ``x_M = lo``.  The ordering is used consistently by every
routine that accepts or returns node samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

__all__ = [
    "ChebyshevExpansion",
    "cheb_nodes",
    "to_expansion",
    "evaluate",
    "antiderivative",
    "derivative",
    "integrate_samples",
    "evaluate_many",
]

# relative slack allowed when evaluating just outside the interval
CLAMP_TOL = 1e-12


def _check_interval(interval) -> tuple[float, float]:
    lo, hi = (float(v) for v in interval)
    if not np.isfinite(lo) or not np.isfinite(hi) or not hi > lo:
        raise ValueError(f"degenerate interval {interval!r}")
    return lo, hi


@dataclass(frozen=True, eq=False)
class ChebyshevExpansion:
    """A function on ``interval`` given by its Chebyshev coefficients.

    Attributes:
        interval: ``(lo, hi)`` endpoints.
        coeffs: complex coefficients ``c_0..c_M``; read-only array.
    """

    interval: tuple[float, float]
    coeffs: np.ndarray

    def __post_init__(self):
        interval = _check_interval(self.interval)
        coeffs = np.array(self.coeffs, dtype=complex).ravel()
        if coeffs.size == 0:
            raise ValueError("coefficient list must be non-empty")
        coeffs.setflags(write=False)
        object.__setattr__(self, "interval", interval)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, x):
        return evaluate(self, x)

    def values(self) -> np.ndarray:
        """Samples at the ``degree + 1`` nodes (descending order)."""
        return _coeffs_to_values(self.coeffs)

    def endpoint_values(self) -> tuple[complex, complex]:
        """Values at ``(lo, hi)`` from the alternating and plain sums."""
        signs = (-1.0) ** np.arange(self.coeffs.size)
        return complex(np.dot(signs, self.coeffs)), complex(self.coeffs.sum())

    def __repr__(self):
        return f"ChebyshevExpansion(interval={self.interval}, degree={self.degree})"


def cheb_nodes(M: int, interval=(0.0, 1.0)) -> np.ndarray:
    """Chebyshev extreme points ``lo + (hi-lo)/2 (1 + cos(k pi / M))``.

    Returns M+1 abscissas in descending order.
    """
    if int(M) != M or M < 1:
        raise ValueError(f"node count M must be a positive integer, got {M!r}")
    lo, hi = _check_interval(interval)
    t = np.cos(np.pi * np.arange(M + 1) / M)
    x = lo + 0.5 * (hi - lo) * (1.0 + t)
    # cos(pi/2) is not exactly zero; pin the symmetric midpoint and the ends
    x[0], x[-1] = hi, lo
    if M % 2 == 0:
        x[M // 2] = 0.5 * (lo + hi)
    return x


def _values_to_coeffs(values: np.ndarray) -> np.ndarray:
    M = values.shape[0] - 1
    if M == 0:
        return values.astype(complex)
    c = scipy.fft.dct(values, type=1, axis=0) / M
    c[0] *= 0.5
    c[-1] *= 0.5
    return c


def _coeffs_to_values(coeffs: np.ndarray) -> np.ndarray:
    M = coeffs.shape[0] - 1
    if M == 0:
        return coeffs.astype(complex)
    c = np.array(coeffs, dtype=complex)
    c[0] *= 2.0
    c[-1] *= 2.0
    return 0.5 * scipy.fft.dct(c, type=1, axis=0)


def to_expansion(samples, interval=(0.0, 1.0), M: int | None = None) -> ChebyshevExpansion:
    """Chebyshev interpolant through samples taken at ``cheb_nodes``.

    Args:
        samples: ``M + 1`` values, descending node order.
        interval: interval the nodes were mapped to.
        M: optional expected node count; a mismatch raises ``ValueError``.
    """
    values = np.asarray(samples, dtype=complex).ravel()
    if values.size < 2:
        raise ValueError("need at least two samples")
    if M is not None and values.size != M + 1:
        raise ValueError(f"expected {M + 1} samples, got {values.size}")
    return ChebyshevExpansion(interval, _values_to_coeffs(values))


def _to_reference(exp: ChebyshevExpansion, x):
    lo, hi = exp.interval
    x = np.asarray(x, dtype=float)
    slack = CLAMP_TOL * (hi - lo)
    if np.any(x < lo - slack) or np.any(x > hi + slack):
        raise ValueError(f"abscissa outside [{lo}, {hi}]")
    x = np.clip(x, lo, hi)
    return (2.0 * x - lo - hi) / (hi - lo)


def _clenshaw(coeffs: np.ndarray, t):
    b1 = np.zeros_like(t, dtype=complex)
    b2 = np.zeros_like(t, dtype=complex)
    for c in coeffs[:0:-1]:
        b1, b2 = c + 2.0 * t * b1 - b2, b1
    return coeffs[0] + t * b1 - b2


def evaluate(exp: ChebyshevExpansion, x):
    """Value of the expansion at ``x`` (scalar or array) by Clenshaw's recurrence."""
    t = _to_reference(exp, x)
    out = _clenshaw(exp.coeffs, t)
    return complex(out) if np.ndim(out) == 0 else out


def _integrate_coeffs(c: np.ndarray, scale: float) -> np.ndarray:
    """Coefficients of the antiderivative vanishing at t = -1 (axis 0)."""
    M = c.shape[0] - 1
    ext = np.zeros((M + 3,) + c.shape[1:], dtype=complex)
    ext[: M + 1] = c
    out = np.zeros((M + 2,) + c.shape[1:], dtype=complex)
    k = np.arange(1, M + 2).reshape((-1,) + (1,) * (c.ndim - 1))
    out[1:] = (ext[0 : M + 1] - ext[2 : M + 3]) / (2.0 * k)
    # T_0 integrates to T_1, not T_1/2
    out[1] += 0.5 * ext[0]
    signs = (-1.0) ** np.arange(1, M + 2)
    out[0] = -np.tensordot(signs, out[1:], axes=(0, 0))
    return out * scale


def antiderivative(exp: ChebyshevExpansion) -> ChebyshevExpansion:
    """Expansion of ``x -> integral from lo to x``; degree grows by one."""
    lo, hi = exp.interval
    return ChebyshevExpansion(exp.interval, _integrate_coeffs(exp.coeffs, 0.5 * (hi - lo)))


def derivative(exp: ChebyshevExpansion) -> ChebyshevExpansion:
    """Termwise derivative of the expansion."""
    c = exp.coeffs
    n = c.size - 1
    lo, hi = exp.interval
    if n == 0:
        return ChebyshevExpansion(exp.interval, [0.0])
    d = np.zeros(n + 1, dtype=complex)
    for k in range(n - 1, -1, -1):
        d[k] = d[k + 2] + 2.0 * (k + 1) * c[k + 1] if k + 2 <= n else 2.0 * (k + 1) * c[k + 1]
    d[0] *= 0.5
    return ChebyshevExpansion(exp.interval, d[:n] * (2.0 / (hi - lo)))


def integrate_samples(values, interval) -> np.ndarray:
    """Indefinite integral from the left end, node samples in and out.

    The Clenshaw-Curtis step of every recursive integral: interpolate,
    integrate termwise, and resample on the same nodes.  Accepts a 2-D array
    and integrates each column.
    """
    lo, hi = _check_interval(interval)
    values = np.asarray(values, dtype=complex)
    M = values.shape[0] - 1
    C = _integrate_coeffs(_values_to_coeffs(values), 0.5 * (hi - lo))
    # T_{M+1} at the nodes equals (-1)^k T_{M-1}, so fold it back
    top = C[M + 1]
    C = C[: M + 1].copy()
    C[M - 1] += top
    out = _coeffs_to_values(C)
    out[-1] = 0.0
    return out


def evaluate_many(coeffs: np.ndarray, interval, x):
    """Evaluate several expansions sharing ``interval`` at once.

    Args:
        coeffs: array of shape ``(n_funcs, M + 1)``.
        x: scalar or 1-D array of abscissas.

    Returns:
        Array of shape ``(n_funcs,)`` for scalar ``x``, else ``(n_funcs, len(x))``.
    """
    probe = ChebyshevExpansion(interval, [0.0])
    t = _to_reference(probe, x)
    coeffs = np.asarray(coeffs, dtype=complex)
    tt = np.asarray(t)[None, ...] if np.ndim(t) else t
    b1 = np.zeros((coeffs.shape[0],) + np.shape(t), dtype=complex)
    b2 = np.zeros_like(b1)
    for j in range(coeffs.shape[1] - 1, 0, -1):
        c = coeffs[:, j].reshape((-1,) + (1,) * np.ndim(t))
        b1, b2 = c + 2.0 * tt * b1 - b2, b1
    c0 = coeffs[:, 0].reshape((-1,) + (1,) * np.ndim(t))
    return c0 + tt * b1 - b2

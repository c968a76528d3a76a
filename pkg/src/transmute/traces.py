"""Least-squares fit of the Goursat data by trace functions.

The kernel of the transmutation operator is approximated by generalized wave
polynomials whose coefficients are fixed by matching its values on the
characteristics.  On the diagonal these reduce to

    g1(x) = h/2 + (1/4) int_0^x q  ~  sum_n a_n c_n(x)
    g2(x) =       (1/4) int_0^x q  ~  sum_n b_n s_n(x)

and both fits are done on ``[0, b]`` only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .chebfun import ChebyshevExpansion, antiderivative, cheb_nodes, evaluate_many
from .errors import ConditioningError
from .spps import FormalPowerTable, formal_powers, particular_solution

__all__ = ["KernelApproximation", "goursat_targets", "fit_kernel", "fit_from_potential", "default_grid", "residual_on"]

# relative singular value cut-off of the equilibrated trace matrix
RCOND = 1e-15
# the traces behave like graded monomials, so some numerical rank loss is
# normal and harmless; only a collapse below this fraction of N is an error
MIN_RANK_FRACTION = 0.5


@dataclass(frozen=True, eq=False)
class KernelApproximation:
    """Coefficients ``a_0..a_N``, ``b_0..b_N`` of the truncated kernel series.

    Attributes:
        N: truncation order.
        a, b: complex coefficient arrays of length ``N + 1``; ``a[0] = b[0] = h/2``.
        eps1, eps2: max residual of the two fits over the fit grid.
        h: ``f'(0)`` of the particular solution.
        table: formal power table the traces came from.
        rank: effective ranks of the two least-squares systems.
    """

    N: int
    a: np.ndarray
    b: np.ndarray
    eps1: float
    eps2: float
    h: complex
    table: FormalPowerTable
    rank: tuple[int, int] = (0, 0)


def goursat_targets(q: ChebyshevExpansion, h: complex):
    """``g1 = h/2 + Q/4`` and ``g2 = Q/4`` with ``Q`` the primitive of ``q`` from 0."""
    quarter = antiderivative(q).coeffs / 4.0
    g2 = ChebyshevExpansion(q.interval, quarter)
    c1 = quarter.copy()
    c1[0] += h / 2.0
    g1 = ChebyshevExpansion(q.interval, c1)
    return g1, g2


def _lstsq(A, rhs, rcond):
    """Column-equilibrated minimum-norm least squares; returns (x, rank)."""
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0.0] = 1.0
    sol, _, rank, _ = scipy.linalg.lstsq(A / norms, rhs, cond=rcond, lapack_driver="gelsd")
    return sol / norms, int(rank)


def _trace_columns(table: FormalPowerTable, which: str, N: int, grid):
    """Trace samples on the grid, shape ``(len(grid), N)`` for orders 1..N."""
    values = table.c_values if which == "c" else table.s_values
    if grid is None:
        return values[1 : N + 1].T
    coeffs = table._coeffs("c_values" if which == "c" else "s_values")
    return evaluate_many(coeffs[1 : N + 1], table.interval, grid).T


def fit_kernel(
    table: FormalPowerTable,
    g1: ChebyshevExpansion,
    g2: ChebyshevExpansion,
    N: int | None = None,
    grid=None,
    rcond: float = RCOND,
    min_rank_fraction: float = MIN_RANK_FRACTION,
) -> KernelApproximation:
    """Fit ``a_1..a_N`` and ``b_1..b_N`` with ``a_0 = b_0 = h/2`` held fixed.

    Args:
        table: formal powers of order at least ``N``.
        g1, g2: Goursat targets from :func:`goursat_targets`.
        N: kernel order; defaults to the table order.
        grid: fit abscissas in ``[0, b]``; the table's Chebyshev nodes when
            omitted (no re-interpolation of the traces is then needed).
        rcond: relative singular value cut-off used for the rank estimate.
        min_rank_fraction: smallest acceptable effective rank as a fraction
            of ``N``.

    Raises:
        ConditioningError: either system lost more rank than allowed.
    """
    N = table.order if N is None else int(N)
    if N < 0 or N > table.order:
        raise ValueError(f"kernel order {N} outside 0..{table.order}")
    h = table.solution.h
    if grid is None:
        x = table.nodes
        c0 = table.c_values[0]
    else:
        x = np.asarray(grid, dtype=float)
        c0 = table.solution.f(x)
    if x.size < 2 * (N + 1):
        raise ValueError(f"fit grid needs at least {2 * (N + 1)} points, got {x.size}")
    t1 = g1(x) - 0.5 * h * c0
    t2 = g2(x)
    a = np.zeros(N + 1, dtype=complex)
    b = np.zeros(N + 1, dtype=complex)
    a[0] = b[0] = 0.5 * h
    ranks = (0, 0)
    if N > 0:
        Ac = _trace_columns(table, "c", N, None if grid is None else x)
        As = _trace_columns(table, "s", N, None if grid is None else x)
        a[1:], rank1 = _lstsq(Ac, t1, rcond)
        b[1:], rank2 = _lstsq(As, t2, rcond)
        ranks = (rank1, rank2)
        if min(ranks) < max(1, int(np.ceil(min_rank_fraction * N))):
            raise ConditioningError(
                f"trace system rank {min(ranks)} < {N} columns; lower the kernel order", min(ranks), N
            )
        r1 = t1 - Ac @ a[1:]
        r2 = t2 - As @ b[1:]
    else:
        r1, r2 = t1, t2
    return KernelApproximation(
        N=N,
        a=a,
        b=b,
        eps1=float(np.abs(r1).max()),
        eps2=float(np.abs(r2).max()),
        h=h,
        table=table,
        rank=ranks,
    )


def fit_from_potential(q: ChebyshevExpansion, N: int, **kwargs) -> KernelApproximation:
    """Particular solution, formal powers and kernel fit in one call."""
    ps = particular_solution(q, **kwargs)
    table = formal_powers(ps, N)
    g1, g2 = goursat_targets(q, ps.h)
    return fit_kernel(table, g1, g2, N)


def default_grid(table: FormalPowerTable, factor: int = 4) -> np.ndarray:
    """A Chebyshev grid ``factor`` times denser than the table's nodes."""
    return cheb_nodes(factor * (table.nodes.size - 1), table.interval)


def residual_on(kernel: KernelApproximation, g1, g2, x) -> tuple[float, float]:
    """Independent recomputation of both fit residuals on abscissas ``x``."""
    table = kernel.table
    c = evaluate_many(table._coeffs("c_values")[: kernel.N + 1], table.interval, x)
    s = evaluate_many(table._coeffs("s_values")[: kernel.N + 1], table.interval, x)
    e1 = np.abs(g1(x) - kernel.a @ c).max()
    # s_0 is identically zero, so b_0 drops out of the second fit
    e2 = np.abs(g2(x) - kernel.b[1:] @ s[1:]).max()
    return float(e1), float(e2)

import numpy as np

from transmute.chebfun import cheb_nodes, to_expansion
from transmute.spectral import BoundaryCondition, build_problem

PAINE_I = (np.exp, (0.0, np.pi))
DIRICHLET = BoundaryCondition.dirichlet()
NEUMANN = BoundaryCondition.neumann()


def expand(fn, interval, M):
    """Chebyshev expansion of a callable sampled at the nodes."""
    x = cheb_nodes(M, interval)
    return to_expansion(np.asarray(fn(x), dtype=complex) + 0j * x, interval)


def paine1(N=30, M=256, **kwargs):
    q = expand(np.exp, (0.0, np.pi), M)
    return build_problem(q, DIRICHLET, DIRICHLET, N=N, **kwargs)


def free(N=30, M=256, interval=(0.0, np.pi), left=DIRICHLET, right=DIRICHLET):
    q = expand(lambda x: 0.0 * x, interval, M)
    return build_problem(q, left, right, N=N)

"""Built-in test problems.

Each entry carries the potential on its natural interval, the boundary
conditions, a solver kind and sensible defaults.  Problems whose natural
interval does not start at 0 are shifted to ``(0, b)`` when assembled; the
closed-form particular solutions below are written in the shifted variable.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from ..spectral import BoundaryCondition
from .expression import ExpressionError, parse_expression

__all__ = ["Builtin", "BUILTIN_NAMES", "make_builtin", "parse_builtin"]


@dataclass(frozen=True, eq=False)
class Builtin:
    """A catalogued problem.

    Attributes:
        name: catalog key.
        interval: natural interval of the potential.
        q: callable potential in the natural variable.
        left, right: boundary conditions (ignored by ``kind="qwell"``).
        kind: ``"eigs"`` for a boundary-value problem, ``"qwell"`` for bound
            states of a well with zero exterior potential.
        mode: eigenvalue search mode for ``kind="eigs"``.
        particular: optional ``t -> (f, f')`` in the shifted variable.
        defaults: run defaults (``m``, ``n``, ``count``).
    """

    name: str
    interval: tuple
    q: object
    left: BoundaryCondition
    right: BoundaryCondition
    kind: str = "eigs"
    mode: str = "real-scan"
    particular: object = None
    defaults: dict = field(default_factory=dict)


def _paine1():
    return Builtin(
        "paine1",
        (0.0, math.pi),
        np.exp,
        BoundaryCondition.dirichlet(),
        BoundaryCondition.dirichlet(),
        defaults={"m": 256, "n": 30, "count": 10},
    )


def _paine2():
    return Builtin(
        "paine2",
        (0.0, math.pi),
        lambda x: 1.0 / (x + 0.1) ** 2,
        BoundaryCondition.dirichlet(),
        BoundaryCondition.dirichlet(),
        defaults={"m": 256, "n": 30, "count": 10},
    )


def _coffey_evans(beta=50.0):
    beta = float(beta)

    def q(x):
        return beta**2 * np.sin(2 * x) ** 2 - 2 * beta * np.cos(2 * x)

    def particular(t):
        # on the shifted interval q = beta^2 sin^2 2t + 2 beta cos 2t, which
        # exp(beta (1 - cos 2t) / 2) solves exactly with f(0) = 1
        f = np.exp(0.5 * beta * (1.0 - np.cos(2 * t)))
        return f, beta * np.sin(2 * t) * f

    return Builtin(
        "coffey_evans",
        (-0.5 * math.pi, 0.5 * math.pi),
        q,
        BoundaryCondition.dirichlet(),
        BoundaryCondition.dirichlet(),
        particular=particular,
        defaults={"m": 256, "n": 30, "count": 10},
    )


def _complex_const(c=3 + 4j):
    c = complex(c)
    return Builtin(
        "complex_const",
        (0.0, math.pi),
        lambda x: np.full(np.shape(x), c, dtype=complex),
        BoundaryCondition.neumann(),
        BoundaryCondition.neumann(),
        mode="complex",
        defaults={"m": 128, "n": 30, "count": 10},
    )


def _chanane():
    # u'(0) = 0 and u(0) + omega u(1) = 0
    return Builtin(
        "chanane",
        (0.0, 1.0),
        lambda x: np.exp(2j * x),
        BoundaryCondition(0.0, 1.0, label="neumann"),
        BoundaryCondition(lambda w: w, 0.0, gamma=1.0, label="coupled"),
        mode="complex",
        defaults={"m": 96, "n": 20, "count": 10},
    )


def _square_well(U=15.0, a=1.0):
    U, a = float(U), float(a)
    k = math.sqrt(U)

    def particular(t):
        f = np.exp(1j * k * t)
        return f, 1j * k * f

    return Builtin(
        "square_well",
        (-a, a),
        lambda x: np.full(np.shape(x), -U, dtype=complex),
        BoundaryCondition.dirichlet(),
        BoundaryCondition.dirichlet(),
        kind="qwell",
        particular=particular,
        defaults={"m": 128, "n": 32},
    )


def _sech2(m=3.0, a=5.0):
    m, a = float(m), float(a)
    return Builtin(
        "sech2",
        (-a, a),
        lambda x: -m * (m + 1) / np.cosh(x) ** 2,
        BoundaryCondition.dirichlet(),
        BoundaryCondition.dirichlet(),
        kind="qwell",
        defaults={"m": 2048, "n": 30},
    )


_FACTORIES = {
    "paine1": _paine1,
    "paine2": _paine2,
    "coffey_evans": _coffey_evans,
    "complex_const": _complex_const,
    "chanane": _chanane,
    "square_well": _square_well,
    "sech2": _sech2,
}

BUILTIN_NAMES = tuple(_FACTORIES)


def make_builtin(name: str, *args) -> Builtin:
    """Catalog entry ``name`` with optional numeric parameters."""
    try:
        factory = _FACTORIES[name]
    except KeyError:
        raise KeyError(f"unknown builtin {name!r}; choose from {', '.join(BUILTIN_NAMES)}") from None
    try:
        return factory(*args)
    except TypeError as exc:
        raise ValueError(f"bad parameters for builtin {name!r}: {exc}") from None


_CALL = re.compile(r"^\s*([A-Za-z_]\w*)\s*(?:\((.*)\))?\s*$")


def parse_builtin(text: str) -> Builtin:
    """``"square_well(15, 1)"`` or a bare name with default parameters."""
    m = _CALL.match(text or "")
    if m is None:
        raise ValueError(f"malformed builtin {text!r}")
    name, argtext = m.group(1), m.group(2)
    args = []
    if argtext is not None and argtext.strip():
        for part in argtext.split(","):
            try:
                value = parse_expression(part, variables=())(0.0)
            except ExpressionError as exc:
                raise ValueError(f"builtin parameter {part.strip()!r}: {exc}") from None
            args.append(value.real if value.imag == 0 else value)
    return make_builtin(name, *args)

"""Run configuration, problem descriptions and their assembly into solvers.

A config file has three sections::

    [problem]
    interval = "0,pi"
    potential = "exp(x)"        # or samples_file = "q.csv", or builtin = "paine1"
    bc_left = "dirichlet"       # or { alpha = "1", beta = "0" }, expressions in omega
    bc_right = "dirichlet"

    [run]
    m = 256
    n = 30
    count = 10
    shift = 0

    [output]
    format = "csv"
    out = "eigs.csv"
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ..chebfun import cheb_nodes, to_expansion
from ..spectral import BoundaryCondition, build_problem, spectral_shift
from ..spps import particular_solution
from .catalog import Builtin, parse_builtin
from .expression import ExpressionError, parse_expression

__all__ = [
    "ConfigError",
    "RunConfig",
    "ProblemSpec",
    "load_config",
    "parse_interval",
    "parse_bc",
    "load_samples",
    "problem_from_mapping",
    "run_from_mapping",
    "assemble",
    "choose_mode",
]

MODES = ("real-scan", "complex")
FORMATS = ("csv", "json")


class ConfigError(ValueError):
    """Anything wrong with the user's input, before any numerics run."""


@dataclass
class RunConfig:
    """Discretisation and output settings.

    Attributes:
        M: Chebyshev nodes (degree of every expansion).
        N: kernel order.
        K: degree of the power-series polynomial used near the origin;
            ``None`` picks ``N // 2``.
        count: eigenvalues requested (``None``: 10, or every bound state).
        mode: ``"real-scan"``, ``"complex"`` or ``None`` (chosen from the data).
        shift: spectral shift ``lam*`` added to ``q`` during the solve.
        format: ``"csv"`` or ``"json"``.
        out: output path, ``None`` for stdout.
    """

    M: int = 256
    N: int = 30
    K: int | None = None
    count: int | None = None
    mode: str | None = None
    shift: complex = 0.0
    format: str = "csv"
    out: str | None = None

    def validate(self):
        if self.N < 1:
            raise ConfigError(f"kernel order N must be >= 1, got {self.N}")
        if self.M < 2 * self.N + 8:
            raise ConfigError(f"M={self.M} is below the resolution floor 2N+8={2 * self.N + 8}")
        if self.K is not None and self.K < 1:
            raise ConfigError("K must be >= 1")
        if self.count is not None and self.count < 1:
            raise ConfigError("count must be >= 1")
        if self.mode is not None and self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.format!r}")
        return self


@dataclass(eq=False)
class ProblemSpec:
    """Potential, interval and boundary conditions as the user gave them.

    ``q`` is a callable in the natural variable on ``interval``; ``assemble``
    moves everything to ``(0, b)``.
    """

    interval: tuple
    q: object
    left: BoundaryCondition
    right: BoundaryCondition
    kind: str = "eigs"
    mode: str | None = None
    particular: object = None
    source: str = ""
    defaults: dict = field(default_factory=dict)

    @classmethod
    def from_builtin(cls, b: Builtin):
        return cls(b.interval, b.q, b.left, b.right, b.kind, b.mode, b.particular, b.name, dict(b.defaults))


def load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config {path}: {exc}") from None


def _constant(text, what):
    try:
        expr = parse_expression(str(text), variables=())
    except ExpressionError as exc:
        raise ConfigError(f"{what}: {exc}") from None
    return expr(0.0)


def parse_interval(text) -> tuple[float, float]:
    """``"0,pi"`` (or a two-element list) to a float pair."""
    parts = text.split(",") if isinstance(text, str) else list(text)
    if len(parts) != 2:
        raise ConfigError(f"interval needs two comma-separated ends, got {text!r}")
    ends = []
    for p in parts:
        v = _constant(p, "interval")
        if v.imag != 0 or not math.isfinite(v.real):
            raise ConfigError(f"interval end {p!r} must be real and finite")
        ends.append(v.real)
    if not ends[0] < ends[1]:
        raise ConfigError(f"interval must have lo < hi, got {ends}")
    return ends[0], ends[1]


def _coefficient(text, what):
    try:
        expr = parse_expression(str(text), variables=("omega",))
    except ExpressionError as exc:
        raise ConfigError(f"{what}: {exc}") from None
    if expr.is_constant:
        return expr(0.0)
    return lambda w, e=expr: e(w)


def parse_bc(value) -> BoundaryCondition:
    """Keyword, ``"alpha,beta"`` string or ``{alpha, beta}`` mapping."""
    if isinstance(value, dict):
        unknown = set(value) - {"alpha", "beta"}
        if unknown or not value:
            raise ConfigError(f"boundary condition table takes alpha and beta, got {sorted(value)}")
        alpha, beta = value.get("alpha", 0), value.get("beta", 0)
    elif isinstance(value, str):
        key = value.strip().lower()
        if key == "dirichlet":
            return BoundaryCondition.dirichlet()
        if key == "neumann":
            return BoundaryCondition.neumann()
        parts = value.split(",")
        if len(parts) != 2:
            raise ConfigError(f"boundary condition must be dirichlet, neumann or 'alpha,beta', got {value!r}")
        alpha, beta = parts
    else:
        raise ConfigError(f"unsupported boundary condition {value!r}")
    a = _coefficient(alpha, "bc alpha")
    b = _coefficient(beta, "bc beta")
    if not callable(a) and not callable(b) and a == 0 and b == 0:
        raise ConfigError("boundary condition has alpha = beta = 0")
    return BoundaryCondition(a, b, label="robin")


def load_samples(path, interval=None):
    """Two- or three-column table ``x, Re q[, Im q]``; returns a callable.

    The samples are joined by a cubic spline, so any abscissas that are
    strictly increasing and cover the interval will do.
    """
    try:
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read samples {path}: {exc}") from None
    if data.shape[1] not in (2, 3) or data.shape[0] < 4:
        raise ConfigError("samples need 2 or 3 columns and at least 4 rows")
    if not np.all(np.isfinite(data)):
        raise ConfigError("samples must be finite")
    x = data[:, 0]
    if np.any(np.diff(x) <= 0):
        raise ConfigError("sample abscissas must be strictly increasing")
    if interval is not None:
        lo, hi = interval
        tol = 1e-12 * max(1.0, hi - lo)
        if x[0] > lo + tol or x[-1] < hi - tol:
            raise ConfigError(f"samples span [{x[0]}, {x[-1]}], which does not cover [{lo}, {hi}]")
    values = data[:, 1] + (1j * data[:, 2] if data.shape[1] == 3 else 0.0)
    spline = CubicSpline(x, values)
    return lambda t: spline(t)


def problem_from_mapping(section: dict, base_dir=None) -> ProblemSpec:
    """Build a :class:`ProblemSpec` from the ``[problem]`` table (or CLI flags)."""
    pot = section.get("potential")
    builtin = section.get("builtin")
    samples = section.get("samples_file")
    if isinstance(pot, dict):
        builtin = builtin or pot.get("builtin")
        samples = samples or pot.get("samples_file")
        pot = pot.get("expression")
    given = [v is not None for v in (pot, builtin, samples)]
    if sum(given) != 1:
        raise ConfigError("give exactly one of potential expression, samples_file or builtin")
    if builtin is not None:
        try:
            spec = ProblemSpec.from_builtin(parse_builtin(builtin))
        except (KeyError, ValueError) as exc:
            raise ConfigError(str(exc).strip("'\"")) from None
        if "interval" in section and section["interval"] is not None:
            raise ConfigError("a builtin problem fixes its own interval")
        for side in ("bc_left", "bc_right"):
            if section.get(side) is not None:
                bc = parse_bc(section[side])
                spec = replace(spec, **{side.replace("bc_", ""): bc})
        return spec
    if section.get("interval") is None:
        raise ConfigError("interval is required")
    interval = parse_interval(section["interval"])
    left = parse_bc(section.get("bc_left", "dirichlet"))
    right = parse_bc(section.get("bc_right", "dirichlet"))
    if samples is not None:
        path = samples if base_dir is None else os.path.join(base_dir, samples)
        q = load_samples(path, interval)
        return ProblemSpec(interval, q, left, right, source=f"samples:{samples}")
    try:
        expr = parse_expression(str(pot), variables=("x",))
    except ExpressionError as exc:
        raise ConfigError(f"potential: {exc}") from None
    return ProblemSpec(interval, expr, left, right, source=str(pot))


_RUN_KEYS = {"m": "M", "n": "N", "k": "K", "count": "count", "mode": "mode", "shift": "shift"}
_OUT_KEYS = {"format": "format", "out": "out"}


def run_from_mapping(run: dict, output: dict, defaults=None) -> RunConfig:
    """Merge ``defaults`` (builtin), then ``[run]``/``[output]`` values."""
    cfg = RunConfig()
    for source, keys in ((defaults or {}, _RUN_KEYS), (run, _RUN_KEYS), (output, _OUT_KEYS)):
        for key, value in source.items():
            if value is None:
                continue
            if key not in keys:
                raise ConfigError(f"unknown key {key!r}")
            attr = keys[key]
            if attr in ("M", "N", "K", "count"):
                if isinstance(value, bool) or int(value) != value:
                    raise ConfigError(f"{key} must be an integer, got {value!r}")
                value = int(value)
            elif attr == "shift":
                value = _constant(value, "shift")
            setattr(cfg, attr, value)
    return cfg.validate()


def assemble(spec: ProblemSpec, run: RunConfig):
    """Expand ``q`` on ``(0, b)`` and build the solver state."""
    lo, hi = spec.interval
    b = hi - lo
    t = cheb_nodes(run.M, (0.0, b))
    with np.errstate(all="ignore"):
        qv = np.asarray(spec.q(t + lo), dtype=complex)
    if qv.shape != t.shape or not np.all(np.isfinite(qv)):
        raise ConfigError("potential is not finite on the interval")
    q = to_expansion(qv, (0.0, b))
    ps = None
    if spec.particular is not None:
        f, fp = spec.particular(t)
        ps = particular_solution(q, strategy="closed-form-samples", samples=f, derivative_samples=fp)
    problem = build_problem(q, spec.left, spec.right, N=run.N, spps_degree=run.K, particular=ps)
    if run.shift != 0:
        problem = spectral_shift(problem, run.shift)
    return problem


def choose_mode(spec: ProblemSpec, problem, run: RunConfig) -> str:
    """Explicit mode, the builtin's, or complex for anything non-self-adjoint."""
    if run.mode is not None:
        return run.mode
    if spec.mode is not None:
        return spec.mode
    real_q = np.all(problem.q.values().imag == 0)
    real_bc = True
    for bc in (spec.left, spec.right):
        if not bc.is_constant:
            real_bc = False
        else:
            real_bc &= all(complex(v).imag == 0 for v in (bc.alpha, bc.beta, bc.gamma, bc.delta))
    return "real-scan" if real_q and real_bc else "complex"

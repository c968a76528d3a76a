"""Command-line front end: expression parser, problem catalog, config and commands."""

from .catalog import BUILTIN_NAMES, Builtin, make_builtin, parse_builtin
from .config import ConfigError, ProblemSpec, RunConfig, assemble, load_config
from .expression import Expression, ExpressionError, UnknownIdentifierError, parse_expression
from .main import build_parser, main

__all__ = [
    "BUILTIN_NAMES",
    "Builtin",
    "make_builtin",
    "parse_builtin",
    "ConfigError",
    "ProblemSpec",
    "RunConfig",
    "assemble",
    "load_config",
    "Expression",
    "ExpressionError",
    "UnknownIdentifierError",
    "parse_expression",
    "build_parser",
    "main",
]

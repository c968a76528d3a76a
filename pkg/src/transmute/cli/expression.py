"""Recursive-descent parser for potential and boundary-coefficient formulas.

Grammar (lowest precedence first)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' unary)?          # right associative, so 2^-x works
    atom   := NUMBER | 'i' | 'pi' | VAR | FUNC '(' expr ')' | '(' expr ')'

``-x^2`` therefore means ``-(x^2)``.  Evaluation promotes everything to
complex, so ``sqrt(-1)`` and ``log(-1)`` are defined.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ExpressionError",
    "UnknownIdentifierError",
    "Expression",
    "parse_expression",
    "FUNCTIONS",
]


class ExpressionError(ValueError):
    """Syntax error; ``position`` is the 0-based character offset."""

    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownIdentifierError(ExpressionError):
    pass


def _sech(z):
    return 1.0 / np.cosh(z)


FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "sech": _sech,
    "sqrt": np.sqrt,
    "abs": np.abs,
}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # num, name, op, end
    text: str
    pos: int


def _tokenize(text):
    toks = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExpressionError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


# AST nodes are plain tuples so structural equality comes for free:
# ("num", float) ("const", "i"|"pi") ("var", name) ("neg", e)
# ("bin", op, l, r) ("call", fname, e)


class _Parser:
    def __init__(self, text, variables):
        self.toks = _tokenize(text)
        self.k = 0
        self.variables = variables

    @property
    def cur(self):
        return self.toks[self.k]

    def advance(self):
        tok = self.toks[self.k]
        self.k += 1
        return tok

    def expect(self, text):
        tok = self.cur
        if tok.text != text:
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            raise ExpressionError(f"expected {text!r}, found {found}", tok.pos)
        return self.advance()

    def parse(self):
        node = self.expr()
        if self.cur.kind != "end":
            raise ExpressionError(f"expected operator or end of input, found {self.cur.text!r}", self.cur.pos)
        return node

    def expr(self):
        node = self.term()
        while self.cur.text in ("+", "-"):
            op = self.advance().text
            node = ("bin", op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.cur.text in ("*", "/"):
            op = self.advance().text
            node = ("bin", op, node, self.unary())
        return node

    def unary(self):
        if self.cur.text == "-":
            self.advance()
            return ("neg", self.unary())
        if self.cur.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        node = self.atom()
        if self.cur.text == "^":
            self.advance()
            node = ("bin", "^", node, self.unary())
        return node

    def atom(self):
        tok = self.cur
        if tok.kind == "num":
            self.advance()
            return ("num", float(tok.text))
        if tok.kind == "name":
            self.advance()
            name = tok.text
            if name in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return ("call", name, arg)
            if name in ("i", "pi"):
                return ("const", name)
            if name in self.variables:
                return ("var", name)
            raise UnknownIdentifierError(f"unknown identifier {name!r}", tok.pos)
        if tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ExpressionError(f"expected number, identifier or '(', found {found}", tok.pos)


def _fmt(node):
    kind = node[0]
    if kind == "num":
        return repr(node[1])
    if kind in ("const", "var"):
        return node[1]
    if kind == "neg":
        return f"(-{_fmt(node[1])})"
    if kind == "call":
        return f"{node[1]}({_fmt(node[2])})"
    return f"({_fmt(node[2])} {node[1]} {_fmt(node[3])})"


_BINARY = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "^": np.power,
}


def _eval(node, env):
    kind = node[0]
    if kind == "num":
        return complex(node[1])
    if kind == "const":
        return 1j if node[1] == "i" else complex(math.pi)
    if kind == "var":
        return env[node[1]]
    if kind == "neg":
        # 0 - z keeps a +0 imaginary part, so sqrt(-1) lands on the principal branch
        return 0.0 - _eval(node[1], env)
    if kind == "call":
        return FUNCTIONS[node[1]](_eval(node[2], env))
    return _BINARY[node[1]](_eval(node[2], env), _eval(node[3], env))


@dataclass(frozen=True)
class Expression:
    """A parsed formula; call it with values for its variable."""

    text: str
    tree: tuple
    variables: tuple = ("x",)

    def __call__(self, value):
        z = np.asarray(value, dtype=complex)
        env = {name: z for name in self.variables}
        with np.errstate(all="ignore"):
            out = _eval(self.tree, env)
        return np.broadcast_to(np.asarray(out, dtype=complex), z.shape).copy() if z.ndim else complex(out)

    def __str__(self):
        return _fmt(self.tree)

    @property
    def is_constant(self) -> bool:
        def walk(node):
            if node[0] == "var":
                return False
            return all(walk(c) for c in node[1:] if isinstance(c, tuple))

        return walk(self.tree)


def parse_expression(text: str, variables=("x",)) -> Expression:
    """Parse ``text`` into an :class:`Expression` of the given variables.

    Raises:
        ExpressionError: malformed input (message carries the position).
        UnknownIdentifierError: a name that is neither a function, a
            constant nor one of ``variables``.
    """
    if text is None or not str(text).strip():
        raise ExpressionError("empty expression", 0)
    text = str(text)
    tree = _Parser(text, tuple(variables)).parse()
    return Expression(text, tree, tuple(variables))

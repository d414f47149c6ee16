"""Tiny closed-form expression language for potentials.

Grammar (recursive descent, ^ is right-associative and binds tightest):

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := ('-')* power
    power  := atom ('^' factor)?
    atom   := number | 'x1'|'x2'|'x3' | 'e' | 'pi' | func '(' expr ')' | '(' expr ')'
    func   := 'abs' | 'exp' | 'log' | 'sqrt'

Evaluation is vectorized over numpy arrays.
"""

from __future__ import annotations

import math
import re

import numpy as np

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\^|\+|-|\*|/|\(|\)))"
)

_FUNCS = {"abs": np.abs, "exp": np.exp, "log": np.log, "sqrt": np.sqrt}
_CONSTS = {"e": math.e, "pi": math.pi}


class ExprError(ValueError):
    pass


def _tokenize(s: str):
    out = []
    pos = 0
    while pos < len(s):
        m = _TOKEN.match(s, pos)
        if not m or m.end() == pos:
            rest = s[pos:].strip()
            if not rest:
                break
            raise ExprError(f"cannot tokenize {rest[:12]!r} in expression {s!r}")
        out.append(m)
        pos = m.end()
    return out


class Expression:
    """Parsed expression; call evaluate with per-axis coordinate arrays."""

    def __init__(self, source: str):
        self.source = source
        self._tokens = _tokenize(source)
        self._pos = 0
        self._tree = self._expr()
        if self._pos != len(self._tokens):
            tok = self._tokens[self._pos].group(0)
            raise ExprError(f"unexpected {tok!r} in expression {source!r}")
        self.max_axis = self._max_axis(self._tree)

    # -- parsing ------------------------------------------------------

    def _peek(self):
        if self._pos < len(self._tokens):
            return self._tokens[self._pos]
        return None

    def _take(self, op=None):
        tok = self._peek()
        if tok is None:
            raise ExprError(f"unexpected end of expression {self.source!r}")
        if op is not None and tok.group("op") != op:
            raise ExprError(f"expected {op!r}, found {tok.group(0)!r}")
        self._pos += 1
        return tok

    def _expr(self):
        node = self._term()
        while (t := self._peek()) is not None and t.group("op") in ("+", "-"):
            self._take()
            node = (t.group("op"), node, self._term())
        return node

    def _term(self):
        node = self._factor()
        while (t := self._peek()) is not None and t.group("op") in ("*", "/"):
            self._take()
            node = (t.group("op"), node, self._factor())
        return node

    def _factor(self):
        t = self._peek()
        if t is not None and t.group("op") == "-":
            self._take()
            return ("neg", self._factor())
        return self._power()

    def _power(self):
        base = self._atom()
        t = self._peek()
        if t is not None and t.group("op") == "^":
            self._take()
            return ("^", base, self._factor())
        return base

    def _atom(self):
        t = self._take()
        if t.group("num") is not None:
            return ("const", float(t.group("num")))
        if t.group("name") is not None:
            name = t.group("name")
            if name in _CONSTS:
                return ("const", _CONSTS[name])
            if re.fullmatch(r"x[123]", name):
                return ("coord", int(name[1]) - 1)
            if name in _FUNCS:
                self._take("(")
                arg = self._expr()
                self._take(")")
                return ("call", name, arg)
            raise ExprError(f"unknown name {name!r} in expression {self.source!r}")
        if t.group("op") == "(":
            node = self._expr()
            self._take(")")
            return node
        raise ExprError(f"unexpected {t.group(0)!r} in expression {self.source!r}")

    def _max_axis(self, node) -> int:
        kind = node[0]
        if kind == "coord":
            return node[1]
        if kind in ("const",):
            return -1
        if kind in ("neg",):
            return self._max_axis(node[1])
        if kind == "call":
            return self._max_axis(node[2])
        return max(self._max_axis(node[1]), self._max_axis(node[2]))

    # -- evaluation ---------------------------------------------------

    def evaluate(self, coords: list[np.ndarray]):
        """coords[a] is the array of a-th coordinates (broadcastable)."""
        if self.max_axis >= len(coords):
            raise ExprError(
                f"expression {self.source!r} uses x{self.max_axis + 1} "
                f"but only {len(coords)} coordinates are available"
            )
        return self._eval(self._tree, coords)

    def _eval(self, node, coords):
        kind = node[0]
        if kind == "const":
            return node[1]
        if kind == "coord":
            return coords[node[1]]
        if kind == "neg":
            return -self._eval(node[1], coords)
        if kind == "call":
            return _FUNCS[node[1]](self._eval(node[2], coords))
        a = self._eval(node[1], coords)
        b = self._eval(node[2], coords)
        if kind == "+":
            return a + b
        if kind == "-":
            return a - b
        if kind == "*":
            return a * b
        if kind == "/":
            return a / b
        if kind == "^":
            return np.power(a, b)
        raise ExprError(f"bad node {kind!r}")


def parse(source: str) -> Expression:
    return Expression(source)

"""Arithmetic expressions in one or more real variables.

Grammar (``^`` is right-associative and binds tighter than unary minus)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := atom ('^' unary)?
    atom    := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

Functions: ln, log (natural), exp, abs, min, max, pow, sqrt, sin, cos.
Constants: e, pi.  Evaluation is plain IEEE double arithmetic on numpy
arrays; invalid operations yield NaN rather than raising.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ParseError

FUNCTIONS = {
    "ln": (1, np.log),
    "log": (1, np.log),
    "exp": (1, np.exp),
    "abs": (1, np.abs),
    "sqrt": (1, np.sqrt),
    "sin": (1, np.sin),
    "cos": (1, np.cos),
    "min": (2, np.minimum),
    "max": (2, np.maximum),
    "pow": (2, np.power),
}
CONSTANTS = {"e": np.e, "pi": np.pi}

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^(),·×])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str   # 'num', 'name', 'op', 'end'
    text: str
    pos: int


def tokenize(src):
    pos = 0
    out = []
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", pos,
                             {"number", "name", "operator"})
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            if text in ("·", "×"):
                text = "*"
            elif text == "**":
                text = "^"
            out.append(Token(kind, text, pos))
        pos = m.end()
    out.append(Token("end", "", len(src)))
    return out


class Node:
    def evaluate(self, env):
        raise NotImplementedError

    def substitute(self, name, node):
        return self


@dataclass(frozen=True)
class Num(Node):
    value: float

    def evaluate(self, env):
        return self.value

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True)
class Var(Node):
    name: str

    def evaluate(self, env):
        return env[self.name]

    def substitute(self, name, node):
        return node if name == self.name else self

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Neg(Node):
    arg: Node

    def evaluate(self, env):
        return -self.arg.evaluate(env)

    def substitute(self, name, node):
        return Neg(self.arg.substitute(name, node))

    def __str__(self):
        return f"(-{self.arg})"


_BINOPS = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "^": np.power,
}


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node

    def evaluate(self, env):
        return _BINOPS[self.op](self.left.evaluate(env), self.right.evaluate(env))

    def substitute(self, name, node):
        return BinOp(self.op, self.left.substitute(name, node), self.right.substitute(name, node))

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Call(Node):
    func: str
    args: tuple

    def evaluate(self, env):
        return FUNCTIONS[self.func][1](*(a.evaluate(env) for a in self.args))

    def substitute(self, name, node):
        return Call(self.func, tuple(a.substitute(name, node) for a in self.args))

    def __str__(self):
        return f"{self.func}({', '.join(map(str, self.args))})"


class _Parser:
    def __init__(self, src, variables):
        self.src = src
        self.tokens = tokenize(src)
        self.i = 0
        self.variables = frozenset(variables)

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text):
        if self.tok.text != text or self.tok.kind == "end":
            raise ParseError(f"expected {text!r}", self.tok.pos, {repr(text)})
        return self.advance()

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected token {self.tok.text!r}", self.tok.pos,
                             {"'+'", "'-'", "'*'", "'/'", "'^'", "end of input"})
        return node

    def expr(self):
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in ("*", "/"):
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.tok.kind == "op" and self.tok.text in ("-", "+"):
            op = self.advance().text
            arg = self.unary()
            return Neg(arg) if op == "-" else arg
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(float(t.text))
        if t.kind == "name":
            self.advance()
            if self.tok.text == "(" and self.tok.kind == "op":
                if t.text not in FUNCTIONS:
                    raise ParseError(f"unknown function {t.text!r}", t.pos, set(FUNCTIONS))
                self.advance()
                args = [self.expr()]
                while self.tok.kind == "op" and self.tok.text == ",":
                    self.advance()
                    args.append(self.expr())
                arity = FUNCTIONS[t.text][0]
                if len(args) != arity:
                    raise ParseError(f"{t.text} takes {arity} argument(s)", t.pos, {"','", "')'"})
                self.expect(")")
                return Call(t.text, tuple(args))
            if t.text in self.variables:
                return Var(t.text)
            if t.text in CONSTANTS:
                return Num(float(CONSTANTS[t.text]))
            raise ParseError(f"unknown name {t.text!r}", t.pos,
                             set(self.variables) | set(CONSTANTS) | set(FUNCTIONS))
        if t.kind == "op" and t.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        raise ParseError("expected an operand", t.pos, {"number", "name", "'('"})


def parse(src: str, variables=("t",)) -> Node:
    """Parse ``src`` into an expression tree over ``variables``."""
    return _Parser(src, variables).parse()


def evaluate(node: Node, **env):
    with np.errstate(all="ignore"):
        out = node.evaluate({k: np.asarray(v, dtype=float) for k, v in env.items()})
    return out

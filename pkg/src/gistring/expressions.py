"""Recursive-descent parser and evaluator for coefficient expressions.

Grammar (standard precedence; ^ binds tightest and is right-associative,
then unary minus, then * /, then + -):

    expr    :=  term  (('+' | '-') term)*
    term    :=  factor (('*' | '/') factor)*
    factor  :=  '-' factor | power
    power   :=  atom ('^' factor)?
    atom    :=  NUMBER | 'x' | 'pi' | NAME '(' expr (',' expr)* ')' | '(' expr ')'

Functions: sin, cos, exp, abs, sqrt (one argument), min, max (two
arguments), step (one argument x0: 0 for x < x0, else 1).  Parse errors
carry the byte offset of the offending token.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ExpressionError

__all__ = ["Expression", "parse_expression"]

_FUNCTIONS = {
    "sin": (1, np.sin),
    "cos": (1, np.cos),
    "exp": (1, np.exp),
    "abs": (1, np.abs),
    "sqrt": (1, np.sqrt),
    "min": (2, np.minimum),
    "max": (2, np.maximum),
    "step": (1, None),  # handled inline: compares against the evaluation point
}


@dataclass(frozen=True)
class _Token:
    kind: str  # number | name | op | end
    text: str
    offset: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    i = 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in "+-*/^(),":
            tokens.append(_Token("op", c, i))
            i += 1
            continue
        if c.isdigit() or c == ".":
            j = i
            seen_exp = False
            while j < len(text):
                ch = text[j]
                if ch.isdigit() or ch == ".":
                    j += 1
                elif ch in "eE" and not seen_exp and j + 1 < len(text) and (
                    text[j + 1].isdigit() or text[j + 1] in "+-"
                ):
                    seen_exp = True
                    j += 2 if text[j + 1] in "+-" else 1
                else:
                    break
            try:
                float(text[i:j])
            except ValueError:
                raise ExpressionError(f"malformed number {text[i:j]!r}", i) from None
            tokens.append(_Token("number", text[i:j], i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("name", text[i:j], i))
            i = j
            continue
        raise ExpressionError(f"unexpected character {c!r}", i)
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> _Token:
        tok = self.peek()
        if tok.kind == "op" and tok.text == text:
            return self.advance()
        raise ExpressionError(f"expected {text!r}", tok.offset)

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ExpressionError(f"unexpected {tok.text!r}", tok.offset)
        return node

    def expr(self):
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            node = ("add" if op == "+" else "sub", node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            node = ("mul" if op == "*" else "div", node, self.factor())
        return node

    def factor(self):
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return ("neg", self.factor())
        return self.power()

    def power(self):
        node = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            node = ("pow", node, self.factor())
        return node

    def atom(self):
        tok = self.advance()
        if tok.kind == "number":
            return ("num", float(tok.text))
        if tok.kind == "name":
            if tok.text == "x":
                return ("var",)
            if tok.text == "pi":
                return ("num", math.pi)
            if tok.text in _FUNCTIONS:
                arity, _ = _FUNCTIONS[tok.text]
                self.expect("(")
                args = [self.expr()]
                while self.peek().kind == "op" and self.peek().text == ",":
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != arity:
                    raise ExpressionError(
                        f"{tok.text} takes {arity} argument(s), got {len(args)}", tok.offset
                    )
                return ("call", tok.text, args)
            raise ExpressionError(f"unknown identifier {tok.text!r}", tok.offset)
        if tok.kind == "op" and tok.text == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ExpressionError(
            f"expected a value, got {tok.text!r}" if tok.kind != "end" else "unexpected end of input",
            tok.offset,
        )


def _eval(node, x: np.ndarray) -> np.ndarray:
    op = node[0]
    if op == "num":
        return np.full_like(x, node[1])
    if op == "var":
        return x.copy()
    if op == "neg":
        return -_eval(node[1], x)
    if op in ("add", "sub", "mul", "div", "pow"):
        a = _eval(node[1], x)
        b = _eval(node[2], x)
        if op == "add":
            return a + b
        if op == "sub":
            return a - b
        if op == "mul":
            return a * b
        if op == "div":
            return a / b
        return np.power(a, b)
    name, args = node[1], node[2]
    if name == "step":
        return np.where(x >= _eval(args[0], x), 1.0, 0.0)
    _, fn = _FUNCTIONS[name]
    return fn(*[_eval(a, x) for a in args])


@dataclass(frozen=True)
class Expression:
    """Parsed expression in the variable x, evaluable on numpy arrays."""

    source: str
    root: tuple

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        with np.errstate(all="ignore"):
            out = _eval(self.root, x)
        bad = ~np.isfinite(out)
        if bad.any():
            where = float(x[np.argmax(bad)])
            raise ExpressionError(
                f"domain error: {self.source!r} is non-finite at x = {where:g}"
            )
        return out


def parse_expression(text: str) -> Expression:
    """Parse UTF-8 text into an Expression; errors carry byte offsets."""
    if not isinstance(text, str):
        raise ExpressionError("expression must be a string")
    return Expression(text, _Parser(text).parse())

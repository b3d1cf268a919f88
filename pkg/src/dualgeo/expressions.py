"""Closed-form scalar expressions over chart coordinates.

Sources are parsed into immutable ASTs over real literals, coordinate
variables ``x1 .. xn``, named constants, the arithmetic operators
``+ - * / ^`` (with unary minus), and the functions ``sqrt sin cos tan exp
log``.  Precedence is ``^`` > unary ``-`` > ``* /`` > ``+ -`` and ``^`` is
right-associative, so ``-x1^2`` is ``-(x1^2)`` and ``2^-x1`` parses.

The grammar is documented in docs/expression-grammar.ebnf.  Parsing is total:
any malformed source raises :class:`ParseError` carrying the byte offset of
the first offending character.  Trees are frozen dataclasses, so parsing the
pretty-printed form of a tree yields an equal tree and evaluation is safe to
share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

FUNCTIONS = ("sqrt", "sin", "cos", "tan", "exp", "log")


class ExpressionError(ValueError):
    """Base class for parse- and evaluation-time failures."""


class ParseError(ExpressionError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class EvalDomainError(ExpressionError):
    """Evaluation left the expression's domain (division by zero, log <= 0, ...)."""

    def __init__(self, message: str, subexpression: str):
        super().__init__(f"{message} in subexpression '{subexpression}'")
        self.subexpression = subexpression


# --- AST ------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str
    index: int


@dataclass(frozen=True)
class Const:
    name: str
    value: float


@dataclass(frozen=True)
class Neg:
    arg: "Expression"


@dataclass(frozen=True)
class Add:
    lhs: "Expression"
    rhs: "Expression"


@dataclass(frozen=True)
class Sub:
    lhs: "Expression"
    rhs: "Expression"


@dataclass(frozen=True)
class Mul:
    lhs: "Expression"
    rhs: "Expression"


@dataclass(frozen=True)
class Div:
    lhs: "Expression"
    rhs: "Expression"


@dataclass(frozen=True)
class Pow:
    base: "Expression"
    exponent: "Expression"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expression"


Expression = Num | Var | Const | Neg | Add | Sub | Mul | Div | Pow | Call


# --- Lexer ----------------------------------------------------------------

_OPERATORS = set("+-*/^(),")


@dataclass(frozen=True)
class _Token:
    kind: str  # "num" | "ident" | "op" | "eof"
    text: str
    offset: int


def _tokenize(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, m = 0, len(source)
    while i < m:
        c = source[i]
        if c.isspace():
            i += 1
            continue
        if c in _OPERATORS:
            tokens.append(_Token("op", c, i))
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < m and source[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < m and (source[j].isdigit() or (source[j] == "." and not seen_dot)):
                if source[j] == ".":
                    seen_dot = True
                j += 1
            if j < m and source[j] in "eE":
                k = j + 1
                if k < m and source[k] in "+-":
                    k += 1
                if k < m and source[k].isdigit():
                    j = k
                    while j < m and source[j].isdigit():
                        j += 1
            tokens.append(_Token("num", source[i:j], i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < m and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(_Token("ident", source[i:j], i))
            i = j
            continue
        raise ParseError(f"unexpected character {c!r}", i)
    tokens.append(_Token("eof", "", m))
    return tokens


# --- Parser ---------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[_Token], variables: Sequence[str],
                 constants: Mapping[str, float]):
        self.tokens = tokens
        self.pos = 0
        self.variables = {name: i for i, name in enumerate(variables)}
        self.constants = dict(constants)

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, text: str) -> _Token:
        tok = self.peek()
        if tok.kind != "op" or tok.text != text:
            if text == ")":
                raise ParseError("unbalanced parentheses: expected ')'", tok.offset)
            raise ParseError(f"expected {text!r}", tok.offset)
        return self.advance()

    def parse(self) -> Expression:
        node = self.expr()
        tok = self.peek()
        if tok.kind != "eof":
            if tok.kind == "op" and tok.text == ")":
                raise ParseError("unbalanced parentheses: unmatched ')'", tok.offset)
            raise ParseError(f"unexpected trailing input {tok.text!r}", tok.offset)
        return node

    def expr(self) -> Expression:
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self) -> Expression:
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            rhs = self.unary()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def unary(self) -> Expression:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            # exponent at unary level: right-associative, allows 2^-3
            return Pow(base, self.unary())
        return base

    def atom(self) -> Expression:
        tok = self.advance()
        if tok.kind == "num":
            return Num(float(tok.text))
        if tok.kind == "ident":
            name = tok.text
            if name in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                nxt = self.peek()
                if nxt.kind == "op" and nxt.text == ",":
                    raise ParseError(f"{name} takes exactly one argument", nxt.offset)
                self.expect_op(")")
                return Call(name, arg)
            if name in self.variables:
                return Var(name, self.variables[name])
            if name in self.constants:
                return Const(name, float(self.constants[name]))
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text == "(":
                raise ParseError(f"unknown function {name!r}", tok.offset)
            raise ParseError(f"unknown identifier {name!r}", tok.offset)
        if tok.kind == "op" and tok.text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        if tok.kind == "op" and tok.text == ",":
            raise ParseError("unexpected ','", tok.offset)
        if tok.kind == "eof":
            raise ParseError("unexpected end of input", tok.offset)
        raise ParseError(f"unexpected {tok.text!r}", tok.offset)


def parse(source: str, n: int | None = None, *,
          variables: Sequence[str] | None = None,
          constants: Mapping[str, float] | None = None) -> Expression:
    """Parse a source string into an Expression.

    Coordinate names default to ``x1 .. xn``.  Named constants must be bound
    here; an unbound identifier is a parse error, not a runtime NaN.
    """
    if not source or not source.strip():
        raise ParseError("empty expression", 0)
    if variables is None:
        if n is None:
            raise ValueError("parse() needs either n or an explicit variable list")
        variables = tuple(f"x{i + 1}" for i in range(n))
    return _Parser(_tokenize(source), variables, constants or {}).parse()


# --- Pretty printer --------------------------------------------------------

_PREC_ADD, _PREC_MUL, _PREC_UNARY, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _prec(node: Expression) -> int:
    if isinstance(node, (Add, Sub)):
        return _PREC_ADD
    if isinstance(node, (Mul, Div)):
        return _PREC_MUL
    if isinstance(node, Neg):
        return _PREC_UNARY
    if isinstance(node, Pow):
        return _PREC_POW
    return _PREC_ATOM


def _fmt_number(v: float) -> str:
    return repr(v)


def to_source(node: Expression) -> str:
    """Render a tree to source that re-parses to an equal tree."""

    def wrap(child: Expression, minimum: int) -> str:
        text = to_source(child)
        return f"({text})" if _prec(child) < minimum else text

    if isinstance(node, Num):
        return _fmt_number(node.value)
    if isinstance(node, (Var, Const)):
        return node.name
    if isinstance(node, Neg):
        return "-" + wrap(node.arg, _PREC_UNARY)
    if isinstance(node, Add):
        return f"{wrap(node.lhs, _PREC_ADD)} + {wrap(node.rhs, _PREC_ADD + 1)}"
    if isinstance(node, Sub):
        return f"{wrap(node.lhs, _PREC_ADD)} - {wrap(node.rhs, _PREC_ADD + 1)}"
    if isinstance(node, Mul):
        return f"{wrap(node.lhs, _PREC_MUL)}*{wrap(node.rhs, _PREC_MUL + 1)}"
    if isinstance(node, Div):
        return f"{wrap(node.lhs, _PREC_MUL)}/{wrap(node.rhs, _PREC_MUL + 1)}"
    if isinstance(node, Pow):
        # base needs parens unless it is a pure atom (^ binds above unary -)
        return f"{wrap(node.base, _PREC_ATOM)}^{wrap(node.exponent, _PREC_UNARY)}"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


def is_constant(node: Expression) -> bool:
    """True when the tree contains no coordinate variable."""
    if isinstance(node, (Num, Const)):
        return True
    if isinstance(node, Var):
        return False
    if isinstance(node, Neg):
        return is_constant(node.arg)
    if isinstance(node, (Add, Sub, Mul, Div)):
        return is_constant(node.lhs) and is_constant(node.rhs)
    if isinstance(node, Pow):
        return is_constant(node.base) and is_constant(node.exponent)
    if isinstance(node, Call):
        return is_constant(node.arg)
    raise TypeError(f"not an expression node: {node!r}")

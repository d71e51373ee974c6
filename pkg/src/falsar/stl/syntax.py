"""Abstract syntax of STL formulas and a recursive-descent parser.

Concrete syntax (ASCII)::

    f    := atom | 'true' | 'false' | 'not' f | f 'and' f | f 'or' f
          | f '->' f | 'alw_[a,b]' f | 'ev_[a,b]' f | f 'until_[a,b]' f
          | '(' f ')'
    atom := expr REL expr          REL in  <  <=  >  >=  ==
    expr := channel | number | expr ('+'|'-'|'*') expr | '-' expr
          | 'abs' '(' expr ')' | '(' expr ')'

Binding strength, tightest first: unary operators, ``until``, ``and``,
``or``, ``->``.  ``->`` associates to the right and is desugared on the fly
into ``not a or b``.  The upper bound of an interval may be ``inf``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterator, Union

RELATIONS = ("<", "<=", ">", ">=", "==")


class STLSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


# --------------------------------------------------------------- expressions
@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Const:
    value: float

    def __str__(self):
        return _fmt_num(self.value)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Neg:
    arg: "Expr"

    def __str__(self):
        return f"-({self.arg})"


@dataclass(frozen=True)
class Abs:
    arg: "Expr"

    def __str__(self):
        return f"abs({self.arg})"


Expr = Union[Var, Const, BinOp, Neg, Abs]


# ------------------------------------------------------------------ formulas
@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float = math.inf

    def __post_init__(self):
        if not (0 <= self.lo < self.hi):
            raise ValueError(f"interval [{self.lo}, {self.hi}] must satisfy 0 <= a < b")

    def __str__(self):
        return f"[{_fmt_num(self.lo)},{_fmt_num(self.hi)}]"


@dataclass(frozen=True)
class Atom:
    lhs: Expr
    rel: str
    rhs: Expr

    def __post_init__(self):
        if self.rel not in RELATIONS:
            raise ValueError(f"unknown relation {self.rel!r}")

    def __str__(self):
        return f"{self.lhs} {self.rel} {self.rhs}"


@dataclass(frozen=True)
class Bottom:
    def __str__(self):
        return "false"


@dataclass(frozen=True)
class Not:
    arg: "Formula"

    def __str__(self):
        return "true" if self.arg == BOTTOM else f"not ({self.arg})"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"({self.left}) and ({self.right})"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"({self.left}) or ({self.right})"


@dataclass(frozen=True)
class Until:
    interval: Interval
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"({self.left}) until_{self.interval} ({self.right})"


@dataclass(frozen=True)
class Always:
    interval: Interval
    arg: "Formula"

    def __str__(self):
        return f"alw_{self.interval} ({self.arg})"


@dataclass(frozen=True)
class Eventually:
    interval: Interval
    arg: "Formula"

    def __str__(self):
        return f"ev_{self.interval} ({self.arg})"


Formula = Union[Atom, Bottom, Not, And, Or, Until, Always, Eventually]

BOTTOM = Bottom()
TOP = Not(BOTTOM)


def implies(a: Formula, b: Formula) -> Formula:
    return Or(Not(a), b)


def _fmt_num(v: float) -> str:
    if v == math.inf:
        return "inf"
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def expr_channels(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Const):
        return set()
    if isinstance(e, BinOp):
        return expr_channels(e.left) | expr_channels(e.right)
    return expr_channels(e.arg)


def subformulas(phi: Formula) -> Iterator[Formula]:
    yield phi
    if isinstance(phi, (Not, Always, Eventually)):
        yield from subformulas(phi.arg)
    elif isinstance(phi, (And, Or, Until)):
        yield from subformulas(phi.left)
        yield from subformulas(phi.right)


def channels(phi: Formula) -> set[str]:
    """All channel names referenced by atoms of ``phi``."""
    names: set[str] = set()
    for sub in subformulas(phi):
        if isinstance(sub, Atom):
            names |= expr_channels(sub.lhs) | expr_channels(sub.rhs)
    return names


# -------------------------------------------------------------------- lexer
_NUM = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_TOKEN_RE = re.compile(
    rf"""
    (?P<ws>\s+)
  | (?P<temporal>(?:alw|ev|until)_\[\s*(?:{_NUM}|inf)\s*,\s*(?:{_NUM}|inf)\s*\])
  | (?P<num>{_NUM})
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>->|<=|>=|==|<|>|\+|-|\*|\(|\))
    """,
    re.VERBOSE,
)
KEYWORDS = {"not", "and", "or", "abs", "true", "false"}


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks, pos, line, line_start = [], 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise STLSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind, val = m.lastgroup, m.group()
        if kind == "ws":
            for k, ch in enumerate(val):
                if ch == "\n":
                    line, line_start = line + 1, pos + k + 1
        else:
            if kind == "ident" and val in KEYWORDS:
                kind = "kw"
            toks.append(_Tok(kind, val, line, pos - line_start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


# ------------------------------------------------------------------- parser
class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0
        self.furthest: STLSyntaxError | None = None

    @property
    def tok(self) -> _Tok:
        return self.toks[self.pos]

    def error(self, message: str) -> STLSyntaxError:
        t = self.tok
        err = STLSyntaxError(message, t.line, t.col)
        if self.furthest is None or (t.line, t.col) >= (self.furthest.line, self.furthest.column):
            self.furthest = err
        return err

    def accept(self, kind: str, text: str | None = None) -> _Tok | None:
        t = self.tok
        if t.kind == kind and (text is None or t.text == text):
            self.pos += 1
            return t
        return None

    def expect(self, kind: str, text: str | None = None) -> _Tok:
        t = self.accept(kind, text)
        if t is None:
            what = text or kind
            got = self.tok.text or "end of input"
            raise self.error(f"expected {what!r}, got {got!r}")
        return t

    # formulas, loosest binding first
    def formula(self) -> Formula:
        left = self.disjunction()
        if self.accept("op", "->"):
            return implies(left, self.formula())
        return left

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.accept("kw", "or"):
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.until()
        while self.accept("kw", "and"):
            f = And(f, self.until())
        return f

    def until(self) -> Formula:
        f = self.unary()
        while self.tok.kind == "temporal" and self.tok.text.startswith("until_"):
            interval = self.interval(self.tok)
            self.pos += 1
            f = Until(interval, f, self.unary())
        return f

    def interval(self, tok: _Tok) -> Interval:
        body = tok.text[tok.text.index("[") + 1 : -1]
        a, b = (float(x.strip()) for x in body.split(","))
        if not (a < b):
            raise STLSyntaxError(f"singular or empty interval [{a:g},{b:g}]", tok.line, tok.col)
        return Interval(a, b)

    def unary(self) -> Formula:
        if self.accept("kw", "not"):
            return Not(self.unary())
        t = self.tok
        if t.kind == "temporal":
            if t.text.startswith("until_"):
                raise self.error("'until' needs a left operand")
            interval = self.interval(t)
            self.pos += 1
            arg = self.unary()
            return Always(interval, arg) if t.text.startswith("alw_") else Eventually(interval, arg)
        return self.primary()

    def primary(self) -> Formula:
        if self.accept("kw", "true"):
            return TOP
        if self.accept("kw", "false"):
            return BOTTOM
        start = self.pos
        try:
            return self.atom()
        except STLSyntaxError:
            self.pos = start
        if self.accept("op", "("):
            f = self.formula()
            self.expect("op", ")")
            return f
        raise self.furthest or self.error("expected a formula")

    def atom(self) -> Atom:
        lhs = self.expr()
        t = self.tok
        if not (t.kind == "op" and t.text in RELATIONS):
            raise self.error(f"expected a relation, got {t.text or 'end of input'!r}")
        self.pos += 1
        return Atom(lhs, t.text, self.expr())

    def expr(self) -> Expr:
        e = self.term()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            op = self.tok.text
            self.pos += 1
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.accept("op", "*"):
            e = BinOp("*", e, self.factor())
        return e

    def factor(self) -> Expr:
        t = self.tok
        if self.accept("op", "-"):
            arg = self.factor()
            return Const(-arg.value) if isinstance(arg, Const) else Neg(arg)
        if t.kind == "num":
            self.pos += 1
            return Const(float(t.text))
        if t.kind == "ident":
            self.pos += 1
            return Var(t.text)
        if self.accept("kw", "abs"):
            self.expect("op", "(")
            e = self.expr()
            self.expect("op", ")")
            return Abs(e)
        if self.accept("op", "("):
            e = self.expr()
            self.expect("op", ")")
            return e
        raise self.error(f"expected an expression, got {t.text or 'end of input'!r}")


def parse(text: str) -> Formula:
    """Parse a formula from its concrete syntax."""
    p = _Parser(text)
    f = p.formula()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r}")
    return f

"""Recursive-descent parser for the ASCII formula syntax.

Grammar (precedence loosest to tightest, quantifiers reach maximally right)::

    formula   := quantified
    quantified:= ("exists" | "forall") IDENT "." quantified | implication
    implication := disjunction ["->" quantified]
    disjunction := conjunction ("|" conjunction)*
    conjunction := chop ("&" chop)*
    chop      := unary ("~" chop)?          -- horizontal chop
    unary     := "!" unary | primary
    primary   := "free" | "true" | "false"
               | "re" "(" IDENT ")" | "cl" "(" IDENT ")"
               | "len" "=" NUMBER
               | IDENT "=" IDENT
               | "<<" formula ">>"          -- somewhere
               | "[" formula ("//" formula)+ "]"   -- lane stack, bottom first
               | "(" formula ")"

Chops associate to the right (the operator is associative, so the grouping
is immaterial for truth); multi-part lane stacks fold to nested two-part
splits from the bottom.  Numbers are exact rationals: "3", "1.1" or "7/6".
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .formula import (
    FALSE,
    FREE,
    TRUE,
    Cl,
    Exists,
    HChop,
    LengthEq,
    MlslFormula,
    Not,
    Re,
    VChop,
    VarEq,
    forall,
    somewhere,
)

KEYWORDS = {"free", "re", "cl", "len", "exists", "forall", "true", "false"}

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>\s+)
    | (?P<number>\d+(?:\.\d+)?(?:/\d+)?)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
    | (?P<op><<|>>|//|->|[-()\[\]~&|!=.])
    """,
    re.VERBOSE,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Token:
    kind: str  # "number" | "ident" | "op" | "eof"
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = match.lastgroup
        value = match.group()
        if kind != "ws":
            tokens.append(Token(kind, value, line, pos - line_start + 1))
        else:
            for i, ch in enumerate(value):
                if ch == "\n":
                    line += 1
                    line_start = pos + i + 1
        pos = match.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def expect(self, text: str) -> Token:
        token = self.peek()
        if token.text != text:
            self.fail(f"expected {text!r}, found {token.text!r}" if token.text else f"expected {text!r}, found end of input")
        return self.advance()

    def fail(self, message: str):
        token = self.peek()
        raise ParseError(message, token.line, token.column)

    # -- grammar --------------------------------------------------------

    def formula(self) -> MlslFormula:
        token = self.peek()
        if token.kind == "ident" and token.text in ("exists", "forall"):
            self.advance()
            var = self.variable()
            if var == "ego":
                self.fail("'ego' always denotes the view owner and cannot be quantified")
            self.expect(".")
            body = self.formula()
            return Exists(var, body) if token.text == "exists" else forall(var, body)
        return self.implication()

    def implication(self) -> MlslFormula:
        left = self.disjunction()
        if self.peek().text == "->":
            self.advance()
            right = self.formula()  # right side may start a new quantifier
            from .formula import implies
            return implies(left, right)
        return left

    def disjunction(self) -> MlslFormula:
        left = self.conjunction()
        while self.peek().text == "|":
            self.advance()
            from .formula import or_
            left = or_(left, self.conjunction())
        return left

    def conjunction(self) -> MlslFormula:
        left = self.chop()
        while self.peek().text == "&":
            self.advance()
            left = left & self.chop()
        return left

    def chop(self) -> MlslFormula:
        left = self.unary()
        if self.peek().text == "~":
            self.advance()
            return HChop(left, self.chop())
        return left

    def unary(self) -> MlslFormula:
        if self.peek().text == "!":
            self.advance()
            return Not(self.unary())
        return self.primary()

    def primary(self) -> MlslFormula:
        token = self.peek()
        if token.text == "(":
            self.advance()
            body = self.formula()
            self.expect(")")
            return body
        if token.text == "<<":
            self.advance()
            body = self.formula()
            self.expect(">>")
            return somewhere(body)
        if token.text == "[":
            self.advance()
            parts = [self.formula()]
            while self.peek().text == "//":
                self.advance()
                parts.append(self.formula())
            self.expect("]")
            if len(parts) < 2:
                self.fail("lane stack needs at least two '//'-separated parts")
            stacked = parts[-1]
            for part in reversed(parts[:-1]):
                stacked = VChop(part, stacked)
            return stacked
        if token.kind == "ident":
            if token.text == "free":
                self.advance()
                return FREE
            if token.text == "true":
                self.advance()
                return TRUE
            if token.text == "false":
                self.advance()
                return FALSE
            if token.text in ("re", "cl"):
                self.advance()
                self.expect("(")
                var = self.variable()
                self.expect(")")
                return Re(var) if token.text == "re" else Cl(var)
            if token.text == "len":
                self.advance()
                self.expect("=")
                return LengthEq(self.number())
            # variable equality
            left = self.variable()
            self.expect("=")
            right = self.variable()
            return VarEq(left, right)
        self.fail(f"expected a formula, found {token.text!r}" if token.text else "unexpected end of input")

    def variable(self) -> str:
        token = self.peek()
        if token.kind != "ident":
            self.fail(f"expected a variable, found {token.text!r}")
        if token.text in KEYWORDS:
            self.fail(f"{token.text!r} is a keyword, not a variable")
        return self.advance().text

    def number(self) -> Fraction:
        token = self.peek()
        sign = 1
        if token.text == "-":
            self.advance()
            sign = -1
            token = self.peek()
        if token.kind != "number":
            self.fail(f"expected a rational constant, found {token.text!r}")
        self.advance()
        return sign * Fraction(token.text)


def parse_formula(text: str) -> MlslFormula:
    """Parse the ASCII syntax into a core-grammar AST."""
    parser = _Parser(tokenize(text))
    result = parser.formula()
    trailing = parser.peek()
    if trailing.kind != "eof":
        parser.fail(f"trailing input starting at {trailing.text!r}")
    return result

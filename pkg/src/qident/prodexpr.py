"""Parser and evaluator for quotients of q-Pochhammer products.

Grammar (whitespace is ignored)::

    expr     := prod ('/' prod)?
    prod     := '1' | factor+
    factor   := '(' mono (',' mono)* ';' mono ')' '_' ('inf' | uint)
    mono     := ['-'] 'q' ['^' exponent]
    exponent := uint | '(' uint '/' uint ')'

``(a1,...,at; z)_n`` means ``prod_j (aj; z)_n``.  Exponents are literal
rationals; there are no symbolic parameters.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .qfunctions import QMonomial, VanishingProductError, poch_finite, poch_inf, required_denom
from .series import QSeries, SubstrateError, one, zero


class ParseError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        self.text = text
        self.pos = pos
        super().__init__(f"{message} at position {pos}: {text[:pos]!r} <here> {text[pos:]!r}")


@dataclass(frozen=True)
class PochFactor:
    args: tuple[QMonomial, ...]
    base: QMonomial
    length: int | None  # None means infinite


@dataclass(frozen=True)
class ProductExpr:
    numerator: tuple[PochFactor, ...]
    denominator: tuple[PochFactor, ...] = ()

    def exponents(self):
        for f in self.numerator + self.denominator:
            for a in f.args:
                yield a.exp
            yield f.base.exp

    def min_denom(self) -> int:
        return required_denom(self.exponents())


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<name>inf|q)|(?P<sym>[()\-,;_/^]))")


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[start]!r}", text, start)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, value: str | None = None, kind: str | None = None):
        tok = self.toks[self.i]
        if (value is not None and tok[1] != value) or (kind is not None and tok[0] != kind):
            want = repr(value) if value is not None else kind
            got = repr(tok[1]) if tok[0] != "end" else "end of input"
            raise ParseError(f"expected {want}, found {got}", self.text, tok[2])
        self.i += 1
        return tok

    def expr(self) -> ProductExpr:
        num = self.prod()
        den: tuple[PochFactor, ...] = ()
        if self.peek()[1] == "/":
            self.take("/")
            den = self.prod()
        self.take(kind="end")
        return ProductExpr(num, den)

    def prod(self) -> tuple[PochFactor, ...]:
        tok = self.peek()
        if tok[0] == "num":
            if tok[1] != "1":
                raise ParseError("only the literal 1 may stand for an empty product", self.text, tok[2])
            self.take()
            return ()
        factors = [self.factor()]
        while self.peek()[1] == "(":
            factors.append(self.factor())
        return tuple(factors)

    def factor(self) -> PochFactor:
        self.take("(")
        starts = [self.peek()[2]]
        args = [self.mono()]
        while self.peek()[1] == ",":
            self.take(",")
            starts.append(self.peek()[2])
            args.append(self.mono())
        self.take(";")
        base_pos = self.peek()[2]
        base = self.mono()
        self.take(")")
        self.take("_")
        tok = self.peek()
        if tok[1] == "inf":
            self.take()
            length = None
        else:
            length = int(self.take(kind="num")[1])
        if base.exp <= 0:
            raise ParseError("Pochhammer base must have a positive exponent", self.text, base_pos)
        for a, pos in zip(args, starts):
            if length is None and a.exp == 0 and a.sign == 1:
                raise ParseError("(1; z)_inf vanishes identically", self.text, pos)
        return PochFactor(tuple(args), base, length)

    def mono(self) -> QMonomial:
        sign = 1
        if self.peek()[1] == "-":
            self.take("-")
            sign = -1
        tok = self.peek()
        if tok[1] != "q":
            got = repr(tok[1]) if tok[0] != "end" else "end of input"
            raise ParseError(f"expected 'q', found {got}", self.text, tok[2])
        self.take("q")
        exp = Fraction(1)
        if self.peek()[1] == "^":
            self.take("^")
            if self.peek()[1] == "(":
                self.take("(")
                a = int(self.take(kind="num")[1])
                self.take("/")
                btok = self.take(kind="num")
                b = int(btok[1])
                if b == 0:
                    raise ParseError("zero denominator", self.text, btok[2])
                self.take(")")
                exp = Fraction(a, b)
            else:
                exp = Fraction(int(self.take(kind="num")[1]))
        return QMonomial(sign, exp)


def parse(text: str) -> ProductExpr:
    """Parse product notation such as ``(q^5;q^5)_inf / (q;q)_inf``."""
    return _Parser(text).expr()


def _render_mono(m: QMonomial) -> str:
    s = "-" if m.sign < 0 else ""
    e = m.exp
    if e == 1:
        return s + "q"
    if e.denominator == 1:
        return f"{s}q^{e.numerator}"
    return f"{s}q^({e.numerator}/{e.denominator})"


def _render_prod(factors) -> str:
    if not factors:
        return "1"
    out = []
    for f in factors:
        n = "inf" if f.length is None else str(f.length)
        out.append(f"({','.join(_render_mono(a) for a in f.args)};{_render_mono(f.base)})_{n}")
    return " ".join(out)


def render(expr: ProductExpr) -> str:
    text = _render_prod(expr.numerator)
    if expr.denominator:
        text += " / " + _render_prod(expr.denominator)
    return text


def _factor_series(f: PochFactor, denom: int, order: int) -> QSeries:
    result = None
    for a in f.args:
        if f.length is None:
            s = poch_inf(a, f.base, denom, order)
        else:
            s = poch_finite(a, f.base, f.length, denom, order)
        result = s if result is None else result * s
    return result


def evaluate(expr: ProductExpr | str, denom: int | None = None, order: int = 0) -> QSeries:
    """Series of the product through ``t^order`` on ``q^(1/denom)``.

    ``denom`` defaults to the coarsest substrate that holds every exponent.
    """
    if isinstance(expr, str):
        expr = parse(expr)
    need = expr.min_denom()
    if denom is None:
        denom = need
    elif denom % need:
        raise SubstrateError(f"expression needs q^(1/{need}); substrate q^(1/{denom}) is too coarse")
    result = one(denom, order)
    for f in expr.numerator:
        try:
            result = result * _factor_series(f, denom, order)
        except VanishingProductError:
            if f.length is None:
                raise
            result = zero(denom, order)
    for f in expr.denominator:
        s = _factor_series(f, denom, order)
        if s.valuation() is None or abs(s.coeff_at(s.valuation())) != 1:
            raise VanishingProductError("denominator factor is not invertible")
        result = result * s.invert()
    return result.truncate(order) if result.order > order else result


eval_expr = evaluate

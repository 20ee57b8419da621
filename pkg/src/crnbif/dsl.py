"""Text format for networks and enlargement steps.

One statement per line (``;`` also separates statements), ``#`` starts a
comment::

    species X1, X2                 # optional, fixes species order
    X1 + 2 X2 -> 3 X2 @ 1
    X2 -> X1 @ k
    X <-> 0 @ a, b                 # two reactions
    Y -> X @ eps^-1 + 2*k          # schedule rates are sums of coef*eps^p*param
    enlarge E1: X1 + X2 -> 2 X2
    enlarge E2
    enlarge E3: Y at r1[0->1], r2[1->0]
    enlarge E4: Y at r2[1->0]
    enlarge E5: Y1 + X1 <-> 2 Y2
    enlarge E6: split r2 with Y1 + Y2

Reaction references ``rN`` are 1-based and refer to the network as it
stands when the step is applied.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .network import EPS, RESERVED, Complex, Network, NetworkError, RateExpr, RateTerm, Reaction

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<arrow2><->)
  | (?P<arrow>->)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>[+,@*^/\-:\[\]])
    """,
    re.VERBOSE,
)


class DSLError(ValueError):
    """Parse error carrying a 1-based line and column."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message, self.line, self.col = message, line, col
        super().__init__(f"line {line}, col {col}: {message}" if line else message)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


class _Stream:
    def __init__(self, toks: list[_Tok], line: int, end_col: int):
        self.toks, self.i, self.line, self.end_col = toks, 0, line, end_col

    def peek(self, offset: int = 0) -> _Tok | None:
        j = self.i + offset
        return self.toks[j] if j < len(self.toks) else None

    def next(self) -> _Tok:
        tok = self.peek()
        if tok is None:
            raise DSLError("unexpected end of statement", self.line, self.end_col)
        self.i += 1
        return tok

    def accept(self, text: str) -> bool:
        tok = self.peek()
        if tok is not None and tok.text == text and tok.kind != "number":
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> _Tok:
        tok = self.next()
        if tok.text != text:
            raise DSLError(f"expected {text!r}, found {tok.text!r}", tok.line, tok.col)
        return tok

    def error(self, message: str) -> DSLError:
        tok = self.peek()
        if tok is None:
            return DSLError(message, self.line, self.end_col)
        return DSLError(message, tok.line, tok.col)

    @property
    def done(self) -> bool:
        return self.i >= len(self.toks)


def _tokenize(text: str, line: int, col0: int) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise DSLError(f"unexpected character {text[pos]!r}", line, col0 + pos)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), line, col0 + pos))
        pos = m.end()
    return toks


def _statements(source: str):
    """Yield (line, col, token list) for each nonempty statement."""
    for lineno, raw in enumerate(source.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        start = 0
        for piece in body.split(";"):
            stripped = piece.strip()
            if stripped:
                col = start + piece.index(stripped[0]) + 1
                yield lineno, col, _Stream(_tokenize(piece, lineno, start + 1), lineno, start + len(piece) + 1)
            start += len(piece) + 1


def _complex(st: _Stream, order: list | None = None) -> Complex:
    tok = st.peek()
    if tok is not None and tok.kind == "number" and tok.text == "0":
        nxt = st.peek(1)
        if nxt is None or nxt.kind != "ident":
            st.next()
            return Complex()
    coeffs = []
    while True:
        tok = st.next()
        coef = 1
        if tok.kind == "number":
            try:
                coef = int(tok.text)
            except ValueError:
                raise DSLError(f"non-integer stoichiometric coefficient {tok.text}", tok.line, tok.col) from None
            tok = st.next()
        if tok.kind != "ident":
            raise DSLError(f"expected species name, found {tok.text!r}", tok.line, tok.col)
        if tok.text in RESERVED:
            raise DSLError(f"{tok.text!r} is reserved", tok.line, tok.col)
        coeffs.append((tok.text, coef))
        if order is not None:
            order.append(tok.text)
        if not st.accept("+"):
            return Complex(tuple(coeffs))


def _number(st: _Stream) -> Fraction:
    tok = st.next()
    if tok.kind != "number":
        raise DSLError(f"expected a number, found {tok.text!r}", tok.line, tok.col)
    value = Fraction(tok.text)
    if st.accept("/"):
        den = st.next()
        if den.kind != "number" or Fraction(den.text) == 0:
            raise DSLError("invalid denominator", den.line, den.col)
        value /= Fraction(den.text)
    return value


def _rate(st: _Stream) -> RateExpr:
    start = st.peek()
    if start is not None and start.text == "-":
        raise DSLError("nonpositive rate", start.line, start.col)
    terms = []
    while True:
        coef, power, param = Fraction(1), 0, None
        first = st.peek()
        while True:
            tok = st.peek()
            if tok is None:
                raise st.error("expected a rate")
            if tok.kind == "number":
                coef *= _number(st)
            elif tok.kind == "ident" and tok.text == EPS:
                st.next()
                p = 1
                if st.accept("^"):
                    sign = -1 if st.accept("-") else 1
                    e = st.next()
                    if e.kind != "number" or not e.text.isdigit():
                        raise DSLError("eps exponent must be an integer", e.line, e.col)
                    p = sign * int(e.text)
                power += p
            elif tok.kind == "ident":
                if param is not None:
                    raise DSLError("a rate term may contain at most one parameter", tok.line, tok.col)
                if tok.text in RESERVED:
                    raise DSLError(f"{tok.text!r} is reserved", tok.line, tok.col)
                param = st.next().text
            else:
                raise DSLError(f"unexpected {tok.text!r} in rate", tok.line, tok.col)
            if not st.accept("*"):
                break
        if coef <= 0:
            raise DSLError("nonpositive rate", first.line, first.col)
        terms.append(RateTerm(power, param, coef))
        if not st.accept("+"):
            return RateExpr(tuple(terms))


def _reaction_ref(st: _Stream) -> int:
    tok = st.next()
    m = re.fullmatch(r"r(\d+)", tok.text)
    if tok.kind != "ident" or m is None or int(m.group(1)) < 1:
        raise DSLError(f"expected a reaction reference like r1, found {tok.text!r}", tok.line, tok.col)
    return int(m.group(1)) - 1


def _int(st: _Stream) -> int:
    tok = st.next()
    if tok.kind != "number" or not tok.text.isdigit():
        raise DSLError(f"expected a nonnegative integer, found {tok.text!r}", tok.line, tok.col)
    return int(tok.text)


def _enlargement(st: _Stream):
    from . import enlarge as E

    kind_tok = st.next()
    kind = kind_tok.text.upper()
    if kind not in {"E1", "E2", "E3", "E4", "E5", "E6"}:
        raise DSLError(f"unknown enlargement {kind_tok.text!r}", kind_tok.line, kind_tok.col)
    if kind == "E2":
        if st.accept(":") and not st.done:
            raise st.error("E2 takes no arguments")
        return E.E2()
    if kind == "E4" and st.done:
        raise st.error("E4 needs the new species name")
    st.expect(":")
    if kind == "E1":
        a = _complex(st)
        st.expect("->")
        b = _complex(st)
        return E.E1(a, b)
    if kind in ("E3", "E4"):
        tok = st.next()
        if tok.kind != "ident":
            raise DSLError("expected the new species name", tok.line, tok.col)
        entries = []
        if st.accept("at"):
            while True:
                j = _reaction_ref(st)
                st.expect("[")
                a = _int(st)
                st.expect("->")
                b = _int(st)
                st.expect("]")
                entries.append((j, a, b))
                if not st.accept(","):
                    break
        cls = E.E3 if kind == "E3" else E.E4
        return cls(tok.text, tuple(entries))
    if kind == "E5":
        pairs = []
        while True:
            a = _complex(st)
            st.expect("<->")
            b = _complex(st)
            pairs.append((a, b))
            if not st.accept(","):
                break
        return E.E5(tuple(pairs))
    splits = []
    while True:
        st.expect("split")
        j = _reaction_ref(st)
        st.expect("with")
        splits.append((j, _complex(st)))
        if not st.accept(","):
            break
    return E.E6(tuple(splits))


@dataclass(frozen=True)
class ParsedFile:
    network: Network
    enlargements: tuple


def parse_file(source: str) -> ParsedFile:
    """Parse a network together with any ``enlarge`` statements."""
    species: dict[str, None] = {}
    reactions: list[Reaction] = []
    where: dict[tuple[Complex, Complex], tuple[int, int]] = {}
    steps = []
    saw_any = False
    for line, col, st in _statements(source):
        saw_any = True
        head = st.peek()
        if head.kind == "ident" and head.text == "species" and (st.peek(1) is None or st.peek(1).kind == "ident"):
            st.next()
            while True:
                tok = st.next()
                if tok.kind != "ident" or tok.text in RESERVED:
                    raise DSLError(f"invalid species name {tok.text!r}", tok.line, tok.col)
                species.setdefault(tok.text)
                if not st.accept(","):
                    break
        elif head.kind == "ident" and head.text == "enlarge":
            st.next()
            steps.append(_enlargement(st))
        else:
            seen: list[str] = []
            a = _complex(st, seen)
            arrow = st.next()
            if arrow.kind not in ("arrow", "arrow2"):
                raise DSLError(f"expected '->' or '<->', found {arrow.text!r}", arrow.line, arrow.col)
            b = _complex(st, seen)
            st.expect("@")
            rates = [_rate(st)]
            if arrow.kind == "arrow2":
                st.expect(",")
                rates.append(_rate(st))
            pairs = [(a, b)] if arrow.kind == "arrow" else [(a, b), (b, a)]
            for (lhs, rhs), rate in zip(pairs, rates):
                if lhs == rhs:
                    raise DSLError("null reaction (reactant equals product)", line, col)
                if (lhs, rhs) in where:
                    raise DSLError(f"duplicate reaction {lhs} -> {rhs}", line, col)
                where[(lhs, rhs)] = (line, col)
            for name in seen:
                species.setdefault(name)
            for (lhs, rhs), rate in zip(pairs, rates):
                reactions.append(Reaction(lhs, rhs, rate))
        if not st.done:
            raise st.error(f"unexpected {st.peek().text!r}")
    if not reactions:
        raise DSLError("empty network: no reactions", 1 if saw_any else 0, 1 if saw_any else 0)
    try:
        net = Network(tuple(species), tuple(reactions))
    except NetworkError as exc:
        raise DSLError(str(exc)) from None
    return ParsedFile(net, tuple(steps))


def parse_network(source: str) -> Network:
    return parse_file(source).network


def serialize_network(net: Network) -> str:
    return net.format()


def format_enlargement(step) -> str:
    return f"enlarge {step.describe()}"

"""Composite-polynomial IR for custom gates.

A gate is a sum of terms; each term is an integer scalar, an optional named
challenge (a scalar the transcript supplies at prove time, e.g. ``al`` for
the permutation batching challenge), and a flat product of MLE references.
Powers are encoded by repeating a reference, so ``w^5`` occupies five factor
slots and the degree of a term is its total factor multiplicity.

The text format is sum-of-products::

    gate vanilla_zerocheck (inputs: q_l:selector, ..., w_1:witness, f_r:eq) {
        q_l * w_1 * f_r + q_m * w_1 * w_2 * f_r - q_o * w_3 * f_r + ...
    }

with ``#`` comments, optional ``3 *`` integer scalars and ``id^k`` powers.
An identifier that is not a declared input may appear once at the head of a
term and names a challenge coefficient.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field as dc_field
from typing import Iterable, Mapping, Sequence

from .field import P
from .mle import DimensionMismatch, Mle

ROLES = ("selector", "witness", "permutation-aux", "eq", "temp")

# Reserved id for the scheduler's temporary partial-product buffer.
TMP = "Tmp"


class ParseError(Exception):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{msg} at line {line}, column {col}")
        self.line = line
        self.col = col


class UnknownSymbol(ParseError):
    pass


class DuplicateInput(Exception):
    pass


class UnknownGate(Exception):
    pass


class MissingBinding(Exception):
    pass


@dataclass(frozen=True)
class MleRef:
    id: str
    role: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")


@dataclass(frozen=True)
class Term:
    scalar: int
    challenge: str | None
    factors: tuple[str, ...]

    def __post_init__(self):
        if not self.factors:
            raise ValueError("term has no MLE factors")
        object.__setattr__(self, "scalar", self.scalar % P)
        object.__setattr__(self, "factors", tuple(sorted(self.factors)))

    @property
    def degree(self) -> int:
        return len(self.factors)


@dataclass(frozen=True)
class CompositePoly:
    name: str
    inputs: tuple[MleRef, ...]
    terms: tuple[Term, ...]
    num_vars: int | None = None

    def __post_init__(self):
        ids = [r.id for r in self.inputs]
        dupes = {i for i in ids if ids.count(i) > 1}
        if dupes:
            raise DuplicateInput(f"duplicate input ids: {sorted(dupes)}")
        declared = set(ids)
        for t in self.terms:
            for f in t.factors:
                if f not in declared:
                    raise ValueError(f"term references undeclared input {f!r}")

    @property
    def degree(self) -> int:
        return max(t.degree for t in self.terms)

    @property
    def input_ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.inputs)

    def roles(self) -> dict[str, str]:
        return {r.id: r.role for r in self.inputs}

    def eq_inputs(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.inputs if r.role == "eq")

    def challenges(self) -> tuple[str, ...]:
        seen: list[str] = []
        for t in self.terms:
            if t.challenge and t.challenge not in seen:
                seen.append(t.challenge)
        return tuple(seen)

    def with_num_vars(self, mu: int) -> "CompositePoly":
        return CompositePoly(self.name, self.inputs, self.terms, mu)


def degree(p: CompositePoly) -> int:
    """Max total factor multiplicity over the terms."""
    return p.degree


def distinct_mles(p: CompositePoly) -> int:
    """Number of distinct MLE references appearing across all terms."""
    ids = set()
    for t in p.terms:
        ids.update(t.factors)
    return len(ids)


def evaluate_composite(
    p: CompositePoly,
    binding: Mapping[str, Mle],
    scalars: Mapping[str, int],
    index: int,
) -> int:
    """Plug table entries at a hypercube index into the term structure."""
    mu = None
    for ref in p.inputs:
        if ref.id not in binding:
            raise MissingBinding(f"no table bound for input {ref.id!r}")
        t = binding[ref.id]
        if mu is None:
            mu = t.num_vars
        elif t.num_vars != mu:
            raise DimensionMismatch("bound tables disagree on num_vars")
    assert mu is not None
    if not 0 <= index < (1 << mu):
        raise DimensionMismatch(f"index {index} outside 2^{mu} table")
    acc = 0
    for t in p.terms:
        v = t.scalar
        if t.challenge is not None:
            if t.challenge not in scalars:
                raise MissingBinding(f"no value for challenge {t.challenge!r}")
            v = (v * scalars[t.challenge]) % P
        for f in t.factors:
            v = (v * binding[f].evals[index]) % P
        acc += v
    return acc % P


# ---------------------------------------------------------------------------
# Expression builder: authoring surface for the built-in library. Expands
# products of sums into the flat sum-of-products IR, merging like terms.
# ---------------------------------------------------------------------------

class Expr:
    """Polynomial in MLE refs and challenge names, kept in expanded form.

    terms maps (challenge | None, sorted factor tuple) -> integer scalar.
    """

    def __init__(self, terms: dict[tuple[str | None, tuple[str, ...]], int] | None = None):
        self.terms = dict(terms or {})

    @staticmethod
    def ref(id: str) -> "Expr":
        return Expr({(None, (id,)): 1})

    @staticmethod
    def const(c: int) -> "Expr":
        c %= P
        return Expr({(None, ()): c} if c else {})

    @staticmethod
    def chal(name: str) -> "Expr":
        return Expr({(name, ()): 1})

    def _merge(self, key, coeff):
        cur = self.terms.get(key, 0)
        new = (cur + coeff) % P
        if new:
            self.terms[key] = new
        elif key in self.terms:
            del self.terms[key]

    def __add__(self, other: "Expr") -> "Expr":
        out = Expr(self.terms)
        for k, c in other.terms.items():
            out._merge(k, c)
        return out

    def __sub__(self, other: "Expr") -> "Expr":
        return self + (-other)

    def __neg__(self) -> "Expr":
        return Expr({k: (-c) % P for k, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, int):
            return Expr({k: (c * other) % P for k, c in self.terms.items()})
        out = Expr()
        for (ch_a, fs_a), ca in self.terms.items():
            for (ch_b, fs_b), cb in other.terms.items():
                if ch_a and ch_b:
                    raise ValueError("cannot multiply two challenge coefficients")
                key = (ch_a or ch_b, tuple(sorted(fs_a + fs_b)))
                out._merge(key, ca * cb)
        return out

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Expr":
        out = Expr.const(1)
        for _ in range(k):
            out = out * self
        return out

    def into_gate(self, name: str, inputs: Sequence[tuple[str, str]]) -> CompositePoly:
        refs = tuple(MleRef(i, r) for i, r in inputs)
        terms = []
        for (ch, fs), c in self.terms.items():
            if not fs:
                raise ValueError("constant term with no MLE factor")
            terms.append(Term(c, ch, fs))
        return CompositePoly(name, refs, tuple(terms))


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|\d+|[(){}:,*^+-]")
_ID_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def _tokenize(text: str):
    tokens = []
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0]
        pos = 0
        while pos < len(line):
            if line[pos].isspace():
                pos += 1
                continue
            m = _TOKEN_RE.match(line, pos)
            if not m:
                raise ParseError(f"unexpected character {line[pos]!r}", ln, pos + 1)
            tokens.append((m.group(), ln, pos + 1))
            pos = m.end()
    return tokens


class _TokenStream:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i][0] if self.i < len(self.tokens) else None

    def next(self):
        if self.i >= len(self.tokens):
            last = self.tokens[-1] if self.tokens else ("", 1, 1)
            raise ParseError("unexpected end of gate text", last[1], last[2])
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, want: str):
        tok, ln, col = self.next()
        if tok != want:
            raise ParseError(f"expected {want!r}, found {tok!r}", ln, col)
        return tok, ln, col


def parse_gate(text: str) -> CompositePoly:
    """Parse one gate definition into the IR."""
    ts = _TokenStream(_tokenize(text))
    ts.expect("gate")
    name, ln, col = ts.next()
    if not _ID_RE.match(name):
        raise ParseError(f"bad gate name {name!r}", ln, col)
    ts.expect("(")
    ts.expect("inputs")
    ts.expect(":")
    inputs: list[MleRef] = []
    while True:
        ident, ln, col = ts.next()
        if not _ID_RE.match(ident):
            raise ParseError(f"bad input id {ident!r}", ln, col)
        ts.expect(":")
        role, rln, rcol = ts.next()
        if role not in ROLES:
            raise ParseError(f"unknown role {role!r}", rln, rcol)
        if any(r.id == ident for r in inputs):
            raise DuplicateInput(f"duplicate input id {ident!r}")
        inputs.append(MleRef(ident, role))
        tok, ln, col = ts.next()
        if tok == ")":
            break
        if tok != ",":
            raise ParseError(f"expected ',' or ')', found {tok!r}", ln, col)
    declared = {r.id for r in inputs}
    ts.expect("{")

    merged: dict[tuple[str | None, tuple[str, ...]], int] = {}
    order: list[tuple[str | None, tuple[str, ...]]] = []
    sign = 1
    tok = ts.peek()
    if tok in ("+", "-"):
        ts.next()
        sign = -1 if tok == "-" else 1
    while True:
        scalar, challenge, factors = _parse_term(ts, declared)
        key = (challenge, tuple(sorted(factors)))
        prev = merged.get(key)
        if prev is None:
            order.append(key)
            merged[key] = 0
        merged[key] = (merged[key] + sign * scalar) % P
        tok, ln, col = ts.next()
        if tok == "}":
            break
        if tok == "+":
            sign = 1
        elif tok == "-":
            sign = -1
        else:
            raise ParseError(f"expected '+', '-' or '}}', found {tok!r}", ln, col)
    if ts.peek() is not None:
        tok, ln, col = ts.next()
        raise ParseError(f"trailing content {tok!r} after gate body", ln, col)

    terms = tuple(Term(merged[k], k[0], k[1]) for k in order if merged[k])
    if not terms:
        raise ParseError("gate body has no nonzero terms", 1, 1)
    return CompositePoly(name, tuple(inputs), terms)


def _parse_term(ts: _TokenStream, declared: set[str]):
    scalar = 1
    challenge: str | None = None
    factors: list[str] = []
    first = True
    while True:
        tok, ln, col = ts.next()
        if tok.isdigit():
            if not first:
                raise ParseError("integer scalar must lead its term", ln, col)
            scalar = int(tok)
        elif _ID_RE.match(tok):
            count = 1
            if ts.peek() == "^":
                ts.next()
                exp, eln, ecol = ts.next()
                if not exp.isdigit() or int(exp) < 1:
                    raise ParseError(f"bad exponent {exp!r}", eln, ecol)
                count = int(exp)
            if tok in declared:
                factors.extend([tok] * count)
            elif not factors and challenge is None and count == 1:
                challenge = tok
            else:
                raise UnknownSymbol(f"unknown symbol {tok!r}", ln, col)
        else:
            raise ParseError(f"expected scalar or identifier, found {tok!r}", ln, col)
        first = False
        if ts.peek() != "*":
            break
        ts.next()
    if not factors:
        tok = ts.peek()
        raise ParseError("term has no MLE factors", 1, 1)
    return scalar, challenge, factors


def print_gate(p: CompositePoly) -> str:
    """Canonical text form; parse_gate(print_gate(p)) reproduces p."""
    decls = ", ".join(f"{r.id}:{r.role}" for r in p.inputs)
    lines = [f"gate {p.name} (inputs: {decls}) {{"]
    for i, t in enumerate(p.terms):
        scalar = t.scalar
        neg = scalar > P // 2  # print small negatives as subtraction
        if neg:
            scalar = P - scalar
        parts = []
        if scalar != 1 or (t.challenge is None and not t.factors):
            parts.append(str(scalar))
        if t.challenge:
            parts.append(t.challenge)
        run: list[str] = []
        prev = None
        count = 0
        for f in t.factors + ("",):
            if f == prev:
                count += 1
                continue
            if prev is not None:
                run.append(prev if count == 1 else f"{prev}^{count}")
            prev, count = f, 1
        parts.extend(run)
        body = " * ".join(parts)
        if i == 0:
            lines.append(f"      {'- ' if neg else ''}{body}")
        else:
            lines.append(f"    {'-' if neg else '+'} {body}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def gate_hash(p: CompositePoly) -> bytes:
    """Statement identifier bound into transcripts and proof headers."""
    return hashlib.sha256(print_gate(p).encode()).digest()


def append_eq_factor(p: CompositePoly, id: str = "f_r") -> CompositePoly:
    """Multiply every term by a fresh eq-role reference (ZeroCheck wrapping)."""
    roles = p.roles()
    if id in roles:
        raise ValueError(f"gate already has an input named {id!r}")
    if p.eq_inputs():
        raise ValueError("gate already carries an eq-role factor")
    inputs = p.inputs + (MleRef(id, "eq"),)
    terms = tuple(Term(t.scalar, t.challenge, t.factors + (id,)) for t in p.terms)
    return CompositePoly(p.name + "_zc", inputs, terms, p.num_vars)

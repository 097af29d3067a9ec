"""Exact sparse multivariate polynomials over the rationals.

Every polynomial lives in the variables ``(t, x1, ..., xn)``.  A monomial is a
tuple of ``n + 1`` nonnegative exponents, slot 0 being the exponent of the time
variable ``t``.  Coefficients are :class:`fractions.Fraction` values, so all
arithmetic is exact.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

Monomial = tuple  # tuple[int, ...] of length nvars + 1, slot 0 is t
Scalar = Union[int, Fraction]


def grlex_key(m: Monomial) -> tuple:
    """Sort key for graded lexicographic order (total degree, then lex)."""
    return (sum(m), m)


class DimensionError(ValueError):
    """Operands live in different variable spaces."""


class Polynomial:
    """Immutable sparse polynomial with exact rational coefficients.

    ``terms`` maps exponent tuples ``(e_t, e_1, ..., e_n)`` to nonzero
    :class:`~fractions.Fraction` coefficients.
    """

    __slots__ = ("_terms", "_nvars", "_hash")

    def __init__(self, terms: Mapping[Monomial, Scalar], nvars: int):
        clean = {}
        width = nvars + 1
        for m, c in terms.items():
            m = tuple(m)
            if len(m) != width:
                raise DimensionError(f"monomial {m} has {len(m)} slots, expected {width}")
            if any(e < 0 for e in m):
                raise ValueError(f"negative exponent in {m}")
            c = Fraction(c)
            if c:
                clean[m] = clean.get(m, 0) + c
                if not clean[m]:
                    del clean[m]
        self._terms = clean
        self._nvars = nvars
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict, nvars: int) -> "Polynomial":
        # trusted constructor: keys valid, coefficients nonzero Fractions
        p = object.__new__(cls)
        p._terms = terms
        p._nvars = nvars
        p._hash = None
        return p

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls._raw({}, nvars)

    @classmethod
    def constant(cls, value: Scalar, nvars: int) -> "Polynomial":
        value = Fraction(value)
        return cls._raw({(0,) * (nvars + 1): value} if value else {}, nvars)

    @classmethod
    def var(cls, index: int, nvars: int) -> "Polynomial":
        """The variable in slot ``index`` (0 is t, i is x_i)."""
        if not 0 <= index <= nvars:
            raise IndexError(f"variable index {index} out of range for nvars={nvars}")
        m = [0] * (nvars + 1)
        m[index] = 1
        return cls._raw({tuple(m): Fraction(1)}, nvars)

    @classmethod
    def x(cls, i: int, nvars: int) -> "Polynomial":
        if not 1 <= i <= nvars:
            raise IndexError(f"x{i} out of range for nvars={nvars}")
        return cls.var(i, nvars)

    @classmethod
    def t(cls, nvars: int) -> "Polynomial":
        return cls.var(0, nvars)

    # -- basic accessors --------------------------------------------------

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    @property
    def nvars(self) -> int:
        return self._nvars

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    def is_zero(self) -> bool:
        return not self._terms

    def coeff(self, m: Monomial) -> Fraction:
        return self._terms.get(tuple(m), Fraction(0))

    def degree(self) -> int:
        """Total degree; the zero polynomial has degree 0."""
        return max((sum(m) for m in self._terms), default=0)

    def degree_x(self) -> int:
        """Total degree in x1..xn, ignoring t."""
        return max((sum(m) - m[0] for m in self._terms), default=0)

    def degree_t(self) -> int:
        return max((m[0] for m in self._terms), default=0)

    def has_t(self) -> bool:
        return any(m[0] for m in self._terms)

    def sorted_terms(self, descending: bool = True) -> list:
        return sorted(self._terms.items(), key=lambda mc: grlex_key(mc[0]), reverse=descending)

    # -- arithmetic -------------------------------------------------------

    def _check(self, other: "Polynomial") -> None:
        if self._nvars != other._nvars:
            raise DimensionError(f"nvars mismatch: {self._nvars} vs {other._nvars}")

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        if isinstance(other, (int, Rational)):
            return Polynomial.constant(other, self._nvars)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return Polynomial._raw(out, self._nvars)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw({m: -c for m, c in self._terms.items()}, self._nvars)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, factor: Scalar) -> "Polynomial":
        factor = Fraction(factor)
        if not factor:
            return Polynomial.zero(self._nvars)
        return Polynomial._raw({m: c * factor for m, c in self._terms.items()}, self._nvars)

    def __mul__(self, other):
        if isinstance(other, (int, Rational)) and not isinstance(other, Polynomial):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Polynomial._raw(_mul_terms(self._terms, other._terms, self._nvars + 1), self._nvars)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __pow__(self, k: int) -> "Polynomial":
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a nonnegative integer")
        result = Polynomial.constant(1, self._nvars)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self._nvars == other._nvars and self._terms == other._terms
        if isinstance(other, (int, Rational)):
            return self == Polynomial.constant(other, self._nvars)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self._nvars, frozenset(self._terms.items())))
        return self._hash

    # -- calculus and substitution ---------------------------------------

    def diff(self, index: int) -> "Polynomial":
        return differentiate(self, index)

    def subs_t(self, value: Scalar) -> "Polynomial":
        """Fix t to an exact value, returning a t-free polynomial."""
        value = Fraction(value)
        out: dict = {}
        for m, c in self._terms.items():
            key = (0,) + m[1:]
            s = out.get(key, 0) + c * value ** m[0]
            if s:
                out[key] = s
            else:
                out.pop(key, None)
        return Polynomial._raw(out, self._nvars)

    def coefficients_in_t(self) -> dict:
        """Split into ``{power of t: t-free polynomial}``."""
        groups: dict = {}
        for m, c in self._terms.items():
            groups.setdefault(m[0], {})[(0,) + m[1:]] = c
        return {a: Polynomial._raw(g, self._nvars) for a, g in sorted(groups.items())}

    def __call__(self, *point):
        return evaluate(self, point)

    def __repr__(self) -> str:
        return f"Polynomial({self.to_string()!r}, nvars={self._nvars})"

    def to_string(self) -> str:
        if not self._terms:
            return "0"
        names = ["t"] + [f"x{i}" for i in range(1, self._nvars + 1)]
        parts = []
        for m, c in self.sorted_terms():
            factors = []
            for name, e in zip(names, m):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            mono = "*".join(factors)
            mag = abs(c)
            if not mono:
                body = str(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{mag}*{mono}"
            sign = "-" if c < 0 else "+"
            parts.append((sign, body))
        first_sign, first = parts[0]
        text = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text

    __str__ = to_string


def _mul_terms(a: dict, b: dict, width: int) -> dict:
    """Exact product of two term maps.

    Monomials are packed into single integers (fixed bit fields per slot) and
    coefficients are scaled to integers over a common denominator, so the inner
    loop does only integer additions and multiplications.
    """
    if not a or not b:
        return {}
    if len(a) > len(b):
        a, b = b, a
    max_a = [max(m[j] for m in a) for j in range(width)]
    max_b = [max(m[j] for m in b) for j in range(width)]
    bits = max(1, max((x + y).bit_length() for x, y in zip(max_a, max_b)))
    shifts = [bits * j for j in range(width)]

    def pack(m):
        key = 0
        for e, s in zip(m, shifts):
            key |= e << s
        return key

    den_a = math.lcm(*(c.denominator for c in a.values()))
    den_b = math.lcm(*(c.denominator for c in b.values()))
    ia = [(pack(m), c.numerator * (den_a // c.denominator)) for m, c in a.items()]
    ib = [(pack(m), c.numerator * (den_b // c.denominator)) for m, c in b.items()]

    acc: dict = {}
    get = acc.get
    for ka, ca in ia:
        for kb, cb in ib:
            k = ka + kb
            acc[k] = get(k, 0) + ca * cb

    den = den_a * den_b
    mask = (1 << bits) - 1
    out = {}
    for k, v in acc.items():
        if v:
            out[tuple((k >> s) & mask for s in shifts)] = Fraction(v, den)
    return out


# -- module-level operations -------------------------------------------------


def add(a: Polynomial, b: Polynomial) -> Polynomial:
    a._check(b)
    return a + b


def mul(a: Polynomial, b: Polynomial) -> Polynomial:
    a._check(b)
    return a * b


def compose(p: Polynomial, subst: Sequence[Polynomial]) -> Polynomial:
    """Substitute polynomials for the variables of ``p``.

    ``subst`` holds either one polynomial per slot of ``p`` (``nvars + 1``
    entries, slot 0 replacing t) or one per x-variable (``nvars`` entries), in
    which case t maps to itself.  All substitutes must share one variable space.
    """
    subst = list(subst)
    if not subst:
        raise DimensionError("empty substitution")
    target = subst[0].nvars
    for s in subst:
        if s.nvars != target:
            raise DimensionError("substitutes live in different variable spaces")
    if len(subst) == p.nvars:
        if p.has_t() and target != p.nvars:
            raise DimensionError("t cannot map to itself across variable spaces")
        subst = [Polynomial.t(target)] + subst
    elif len(subst) != p.nvars + 1:
        raise DimensionError(
            f"substitution has {len(subst)} entries, expected {p.nvars} or {p.nvars + 1}"
        )

    powers: list = [{0: Polynomial.constant(1, target), 1: s} for s in subst]

    def power(j: int, e: int) -> Polynomial:
        cache = powers[j]
        if e not in cache:
            cache[e] = power(j, e // 2) * power(j, e - e // 2)
        return cache[e]

    # products of prefixes are shared between terms with a common exponent prefix
    prefix_cache: dict = {(): Polynomial.constant(1, target)}

    def prefix(m: tuple) -> Polynomial:
        if m not in prefix_cache:
            head = prefix(m[:-1])
            e = m[-1]
            prefix_cache[m] = head if e == 0 else head * power(len(m) - 1, e)
        return prefix_cache[m]

    acc: dict = {}
    for m, c in p.sorted_terms(descending=False):
        for mm, cc in prefix(m)._terms.items():
            s = acc.get(mm, 0) + c * cc
            if s:
                acc[mm] = s
            else:
                acc.pop(mm, None)
    return Polynomial._raw(acc, target)


def integrate_t(p: Polynomial, lo: Scalar, hi: Scalar) -> Polynomial:
    """Definite integral over t in ``[lo, hi]``; the result is t-free."""
    lo, hi = Fraction(lo), Fraction(hi)
    if lo > hi:
        raise ValueError("integration bounds must satisfy lo <= hi")
    out: dict = {}
    for m, c in p._terms.items():
        e = m[0] + 1
        w = c * (hi**e - lo**e) / e
        key = (0,) + m[1:]
        s = out.get(key, 0) + w
        if s:
            out[key] = s
        else:
            out.pop(key, None)
    return Polynomial._raw(out, p.nvars)


def indefinite_integrate_t(p: Polynomial) -> Polynomial:
    """Antiderivative in t vanishing at t = 0."""
    out = {}
    for m, c in p._terms.items():
        e = m[0] + 1
        out[(e,) + m[1:]] = c / e
    return Polynomial._raw(out, p.nvars)


def differentiate(p: Polynomial, index: int) -> Polynomial:
    """Partial derivative with respect to slot ``index`` (0 is t)."""
    if not 0 <= index <= p.nvars:
        raise IndexError(f"variable index {index} out of range for nvars={p.nvars}")
    out = {}
    for m, c in p._terms.items():
        e = m[index]
        if e:
            mm = list(m)
            mm[index] = e - 1
            out[tuple(mm)] = c * e
    return Polynomial._raw(out, p.nvars)


def gradient(p: Polynomial) -> list:
    """Partial derivatives with respect to x1..xn."""
    return [differentiate(p, i) for i in range(1, p.nvars + 1)]


def evaluate(p: Polynomial, point: Sequence):
    """Evaluate at a point.

    ``point`` has ``nvars`` entries (x only; ``p`` must then be t-free) or
    ``nvars + 1`` entries with t first.  Rational inputs give an exact
    :class:`Fraction`; floats give a float.
    """
    point = list(point)
    if len(point) == p.nvars:
        if p.has_t():
            raise DimensionError("polynomial depends on t; pass (t, x1, ..., xn)")
        point = [0] + point
    elif len(point) != p.nvars + 1:
        raise DimensionError(f"point has {len(point)} entries, expected {p.nvars} or {p.nvars + 1}")
    exact = all(isinstance(v, (int, Rational)) for v in point)
    if exact:
        point = [Fraction(v) for v in point]
    total = Fraction(0) if exact else 0.0
    for m, c in p._terms.items():
        term = c if exact else float(c)
        for v, e in zip(point, m):
            if e:
                term *= v**e
        total += term
    return total


def numeric(polys: Sequence[Polynomial]) -> Callable[[np.ndarray], np.ndarray]:
    """Compile polynomials into a vectorized float evaluator.

    The returned function maps an array of points with shape ``(m, nvars + 1)``
    (t first) to an array of shape ``(m, len(polys))``.
    """
    polys = list(polys)
    if not polys:
        raise ValueError("nothing to compile")
    width = polys[0].nvars + 1
    monos = sorted({m for p in polys for m in p._terms}, key=grlex_key)
    index = {m: i for i, m in enumerate(monos)}
    exps = np.array(monos, dtype=np.int64).reshape(len(monos), width)
    coef = np.zeros((len(monos), len(polys)))
    for j, p in enumerate(polys):
        for m, c in p._terms.items():
            coef[index[m], j] = float(c)
    max_e = exps.max(axis=0) if len(monos) else np.zeros(width, dtype=np.int64)

    def fn(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != width:
            raise DimensionError(f"points have {points.shape[1]} columns, expected {width}")
        if not len(monos):
            return np.zeros((points.shape[0], len(polys)))
        # bound the (points x monomials) work array to ~2M entries
        chunk = max(1, 2_000_000 // len(monos))
        out = np.empty((points.shape[0], len(polys)))
        for lo in range(0, points.shape[0], chunk):
            pts = points[lo : lo + chunk]
            vals = np.ones((pts.shape[0], len(monos)))
            for j in range(width):
                if max_e[j] == 0:
                    continue
                table = pts[:, j : j + 1] ** np.arange(max_e[j] + 1)
                vals *= table[:, exps[:, j]]
            out[lo : lo + chunk] = vals @ coef
        return out

    return fn


# -- vector fields -----------------------------------------------------------


@dataclass(frozen=True)
class VectorField:
    """Polynomial vector field ``x' = f(x)`` with ``f(0) = 0``."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ValueError("a vector field needs at least one component")
        n = len(comps)
        for i, c in enumerate(comps, start=1):
            if c.nvars != n:
                raise DimensionError(f"component {i} has nvars={c.nvars}, field has n={n}")
            if c.has_t():
                raise ValueError(f"component {i} depends on t")
            if c.coeff((0,) * (n + 1)):
                raise ValueError(f"component {i} has a nonzero constant term: f(0) != 0")

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def q(self) -> int:
        return max(c.degree() for c in self.components)

    def __getitem__(self, i: int) -> Polynomial:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def jacobian(self) -> list:
        """Symbolic Jacobian as a list of rows."""
        return [gradient(c) for c in self.components]

    def numeric(self) -> Callable[[np.ndarray], np.ndarray]:
        """Vectorized evaluator mapping ``(m, n)`` states to ``(m, n)`` rates."""
        fn = numeric(self.components)

        def rhs(x: np.ndarray) -> np.ndarray:
            x = np.atleast_2d(x)
            return fn(np.hstack([np.zeros((x.shape[0], 1)), x]))

        return rhs

    def numeric_jacobian(self) -> Callable[[np.ndarray], np.ndarray]:
        """Vectorized Jacobian mapping ``(m, n)`` states to ``(m, n, n)``."""
        n = self.n
        fn = numeric([d for row in self.jacobian() for d in row])

        def jac(x: np.ndarray) -> np.ndarray:
            x = np.atleast_2d(x)
            flat = fn(np.hstack([np.zeros((x.shape[0], 1)), x]))
            return flat.reshape(x.shape[0], n, n)

        return jac

    def to_text(self) -> str:
        return "\n".join(f"x{i}' = {c.to_string()}" for i, c in enumerate(self.components, start=1))


# -- parsing -----------------------------------------------------------------


class ParseError(ValueError):
    """Syntax error in vector-field text, with a 1-based line and column."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} at line {line}, column {col}")
        self.line = line
        self.col = col


_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<lhs>x(?P<lhs_i>\d+)\s*')
  | (?P<var>x(?P<var_i>\d+))
  | (?P<op>[-+*/^()=;])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        col = pos - line_start + 1
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind in ("lhs_i", "var_i"):
            kind = "lhs" if m.group("lhs") else "var"
        if kind == "nl":
            tokens.append(("sep", "\n", line, col))
            line += 1
            line_start = m.end()
        elif kind == "lhs":
            tokens.append(("lhs", int(m.group("lhs_i")), line, col))
        elif kind == "var":
            tokens.append(("var", int(m.group("var_i")), line, col))
        elif kind == "num":
            tokens.append(("num", Fraction(m.group("num")), line, col))
        elif kind == "op":
            tok = m.group("op")
            tokens.append(("sep", tok, line, col) if tok == ";" else ("op", tok, line, col))
        pos = m.end()
    tokens.append(("eof", None, line, pos - line_start + 1))
    return tokens


class _Parser:
    # expr   := term (('+'|'-') term)*
    # term   := unary (('*'|'/') unary)*
    # unary  := ('+'|'-') unary | power
    # power  := atom ('^' integer)?
    # atom   := number | variable | '(' expr ')'

    def __init__(self, tokens: list):
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok=None):
        tok = tok or self.peek()
        return ParseError(message, tok[2], tok[3])

    def expect(self, value: str):
        tok = self.next()
        if tok[0] != "op" or tok[1] != value:
            raise self.error(f"expected {value!r}", tok)
        return tok

    def statements(self) -> list:
        out = []
        while True:
            while self.peek()[0] == "sep":
                self.next()
            if self.peek()[0] == "eof":
                return out
            tok = self.next()
            if tok[0] != "lhs":
                raise self.error("expected a statement of the form x<i>' = <expr>", tok)
            self.expect("=")
            expr = self.expr()
            if self.peek()[0] not in ("sep", "eof"):
                raise self.error("unexpected token after expression")
            out.append((tok, expr))

    # expression nodes are tuples evaluated once n is known
    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.next()[1]
            node = (op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            tok = self.next()
            node = (tok[1], node, self.unary(), tok)
        return node

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] in "+-":
            self.next()
            inner = self.unary()
            return ("neg", inner) if tok[1] == "-" else inner
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.next()
            tok = self.next()
            if tok[0] != "num" or tok[1].denominator != 1 or tok[1] < 0:
                raise self.error("exponent must be a nonnegative integer literal", tok)
            return ("^", base, int(tok[1]))
        return base

    def atom(self):
        tok = self.next()
        if tok[0] == "num":
            return ("num", tok[1])
        if tok[0] == "var":
            return ("var", tok[1], tok)
        if tok[0] == "op" and tok[1] == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise self.error("expected a number, variable or '('", tok)


def _build(node, n: int) -> Polynomial:
    kind = node[0]
    if kind == "num":
        return Polynomial.constant(node[1], n)
    if kind == "var":
        i, tok = node[1], node[2]
        if not 1 <= i <= n:
            raise ParseError(f"variable x{i} outside x1..x{n}", tok[2], tok[3])
        return Polynomial.x(i, n)
    if kind == "neg":
        return -_build(node[1], n)
    if kind == "^":
        return _build(node[1], n) ** node[2]
    a, b = _build(node[1], n), _build(node[2], n)
    if kind == "+":
        return a + b
    if kind == "-":
        return a - b
    if kind == "*":
        return a * b
    if kind == "/":
        if b.degree() > 0 or b.is_zero():
            tok = node[3]
            raise ParseError("division only by a nonzero constant", tok[2], tok[3])
        return a.scale(1 / b.coeff((0,) * (n + 1)))
    raise AssertionError(kind)


def parse_system(text: str) -> VectorField:
    """Parse ``x<i>' = <expr>`` statements into a :class:`VectorField`.

    Statements are separated by ``;`` or newlines and ``#`` starts a comment.
    Decimal literals are read as exact rationals (``2.1`` is ``21/10``).
    """
    stmts = _Parser(_tokenize(text)).statements()
    if not stmts:
        raise ParseError("no equations found", 1, 1)
    n = len(stmts)
    seen: dict = {}
    for tok, _ in stmts:
        i = tok[1]
        if i in seen:
            raise ParseError(f"x{i}' defined twice", tok[2], tok[3])
        if not 1 <= i <= n:
            raise ParseError(f"x{i}' outside x1..x{n} for a {n}-equation system", tok[2], tok[3])
        seen[i] = tok
    comps = [None] * n
    for tok, expr in stmts:
        poly = _build(expr, n)
        if poly.coeff((0,) * (n + 1)):
            raise ParseError(f"x{tok[1]}' has a nonzero constant term: f(0) != 0", tok[2], tok[3])
        comps[tok[1] - 1] = poly
    return VectorField(tuple(comps))


def poly_from_text(text: str, nvars: int) -> Polynomial:
    """Parse a single expression in x1..x_nvars (no t)."""
    tokens = _tokenize(text.strip())
    parser = _Parser(tokens)
    node = parser.expr()
    if parser.peek()[0] != "eof":
        raise parser.error("unexpected trailing input")
    return _build(node, nvars)


def vector_field(exprs: Iterable[str]) -> VectorField:
    """Build a field from one expression string per component."""
    exprs = list(exprs)
    return parse_system("\n".join(f"x{i}' = {e}" for i, e in enumerate(exprs, start=1)))

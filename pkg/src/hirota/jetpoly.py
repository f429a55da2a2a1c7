"""Exact differential polynomials over the jet space of two fields ``u`` and ``v``.

Every variable is a small tuple of ints so that monomials sort and hash
cheaply:

* jet coordinates ``(field, n_t, n_1, n_2)`` with ``field`` 0 for ``u`` and 1
  for ``v``;
* explicit coordinates ``(2, i)`` for ``z_i``;
* ring parameters ``(3, k)`` indexing ``JetRing.params``.

A monomial is a tuple of ``(variable, exponent)`` pairs sorted by variable,
and a polynomial is a dict from monomials to nonzero ``Fraction``
coefficients.  Plain tuple ordering is then a total, deterministic order on
variables with jets of ``u`` first, jets of ``v`` next, then ``z``, then
parameters.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Iterable, Mapping, NamedTuple

from .errors import ConfigurationError, CycleError, ParseError

__all__ = [
    "Axis",
    "Field",
    "JetCoordinate",
    "ZVar",
    "ParamVar",
    "Monomial",
    "JetRing",
    "JetPolynomial",
    "DEFAULT_RING",
    "poly_arithmetic",
    "total_derivative",
    "substitute",
    "replace_variables",
]


class Field(IntEnum):
    U = 0
    V = 1


class Axis(IntEnum):
    T = 0
    Z1 = 1
    Z2 = 2


class JetCoordinate(NamedTuple):
    field: int
    nt: int = 0
    n1: int = 0
    n2: int = 0

    @property
    def order(self) -> tuple[int, int, int]:
        return (self.nt, self.n1, self.n2)

    def prolong(self, axis: int, times: int = 1) -> "JetCoordinate":
        if times < 0:
            raise ValueError("prolongation count must be non-negative")
        idx = [self.nt, self.n1, self.n2]
        idx[axis] += times
        return JetCoordinate(self.field, *idx)

    def __str__(self) -> str:
        return f"{'uv'[self.field]}[{self.nt},{self.n1},{self.n2}]"


class ZVar(NamedTuple):
    tag: int
    index: int

    def __str__(self) -> str:
        return f"z{self.index}"


class ParamVar(NamedTuple):
    tag: int
    index: int


Z1 = ZVar(2, 1)
Z2 = ZVar(2, 2)


def _is_jet(var) -> bool:
    return var[0] < 2


@lru_cache(maxsize=1 << 16)
def _prolong(var, axis: int) -> JetCoordinate:
    idx = [var[1], var[2], var[3]]
    idx[axis] += 1
    return JetCoordinate(var[0], *idx)


@lru_cache(maxsize=1 << 18)
def _mono_mul(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    acc = dict(a)
    for var, e in b:
        acc[var] = acc.get(var, 0) + e
    return tuple(sorted(acc.items()))


def _mono_drop(mono: tuple, i: int) -> tuple:
    var, e = mono[i]
    if e == 1:
        return mono[:i] + mono[i + 1:]
    return mono[:i] + ((var, e - 1),) + mono[i + 1:]


@lru_cache(maxsize=1 << 18)
def _mono_total_derivative(mono: tuple, axis: int) -> tuple:
    out = []
    for i, (var, e) in enumerate(mono):
        tag = var[0]
        if tag < 2:
            rest = _mono_drop(mono, i)
            out.append((e, _mono_mul(rest, ((_prolong(var, axis), 1),))))
        elif tag == 2 and var[1] == axis:
            out.append((e, _mono_drop(mono, i)))
    return tuple(out)


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"exact rational expected, got {type(x).__name__}")


@dataclass(frozen=True)
class Monomial:
    """Read-only view of one stored term."""

    coeff: Fraction
    jet_powers: Mapping[JetCoordinate, int]
    z_powers: tuple[int, int]
    param_powers: Mapping[str, int]


class JetRing:
    """Parameter-symbol set shared by a family of polynomials.

    Two rings are the same ring iff their parameter tuples agree.
    """

    __slots__ = ("params", "_index")

    def __init__(self, params: Iterable[str] = ("lam", "s0")):
        self.params = tuple(params)
        if len(set(self.params)) != len(self.params):
            raise ConfigurationError("duplicate parameter names")
        for name in self.params:
            if not re.fullmatch(r"[A-Za-z_]\w*", name) or re.fullmatch(r"z[12]", name):
                raise ConfigurationError(f"invalid parameter name {name!r}")
        self._index = {name: k for k, name in enumerate(self.params)}

    def __eq__(self, other):
        return isinstance(other, JetRing) and self.params == other.params

    def __hash__(self):
        return hash(self.params)

    def __repr__(self):
        return f"JetRing({self.params!r})"

    def param_var(self, name: str) -> ParamVar:
        try:
            return ParamVar(3, self._index[name])
        except KeyError:
            raise ConfigurationError(f"parameter {name!r} not in ring {self.params}") from None

    # constructors -------------------------------------------------------
    def const(self, value) -> "JetPolynomial":
        c = _as_fraction(value)
        return JetPolynomial._raw(self, {(): c} if c else {})

    def zero(self) -> "JetPolynomial":
        return JetPolynomial._raw(self, {})

    def one(self) -> "JetPolynomial":
        return self.const(1)

    def var(self, var, power: int = 1) -> "JetPolynomial":
        return JetPolynomial._raw(self, {((var, power),): Fraction(1)} if power else {(): Fraction(1)})

    def jet(self, field: int, nt: int = 0, n1: int = 0, n2: int = 0) -> "JetPolynomial":
        return self.var(JetCoordinate(int(field), nt, n1, n2))

    def u(self, nt: int = 0, n1: int = 0, n2: int = 0) -> "JetPolynomial":
        return self.jet(Field.U, nt, n1, n2)

    def v(self, nt: int = 0, n1: int = 0, n2: int = 0) -> "JetPolynomial":
        return self.jet(Field.V, nt, n1, n2)

    def z(self, i: int) -> "JetPolynomial":
        if i not in (1, 2):
            raise ValueError("explicit variables are z1 and z2")
        return self.var(ZVar(2, i))

    def param(self, name: str) -> "JetPolynomial":
        return self.var(self.param_var(name))

    def parse(self, text: str) -> "JetPolynomial":
        return _parse(self, text)

    def format_var(self, var) -> str:
        tag = var[0]
        if tag < 2:
            return f"{'uv'[tag]}[{var[1]},{var[2]},{var[3]}]"
        if tag == 2:
            return f"z{var[1]}"
        return self.params[var[1]]


DEFAULT_RING = JetRing(("lam", "s0"))


class JetPolynomial:
    """Immutable exact polynomial in jet coordinates, ``z1, z2`` and parameters."""

    __slots__ = ("ring", "_terms", "_hash")

    def __init__(self, ring: JetRing = DEFAULT_RING, terms: Mapping | None = None):
        clean = {}
        for mono, c in (terms or {}).items():
            c = _as_fraction(c)
            if c:
                mono = tuple(sorted((var, e) for var, e in mono if e))
                clean[mono] = clean.get(mono, 0) + c
        self.ring = ring
        self._terms = {m: c for m, c in clean.items() if c}
        self._hash = None

    @classmethod
    def _raw(cls, ring: JetRing, terms: dict) -> "JetPolynomial":
        obj = cls.__new__(cls)
        obj.ring = ring
        obj._terms = terms
        obj._hash = None
        return obj

    # coercion -----------------------------------------------------------
    def _coerce(self, other) -> "JetPolynomial":
        if isinstance(other, JetPolynomial):
            if other.ring is not self.ring and other.ring != self.ring:
                raise ConfigurationError(
                    f"mismatched rings {self.ring.params} and {other.ring.params}")
            return other
        try:
            return self.ring.const(other)
        except TypeError:
            return NotImplemented

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not other._terms:
            return self
        if not self._terms:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return JetPolynomial._raw(self.ring, out)

    __radd__ = __add__

    def __neg__(self):
        return JetPolynomial._raw(self.ring, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = Fraction(other)
            if not c:
                return self.ring.zero()
            return JetPolynomial._raw(self.ring, {m: v * c for m, v in self._terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict = {}
        for ma, ca in self._terms.items():
            for mb, cb in other._terms.items():
                m = _mono_mul(ma, mb)
                s = out.get(m, 0) + ca * cb
                if s:
                    out[m] = s
                else:
                    out.pop(m, None)
        return JetPolynomial._raw(self.ring, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        c = _as_fraction(other)
        if not c:
            raise ZeroDivisionError("division of a jet polynomial by zero")
        return self * (1 / c)

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("non-negative integer powers only")
        result = self.ring.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # comparison ---------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, JetPolynomial):
            return self.ring == other.ring and self._terms == other._terms
        try:
            c = _as_fraction(other)
        except TypeError:
            return NotImplemented
        if not c:
            return not self._terms
        return self._terms == {(): c}

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ring, frozenset(self._terms.items())))
        return self._hash

    def __bool__(self):
        return bool(self._terms)

    # inspection ---------------------------------------------------------
    def __len__(self):
        return len(self._terms)

    def terms(self) -> list[tuple[tuple, Fraction]]:
        """Canonically sorted ``(monomial, coefficient)`` list."""
        return sorted(self._terms.items())

    def items(self):
        return self._terms.items()

    def monomials(self) -> list[Monomial]:
        out = []
        for mono, c in self.terms():
            jets, zp, pp = {}, [0, 0], {}
            for var, e in mono:
                if var[0] < 2:
                    jets[JetCoordinate(*var)] = e
                elif var[0] == 2:
                    zp[var[1] - 1] = e
                else:
                    pp[self.ring.params[var[1]]] = e
            out.append(Monomial(c, jets, (zp[0], zp[1]), pp))
        return out

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and () in self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get((), Fraction(0))

    def variables(self) -> set:
        return {var for mono in self._terms for var, _ in mono}

    def jet_coordinates(self) -> set[JetCoordinate]:
        return {JetCoordinate(*var) for var in self.variables() if var[0] < 2}

    def has_explicit_z(self) -> bool:
        return any(var[0] == 2 for var in self.variables())

    def degree(self, var) -> int:
        return max((e for mono in self._terms for v, e in mono if v == var), default=0)

    def coefficient(self, var, power: int) -> "JetPolynomial":
        """Coefficient of ``var**power`` (as a polynomial free of ``var``)."""
        out = {}
        for mono, c in self._terms.items():
            e = 0
            rest = []
            for v, k in mono:
                if v == var:
                    e = k
                else:
                    rest.append((v, k))
            if e == power:
                out[tuple(rest)] = c
        return JetPolynomial._raw(self.ring, out)

    def map_coefficients(self, fn) -> "JetPolynomial":
        out = {}
        for m, c in self._terms.items():
            c2 = fn(c)
            if c2:
                out[m] = c2
        return JetPolynomial._raw(self.ring, out)

    # calculus -----------------------------------------------------------
    def total_derivative(self, axis: int) -> "JetPolynomial":
        axis = int(axis)
        out: dict = {}
        for mono, c in self._terms.items():
            for k, m in _mono_total_derivative(mono, axis):
                s = out.get(m, 0) + k * c
                if s:
                    out[m] = s
                else:
                    out.pop(m, None)
        return JetPolynomial._raw(self.ring, out)

    def D(self, *axes: int) -> "JetPolynomial":
        p = self
        for a in axes:
            p = p.total_derivative(a)
        return p

    def Dword(self, word: tuple[int, int, int]) -> "JetPolynomial":
        p = self
        for axis, n in enumerate(word):
            for _ in range(n):
                p = p.total_derivative(axis)
        return p

    def diff(self, var) -> "JetPolynomial":
        """Partial derivative with respect to a single variable."""
        out: dict = {}
        for mono, c in self._terms.items():
            for i, (v, e) in enumerate(mono):
                if v == var:
                    m = _mono_drop(mono, i)
                    out[m] = out.get(m, 0) + e * c
                    break
        return JetPolynomial._raw(self.ring, {m: c for m, c in out.items() if c})

    def substitute(self, rules: Mapping, prolong: bool = False) -> "JetPolynomial":
        return substitute(self, rules, prolong)

    def evaluate(self, env: Mapping, params: Mapping[str, object] | None = None):
        """Evaluate numerically; ``env`` maps variables to numbers or arrays."""
        params = params or {}
        total = 0
        for mono, c in self._terms.items():
            term = float(c)
            for var, e in mono:
                if var[0] == 3:
                    name = self.ring.params[var[1]]
                    if name not in params:
                        raise KeyError(f"no value bound for parameter {name!r}")
                    val = params[name]
                else:
                    val = env[var]
                term = term * (val if e == 1 else val ** e)
            total = total + term
        return total

    # text ---------------------------------------------------------------
    def __str__(self):
        if not self._terms:
            return "0"
        pieces = []
        for mono, c in self.terms():
            neg = c < 0
            a = -c if neg else c
            factors = [
                self.ring.format_var(var) + (f"^{e}" if e > 1 else "") for var, e in mono
            ]
            if a != 1 or not factors:
                factors.insert(0, str(a))
            body = "*".join(factors)
            if not pieces:
                pieces.append(("-" if neg else "") + body)
            else:
                pieces.append((" - " if neg else " + ") + body)
        return "".join(pieces)

    def __repr__(self):
        return f"JetPolynomial({str(self)!r})"


# module-level operation surface -----------------------------------------

def poly_arithmetic(a: JetPolynomial, b: JetPolynomial, op: str) -> JetPolynomial:
    op = op.upper()
    if not isinstance(b, JetPolynomial) or a.ring != b.ring:
        raise ConfigurationError("operands must share one ring instance")
    if op == "ADD":
        return a + b
    if op == "SUB":
        return a - b
    if op == "MUL":
        return a * b
    raise ValueError(f"unknown operation {op!r}")


def total_derivative(p: JetPolynomial, axis: int) -> JetPolynomial:
    return p.total_derivative(axis)


def _resolve_key(ring: JetRing, key):
    if isinstance(key, str):
        if re.fullmatch(r"z[12]", key):
            return ZVar(2, int(key[1]))
        return ring.param_var(key)
    if isinstance(key, JetPolynomial):
        (mono, c), = key.items()
        if c != 1 or len(mono) != 1 or mono[0][1] != 1:
            raise ValueError("substitution key must be a single variable")
        return mono[0][0]
    return tuple(key)


def _is_prolongation(var, key) -> bool:
    return (var[0] < 2 and key[0] < 2 and var[0] == key[0]
            and var[1] >= key[1] and var[2] >= key[2] and var[3] >= key[3])


def substitute(p: JetPolynomial, rules: Mapping, prolong: bool = False,
               max_passes: int = 64) -> JetPolynomial:
    """Replace variables by polynomials, iterated to a fixpoint.

    With ``prolong=True`` a jet key ``w_A`` also rewrites every ``w_{A+B}``
    to ``D^B`` of the rule's right side.
    """
    ring = p.ring
    table = {}
    for key, rhs in rules.items():
        var = _resolve_key(ring, key)
        if var in table:
            raise ValueError(f"duplicate substitution key {key!r}")
        rhs = rhs if isinstance(rhs, JetPolynomial) else ring.const(rhs)
        if rhs.ring != ring:
            raise ConfigurationError("substitution right side over a different ring")
        table[var] = rhs
    jet_keys = sorted(k for k in table if k[0] < 2)
    for key, rhs in table.items():
        rv = rhs.variables()
        if key in rv or (prolong and key[0] < 2 and any(_is_prolongation(v, key) for v in rv)):
            raise CycleError(f"rule for {ring.format_var(key)} contains its own key")

    match_cache: dict = {}

    def replacement(var):
        if var in match_cache:
            return match_cache[var]
        rep = None
        if var in table:
            rep = table[var]
        elif prolong and var[0] < 2:
            best = None
            for key in jet_keys:
                if _is_prolongation(var, key):
                    gap = (var[1] - key[1]) + (var[2] - key[2]) + (var[3] - key[3])
                    if best is None or gap < best[0] or (gap == best[0] and key > best[1]):
                        best = (gap, key)
            if best is not None:
                key = best[1]
                rep = table[key].Dword((var[1] - key[1], var[2] - key[2], var[3] - key[3]))
        match_cache[var] = rep
        return rep

    current = p
    for _ in range(max_passes):
        hit = False
        acc: dict = {}
        for mono, c in current.items():
            reps = [(replacement(var), var, e) for var, e in mono]
            if all(r is None for r, _, _ in reps):
                acc[mono] = acc.get(mono, 0) + c
                continue
            hit = True
            term = ring.const(c)
            keep = []
            for r, var, e in reps:
                if r is None:
                    keep.append((var, e))
                else:
                    term = term * (r ** e)
            if keep:
                term = term * JetPolynomial._raw(ring, {tuple(keep): Fraction(1)})
            for m, tc in term.items():
                acc[m] = acc.get(m, 0) + tc
        if not hit:
            return current
        current = JetPolynomial._raw(ring, {m: c for m, c in acc.items() if c})
    raise CycleError("substitution did not reach a fixpoint")


def replace_variables(p: JetPolynomial, fn) -> JetPolynomial:
    """Single pass: every variable ``var`` with ``fn(var)`` not None is replaced by it."""
    ring = p.ring
    acc: dict = {}
    power_cache: dict = {}
    for mono, c in p.items():
        term = None
        keep = []
        for var, e in mono:
            r = fn(var)
            if r is None:
                keep.append((var, e))
                continue
            key = (var, e)
            pe = power_cache.get(key)
            if pe is None:
                pe = r ** e
                power_cache[key] = pe
            term = pe if term is None else term * pe
        if term is None:
            acc[mono] = acc.get(mono, 0) + c
            continue
        if keep:
            term = term * JetPolynomial._raw(ring, {tuple(keep): Fraction(1)})
        for m, tc in term.items():
            acc[m] = acc.get(m, 0) + tc * c
    return JetPolynomial._raw(ring, {m: v for m, v in acc.items() if v})


# parsing ----------------------------------------------------------------

_TERM_RE = re.compile(r"([+-]?)([^+-]+)")
_JET_RE = re.compile(r"([uv])\[(\d+),(\d+),(\d+)\](?:\^(\d+))?")
_Z_RE = re.compile(r"z([12])(?:\^(\d+))?")
_NUM_RE = re.compile(r"\d+(?:/\d+)?")
_NAME_RE = re.compile(r"([A-Za-z_]\w*)(?:\^(\d+))?")


def _parse(ring: JetRing, text: str) -> JetPolynomial:
    s = re.sub(r"\s+", "", text)
    if not s:
        raise ParseError("empty polynomial text")
    if s == "0":
        return ring.zero()
    pos = 0
    terms: dict = {}
    for m in _TERM_RE.finditer(s):
        if m.start() != pos:
            raise ParseError(f"unexpected text at {pos} in {text!r}")
        pos = m.end()
        sign = -1 if m.group(1) == "-" else 1
        coeff = Fraction(sign)
        acc: dict = {}
        for factor in m.group(2).split("*"):
            if _NUM_RE.fullmatch(factor):
                coeff *= Fraction(factor)
                continue
            if (j := _JET_RE.fullmatch(factor)):
                var = JetCoordinate(0 if j.group(1) == "u" else 1,
                                    int(j.group(2)), int(j.group(3)), int(j.group(4)))
                e = int(j.group(5) or 1)
            elif (z := _Z_RE.fullmatch(factor)):
                var, e = ZVar(2, int(z.group(1))), int(z.group(2) or 1)
            elif (n := _NAME_RE.fullmatch(factor)):
                if n.group(1) not in ring.params:
                    raise ParseError(f"unknown symbol {n.group(1)!r}")
                var, e = ring.param_var(n.group(1)), int(n.group(2) or 1)
            else:
                raise ParseError(f"cannot parse factor {factor!r}")
            acc[var] = acc.get(var, 0) + e
        mono = tuple(sorted((v, e) for v, e in acc.items() if e))
        terms[mono] = terms.get(mono, 0) + coeff
    if pos != len(s):
        raise ParseError(f"trailing text in {text!r}")
    return JetPolynomial._raw(ring, {m: c for m, c in terms.items() if c})

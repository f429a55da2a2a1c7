"""Linear total-differential operators with jet-polynomial coefficients.

An operator is stored as ``sum_a p_a D^a + sum_d Ninv_d o Q_d`` where ``D^a``
is a word ``(m_t, m_1, m_2)`` of commuting total derivatives with its
coefficient written on the left, and ``Ninv_d`` is the formal inverse of the
constant directional derivative ``nabla_d = d_1 D_1 + d_2 D_2``.

Nonlocal terms are kept in a normal form.  The direction is scaled so its
first nonzero component is 1, and every inner operator ``Q_d`` is reduced
modulo ``nabla_d o (local)``: all derivatives along the pivot axis (``D_1``
when ``d_1 != 0``, else ``D_2``) are peeled off with

    q D_p D^w = nabla_d o (q D^w) - nabla_d(q) D^w - d_o q D_o D^w,

so that ``Ninv_d o Q = X + Ninv_d o Q0`` with ``Q0`` free of ``D_p``.  The
decomposition is unique, which turns operator equality into a structural
comparison even when formal inverses are involved.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product
from math import comb
from typing import Callable, Mapping

from .errors import (
    ConfigurationError,
    NormalizationError,
    UnsupportedAdjointError,
    UnsupportedApplicationError,
)
from .jetpoly import DEFAULT_RING, JetPolynomial, JetRing

Word = tuple  # (m_t, m_1, m_2)
ID_WORD = (0, 0, 0)

__all__ = [
    "DiffOperator",
    "OperatorMatrix",
    "apply_operator",
    "compose_commutator",
    "formal_adjoint",
    "operator_equal",
    "normalize_direction",
]


def normalize_direction(c1, c2) -> tuple[tuple[Fraction, Fraction], Fraction]:
    """Return ``(d, scale)`` with ``nabla_c = scale * nabla_d`` and ``d`` pivot-normalized."""
    c1, c2 = Fraction(c1), Fraction(c2)
    if c1:
        return (Fraction(1), c2 / c1), c1
    if c2:
        return (Fraction(0), Fraction(1)), c2
    raise ValueError("direction vector (0, 0) has no inverse")


# dict-level helpers on local parts ---------------------------------------

def _acc(out: dict, w, p: JetPolynomial):
    cur = out.get(w)
    s = p if cur is None else cur + p
    if s:
        out[w] = s
    elif cur is not None:
        del out[w]


def _ladd(a: dict, b: dict, sign: int = 1) -> dict:
    out = dict(a)
    for w, p in b.items():
        _acc(out, w, p if sign == 1 else -p)
    return out


def _lscale(a: dict, c) -> dict:
    if not c:
        return {}
    return {w: p * c for w, p in a.items()}


def _lcompose(a: dict, b: dict) -> dict:
    out: dict = {}
    for wa, pa in a.items():
        for wb, qb in b.items():
            cache = {ID_WORD: qb}

            def deriv(g):
                if g in cache:
                    return cache[g]
                for ax in range(3):
                    if g[ax]:
                        prev = list(g)
                        prev[ax] -= 1
                        r = deriv(tuple(prev)).total_derivative(ax)
                        break
                cache[g] = r
                return r

            for g in product(range(wa[0] + 1), range(wa[1] + 1), range(wa[2] + 1)):
                dq = deriv(g)
                if not dq:
                    continue
                k = comb(wa[0], g[0]) * comb(wa[1], g[1]) * comb(wa[2], g[2])
                w = (wa[0] - g[0] + wb[0], wa[1] - g[1] + wb[1], wa[2] - g[2] + wb[2])
                _acc(out, w, pa * dq * k if k != 1 else pa * dq)
    return out


def _lapply(a: dict, p: JetPolynomial) -> JetPolynomial:
    total = p.ring.zero()
    cache = {ID_WORD: p}
    for w in sorted(a):
        q = cache.get(w)
        if q is None:
            q = p.Dword(w)
            cache[w] = q
        total = total + a[w] * q
    return total


def _ladjoint(a: dict, ring: JetRing) -> dict:
    out: dict = {}
    for w, p in a.items():
        sign = -1 if (w[0] + w[1] + w[2]) % 2 else 1
        piece = _lcompose({w: ring.one()}, {ID_WORD: p})
        out = _ladd(out, piece, sign)
    return out


def _nabla_apply(d, q: JetPolynomial) -> JetPolynomial:
    r = q.ring.zero()
    if d[0]:
        r = r + q.total_derivative(1) * d[0]
    if d[1]:
        r = r + q.total_derivative(2) * d[1]
    return r


def _commutes_with(a: dict, d) -> bool:
    return all(not _nabla_apply(d, p) for p in a.values())


def _reduce_inner(inner: dict, d) -> tuple[dict, dict]:
    """Split ``inner = nabla_d o X + Q0`` with ``Q0`` free of the pivot derivative."""
    pivot = 1 if d[0] else 2
    other = 3 - pivot
    d_other = d[other - 1]
    work = dict(inner)
    X: dict = {}
    while True:
        cands = [w for w in work if w[pivot]]
        if not cands:
            break
        w = max(cands, key=lambda w: (w[pivot], w))
        q = work.pop(w)
        w1 = list(w)
        w1[pivot] -= 1
        w1 = tuple(w1)
        _acc(X, w1, q)
        nq = _nabla_apply(d, q)
        if nq:
            _acc(work, w1, -nq)
        if d_other:
            w2 = list(w1)
            w2[other] += 1
            _acc(work, tuple(w2), q * (-d_other))
    return X, work


def _word_str(w) -> str:
    return f"D[{w[0]},{w[1]},{w[2]}]"


def _local_str(a: dict) -> str:
    if not a:
        return "0"
    pieces = []
    # lower order first; within an order D_t before D_1 before D_2
    for w in sorted(a, key=lambda w: (sum(w), tuple(-x for x in w))):
        p = a[w]
        if len(p) == 1:
            s = str(p)
            neg = s.startswith("-")
            body = s[1:] if neg else s
        else:
            neg, body = False, f"({p})"
        if w != ID_WORD:
            body = _word_str(w) if body == "1" else f"{body}*{_word_str(w)}"
        if not pieces:
            pieces.append(("-" if neg else "") + body)
        else:
            pieces.append((" - " if neg else " + ") + body)
    return "".join(pieces)


class DiffOperator:
    """Immutable linear differential operator with at most one formal-inverse layer."""

    __slots__ = ("ring", "local", "nonlocal_terms", "_hash")

    def __init__(self, ring: JetRing = DEFAULT_RING, local: Mapping | None = None,
                 nonlocal_terms: Mapping | None = None):
        self.ring = ring
        loc: dict = {}
        for w, p in (local or {}).items():
            _acc(loc, tuple(w), self._poly(p))
        nl: dict = {}
        for d, inner in (nonlocal_terms or {}).items():
            dn, scale = normalize_direction(*d)
            q: dict = {}
            for w, p in inner.items():
                _acc(q, tuple(w), self._poly(p) / scale)
            nl[dn] = _ladd(nl.get(dn, {}), q)
        self.local, self.nonlocal_terms = self._normalize(loc, nl)
        self._hash = None

    def _poly(self, p) -> JetPolynomial:
        if isinstance(p, JetPolynomial):
            if p.ring != self.ring:
                raise ConfigurationError("coefficient over a different ring")
            return p
        return self.ring.const(p)

    @staticmethod
    def _normalize(loc: dict, nl: dict) -> tuple[dict, dict]:
        out_nl = {}
        for d in sorted(nl):
            X, Q0 = _reduce_inner(nl[d], d)
            if X:
                loc = _ladd(loc, X)
            if Q0:
                out_nl[d] = Q0
        return loc, out_nl

    @classmethod
    def _raw(cls, ring, loc: dict, nl: dict) -> "DiffOperator":
        obj = cls.__new__(cls)
        obj.ring = ring
        obj.local, obj.nonlocal_terms = cls._normalize(loc, nl)
        obj._hash = None
        return obj

    # constructors -------------------------------------------------------
    @classmethod
    def zero(cls, ring: JetRing = DEFAULT_RING) -> "DiffOperator":
        return cls._raw(ring, {}, {})

    @classmethod
    def identity(cls, ring: JetRing = DEFAULT_RING) -> "DiffOperator":
        return cls._raw(ring, {ID_WORD: ring.one()}, {})

    @classmethod
    def multiplication(cls, p: JetPolynomial) -> "DiffOperator":
        return cls._raw(p.ring, {ID_WORD: p} if p else {}, {})

    @classmethod
    def derivative(cls, word, ring: JetRing = DEFAULT_RING, coeff=1) -> "DiffOperator":
        c = coeff if isinstance(coeff, JetPolynomial) else ring.const(coeff)
        return cls._raw(ring, {tuple(word): c} if c else {}, {})

    @classmethod
    def D(cls, axis: int, ring: JetRing = DEFAULT_RING) -> "DiffOperator":
        w = [0, 0, 0]
        w[axis] = 1
        return cls.derivative(tuple(w), ring)

    @classmethod
    def nabla(cls, c1, c2, ring: JetRing = DEFAULT_RING) -> "DiffOperator":
        return cls(ring, {(0, 1, 0): Fraction(c1), (0, 0, 1): Fraction(c2)})

    @classmethod
    def nabla_inv(cls, c1, c2, ring: JetRing = DEFAULT_RING) -> "DiffOperator":
        return cls(ring, {}, {(Fraction(c1), Fraction(c2)): {ID_WORD: ring.one()}})

    # inspection ---------------------------------------------------------
    @property
    def is_local(self) -> bool:
        return not self.nonlocal_terms

    def is_zero(self) -> bool:
        return not self.local and not self.nonlocal_terms

    def coefficient(self, word) -> JetPolynomial:
        if not self.is_local:
            raise UnsupportedApplicationError("coefficient lookup on a nonlocal operator")
        return self.local.get(tuple(word), self.ring.zero())

    def order(self) -> int:
        words = list(self.local) + [w for q in self.nonlocal_terms.values() for w in q]
        return max((sum(w) for w in words), default=0)

    def coefficients(self):
        yield from self.local.values()
        for q in self.nonlocal_terms.values():
            yield from q.values()

    def has_constant_coefficients(self) -> bool:
        return all(p.is_constant() for p in self.coefficients())

    # algebra ------------------------------------------------------------
    def _check(self, other: "DiffOperator"):
        if other.ring != self.ring:
            raise ConfigurationError("operators over different rings")

    def __add__(self, other):
        if not isinstance(other, DiffOperator):
            return NotImplemented
        self._check(other)
        nl = {d: dict(q) for d, q in self.nonlocal_terms.items()}
        for d, q in other.nonlocal_terms.items():
            nl[d] = _ladd(nl.get(d, {}), q)
        return DiffOperator._raw(self.ring, _ladd(self.local, other.local), nl)

    def __neg__(self):
        return DiffOperator._raw(
            self.ring, _lscale(self.local, -1),
            {d: _lscale(q, -1) for d, q in self.nonlocal_terms.items()})

    def __sub__(self, other):
        if not isinstance(other, DiffOperator):
            return NotImplemented
        return self + (-other)

    def __mul__(self, c):
        """Scale by an exact constant."""
        if isinstance(c, JetPolynomial):
            return DiffOperator.multiplication(c) @ self
        c = Fraction(c)
        return DiffOperator._raw(
            self.ring, _lscale(self.local, c),
            {d: _lscale(q, c) for d, q in self.nonlocal_terms.items()})

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1 / Fraction(c))

    def __matmul__(self, other: "DiffOperator") -> "DiffOperator":
        if not isinstance(other, DiffOperator):
            return NotImplemented
        self._check(other)
        loc = _lcompose(self.local, other.local)
        nl: dict = {}
        for d, Q in other.nonlocal_terms.items():
            if self.local:
                if not _commutes_with(self.local, d):
                    raise NormalizationError(
                        "variable-coefficient operator left of a formal inverse "
                        f"Ninv{tuple(map(str, d))} would nest inverses")
                nl[d] = _ladd(nl.get(d, {}), _lcompose(self.local, Q))
        for d, Q in self.nonlocal_terms.items():
            nl[d] = _ladd(nl.get(d, {}), _lcompose(Q, other.local))
            for d2, Q2 in other.nonlocal_terms.items():
                if d2 != d or not _commutes_with(Q, d2):
                    raise NormalizationError("product of two nonlocal terms does not reduce")
                X, M0 = _reduce_inner(_lcompose(Q, Q2), d)
                if M0:
                    raise NormalizationError("depth-2 formal inverse survives normalization")
                nl[d] = _ladd(nl[d], X)
        return DiffOperator._raw(self.ring, loc, nl)

    def commutator(self, other: "DiffOperator") -> "DiffOperator":
        return self @ other - other @ self

    def adjoint(self) -> "DiffOperator":
        loc = _ladjoint(self.local, self.ring)
        nl = {}
        for d, Q in self.nonlocal_terms.items():
            if not _commutes_with(Q, d):
                raise UnsupportedAdjointError(
                    "adjoint of a formal inverse composed with a variable-coefficient operator")
            nl[d] = _lscale(_ladjoint(Q, self.ring), -1)
        return DiffOperator._raw(self.ring, loc, nl)

    def apply(self, p: JetPolynomial, allow_annihilated: bool = False) -> JetPolynomial:
        """Apply to a jet polynomial.

        Nonlocal terms are rejected unless ``allow_annihilated`` is set and
        every inner operator sends ``p`` to zero.
        """
        if p.ring != self.ring:
            raise ConfigurationError("operand over a different ring")
        for d, Q in self.nonlocal_terms.items():
            if not (allow_annihilated and not _lapply(Q, p)):
                raise UnsupportedApplicationError(
                    f"cannot apply nonlocal term Ninv({d[0]},{d[1]})∘({_local_str(Q)}) symbolically")
        return _lapply(self.local, p)

    def clear(self, c1, c2) -> "DiffOperator":
        """Left-compose with ``nabla_c``; the result must be local."""
        out = DiffOperator.nabla(c1, c2, self.ring) @ self
        if not out.is_local:
            raise NormalizationError("clearing with nabla_c left a nonlocal remainder")
        return out

    def local_part(self) -> "DiffOperator":
        return DiffOperator._raw(self.ring, dict(self.local), {})

    def nonlocal_part(self) -> "DiffOperator":
        return DiffOperator._raw(self.ring, {}, {d: dict(q) for d, q in self.nonlocal_terms.items()})

    def map_coefficients(self, fn: Callable[[JetPolynomial], JetPolynomial]) -> "DiffOperator":
        loc: dict = {}
        for w, p in self.local.items():
            _acc(loc, w, fn(p))
        nl = {}
        for d, q in self.nonlocal_terms.items():
            inner: dict = {}
            for w, p in q.items():
                _acc(inner, w, fn(p))
            nl[d] = inner
        return DiffOperator._raw(self.ring, loc, nl)

    def map_words(self, fn: Callable) -> "DiffOperator":
        """Rewrite words of a local operator: ``fn(word) -> (sign, new_word)``."""
        if not self.is_local:
            raise UnsupportedApplicationError("word rewriting is defined for local operators only")
        loc: dict = {}
        for w, p in self.local.items():
            sign, w2 = fn(w)
            _acc(loc, tuple(w2), p * sign)
        return DiffOperator._raw(self.ring, loc, {})

    # comparison & text ----------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, DiffOperator):
            return NotImplemented
        return (self.ring == other.ring and self.local == other.local
                and self.nonlocal_terms == other.nonlocal_terms)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((
                frozenset(self.local.items()),
                frozenset((d, frozenset(q.items())) for d, q in self.nonlocal_terms.items())))
        return self._hash

    def __str__(self):
        parts = []
        if self.local or not self.nonlocal_terms:
            parts.append(_local_str(self.local))
        for d, q in self.nonlocal_terms.items():
            parts.append(f"Ninv({d[0]},{d[1]})∘({_local_str(q)})")
        return " + ".join(parts)

    def __repr__(self):
        return f"DiffOperator({str(self)!r})"


class OperatorMatrix:
    """2x2 matrix of operators sharing one ring."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        rows = tuple(tuple(r) for r in entries)
        if len(rows) != 2 or any(len(r) != 2 for r in rows):
            raise ValueError("operator matrices are 2x2")
        rings = {e.ring for r in rows for e in r}
        if len(rings) != 1:
            raise ConfigurationError("matrix entries over different rings")
        self.entries = rows

    @property
    def ring(self) -> JetRing:
        return self.entries[0][0].ring

    @classmethod
    def identity(cls, ring: JetRing = DEFAULT_RING) -> "OperatorMatrix":
        one, zero = DiffOperator.identity(ring), DiffOperator.zero(ring)
        return cls(((one, zero), (zero, one)))

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def __add__(self, other):
        return OperatorMatrix(
            [[self[i, j] + other[i, j] for j in range(2)] for i in range(2)])

    def __sub__(self, other):
        return OperatorMatrix(
            [[self[i, j] - other[i, j] for j in range(2)] for i in range(2)])

    def __neg__(self):
        return OperatorMatrix([[-self[i, j] for j in range(2)] for i in range(2)])

    def __matmul__(self, other):
        return OperatorMatrix([
            [self[i, 0] @ other[0, j] + self[i, 1] @ other[1, j] for j in range(2)]
            for i in range(2)])

    def adjoint(self) -> "OperatorMatrix":
        return OperatorMatrix([[self[j, i].adjoint() for j in range(2)] for i in range(2)])

    def map_entries(self, fn) -> "OperatorMatrix":
        return OperatorMatrix([[fn(self[i, j]) for j in range(2)] for i in range(2)])

    @property
    def is_local(self) -> bool:
        return all(e.is_local for r in self.entries for e in r)

    def __eq__(self, other):
        if not isinstance(other, OperatorMatrix):
            return NotImplemented
        return self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def __str__(self):
        return "\n".join(f"[{i + 1},{j + 1}] {self[i, j]}" for i in range(2) for j in range(2))


# operation surface --------------------------------------------------------

def apply_operator(op: DiffOperator, p: JetPolynomial) -> JetPolynomial:
    return op.apply(p)


def compose_commutator(a: DiffOperator, b: DiffOperator, mode: str = "COMPOSE") -> DiffOperator:
    mode = mode.upper()
    if mode == "COMPOSE":
        return a @ b
    if mode == "COMMUTATOR":
        return a.commutator(b)
    raise ValueError(f"unknown mode {mode!r}")


def formal_adjoint(op):
    return op.adjoint()


def operator_equal(a, b) -> tuple[bool, object]:
    """Structural comparison of normal forms; returns the difference as residual."""
    residual = a - b
    if isinstance(residual, OperatorMatrix):
        ok = all(residual[i, j].is_zero() for i in range(2) for j in range(2))
    else:
        ok = residual.is_zero()
    return ok, residual

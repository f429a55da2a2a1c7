"""Variational calculus on jet polynomials.

Closure of a vertical form modulo total divergences is decided with the
interior Euler operator ``I(w) = (1/k) sum_a du^a ^ E_a(w)``, which vanishes
exactly on forms of the shape ``sum_i D_i(eta_i)``.  Its value serves as the
canonical residual.
"""

from __future__ import annotations

from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping

from .diffop import ID_WORD, DiffOperator, OperatorMatrix
from .errors import PreconditionError
from .jetpoly import Field, JetCoordinate, JetPolynomial

__all__ = [
    "Wrt",
    "frechet",
    "helmholtz_residuals",
    "euler_variational",
    "homotopy_lagrangian",
    "is_total_divergence",
    "WedgeForm",
    "two_form_from_operator",
    "symplectic_closure",
]


class Wrt(str, Enum):
    U = "U"
    V = "V"
    BOTH = "BOTH"


def _field(wrt) -> int:
    return Field.U if Wrt(wrt) == Wrt.U else Field.V


def frechet(F: JetPolynomial, wrt="U"):
    """Linearization ``sum_coord (dF/dcoord) D^coord``; a pair for ``BOTH``."""
    if Wrt(wrt) == Wrt.BOTH:
        return frechet(F, "U"), frechet(F, "V")
    field = _field(wrt)
    local = {}
    for coord in F.jet_coordinates():
        if coord.field == field:
            local[coord.order] = F.diff(coord)
    return DiffOperator(F.ring, local)


_T1, _T2 = JetCoordinate(0, 1, 1, 0), JetCoordinate(0, 1, 0, 1)
_U11, _U12, _U22 = JetCoordinate(0, 0, 2, 0), JetCoordinate(0, 0, 1, 1), JetCoordinate(0, 0, 0, 2)


def helmholtz_residuals(F: JetPolynomial) -> tuple[tuple[JetPolynomial, ...], bool]:
    """Self-adjointness conditions for ``F = -u_tt + f`` with ``f`` second order.

    Returns the coefficients of ``D_t``, ``D_1``, ``D_2`` and the free term of
    ``D_F^* - D_F`` written through the partials of ``f``.
    """
    f = F + F.ring.u(2, 0, 0)
    ft1, ft2 = f.diff(_T1), f.diff(_T2)
    f11, f12, f22 = f.diff(_U11), f.diff(_U12), f.diff(_U22)
    r_t = ft1.D(1) + ft2.D(2)
    r_1 = ft1.D(0) + f11.D(1) * 2 + f12.D(2)
    r_2 = ft2.D(0) + f22.D(2) * 2 + f12.D(1)
    r_0 = ft1.D(0, 1) + ft2.D(0, 2) + f11.D(1, 1) + f12.D(1, 2) + f22.D(2, 2)
    res = (r_t, r_1, r_2, r_0)
    return res, all(not r for r in res)


def euler_variational(h: JetPolynomial, wrt="U") -> JetPolynomial:
    field = _field(wrt)
    out = h.ring.zero()
    for coord in h.jet_coordinates():
        if coord.field != field:
            continue
        term = h.diff(coord).Dword(coord.order)
        out = out - term if sum(coord.order) % 2 else out + term
    return out


def homotopy_lagrangian(F: JetPolynomial, check: bool = True) -> JetPolynomial:
    """Exact ``int_0^1 u F[lambda u] dlambda`` for a polynomial in ``u``-jets.

    A monomial of total ``u``-jet degree ``k`` picks up ``1/(k+1)``.
    """
    if any(c.field == Field.V for c in F.jet_coordinates()):
        raise PreconditionError("homotopy formula is implemented for one-field expressions")
    if check:
        D = frechet(F, "U")
        if D.adjoint() != D:
            raise PreconditionError("Frechet derivative is not self-adjoint; no Lagrangian exists")
    terms = {}
    for mono, c in F.items():
        k = sum(e for var, e in mono if var[0] < 2)
        terms[mono] = c / (k + 1)
    scaled = JetPolynomial(F.ring, terms)
    return F.ring.u() * scaled


def is_total_divergence(h: JetPolynomial) -> bool:
    return not euler_variational(h, "U") and not euler_variational(h, "V")


# vertical forms ------------------------------------------------------------

def _sort_sign(factors: Iterable[JetCoordinate]) -> tuple[int, tuple]:
    fs = list(factors)
    if len(set(fs)) != len(fs):
        return 0, ()
    sign = 1
    for i in range(len(fs)):
        for j in range(len(fs) - 1 - i):
            if fs[j] > fs[j + 1]:
                fs[j], fs[j + 1] = fs[j + 1], fs[j]
                sign = -sign
    return sign, tuple(fs)


class WedgeForm:
    """Sum of ``coefficient * du_A ^ du_B ^ ...`` with strictly sorted factors."""

    __slots__ = ("ring", "degree", "terms")

    def __init__(self, ring, degree: int, terms: Iterable[tuple[JetPolynomial, Iterable]] = ()):
        self.ring = ring
        self.degree = degree
        acc: dict = {}
        for coef, factors in terms:
            factors = [JetCoordinate(*f) for f in factors]
            if len(factors) != degree:
                raise ValueError("factor count does not match the form degree")
            sign, key = _sort_sign(factors)
            if not sign or not coef:
                continue
            s = acc.get(key, ring.zero()) + (coef if sign > 0 else -coef)
            if s:
                acc[key] = s
            else:
                acc.pop(key, None)
        self.terms = acc

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "WedgeForm") -> "WedgeForm":
        return WedgeForm(self.ring, self.degree,
                         [(c, k) for k, c in self.terms.items()]
                         + [(c, k) for k, c in other.terms.items()])

    def __sub__(self, other: "WedgeForm") -> "WedgeForm":
        return self + other.scale(-1)

    def scale(self, c) -> "WedgeForm":
        return WedgeForm(self.ring, self.degree, [(p * c, k) for k, p in self.terms.items()])

    def __eq__(self, other):
        return isinstance(other, WedgeForm) and self.degree == other.degree and self.terms == other.terms

    def vertical_differential(self) -> "WedgeForm":
        out = []
        for key, coef in self.terms.items():
            for coord in coef.jet_coordinates():
                out.append((coef.diff(coord), (coord,) + key))
        return WedgeForm(self.ring, self.degree + 1, out)

    def total_derivative(self, axis: int) -> "WedgeForm":
        out = []
        for key, coef in self.terms.items():
            out.append((coef.total_derivative(axis), key))
            for i in range(len(key)):
                out.append((coef, key[:i] + (key[i].prolong(axis),) + key[i + 1:]))
        return WedgeForm(self.ring, self.degree, out)

    def interior(self, coord: JetCoordinate) -> "WedgeForm":
        out = []
        for key, coef in self.terms.items():
            for i, f in enumerate(key):
                if f == coord:
                    out.append((coef if i % 2 == 0 else -coef, key[:i] + key[i + 1:]))
        return WedgeForm(self.ring, self.degree - 1, out)

    def interior_euler(self) -> "WedgeForm":
        """Canonical representative modulo total divergences (zero iff divergence)."""
        coords = {f for key in self.terms for f in key}
        pieces: dict = {}
        for coord in coords:
            contrib = self.interior(coord)
            for axis, n in enumerate(coord.order):
                for _ in range(n):
                    contrib = contrib.total_derivative(axis).scale(-1)
            prev = pieces.get(coord.field)
            pieces[coord.field] = contrib if prev is None else prev + contrib
        out = []
        k = Fraction(1, self.degree)
        base = {Field.U: JetCoordinate(0), Field.V: JetCoordinate(1)}
        for field, form in pieces.items():
            for key, coef in form.terms.items():
                out.append((coef * k, (base[field],) + key))
        return WedgeForm(self.ring, self.degree, out)

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for key in sorted(self.terms):
            wedge = "^".join(f"d{f}" for f in key)
            parts.append(f"({self.terms[key]})*{wedge}")
        return " + ".join(parts)

    def __repr__(self):
        return f"WedgeForm(degree={self.degree}, {self})"


def two_form_from_operator(K: OperatorMatrix) -> WedgeForm:
    """``1/2 du^i ^ K_ij du^j`` for a local 2x2 operator matrix."""
    if not K.is_local:
        raise PreconditionError("two-form needs a local operator matrix")
    half = Fraction(1, 2)
    terms = []
    for i in range(2):
        for j in range(2):
            for word, p in K[i, j].local.items():
                terms.append((p * half, (JetCoordinate(i), JetCoordinate(j, *word))))
    return WedgeForm(K.ring, 2, terms)


def symplectic_closure(K: OperatorMatrix, require_skew: bool = True) -> tuple[bool, WedgeForm]:
    """Does ``d omega`` vanish modulo total divergence?  Returns ``(closed, residual)``."""
    if require_skew and K.adjoint() != -K:
        raise PreconditionError("operator matrix is not skew-adjoint")
    omega = two_form_from_operator(K)
    residual = omega.vertical_differential().interior_euler()
    return residual.is_zero(), residual

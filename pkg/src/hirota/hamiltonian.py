"""Hamiltonian operators, densities and flow identities for the two-component system.

Rows of a Hamiltonian operator that contain a formal inverse are checked
the way one checks them by hand: a row whose nonlocal part can be cancelled
against another row by a constant-coefficient combination is reduced to a
local identity (so constant terms stay visible); any remaining nonlocal row
is left-composed with ``nabla_c`` before comparison.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .diffop import ID_WORD, DiffOperator, OperatorMatrix, operator_equal
from .errors import (
    CaseError,
    ConstraintError,
    NormalizationError,
    UnsupportedAdjointError,
    VariantError,
)
from .factorization import Variant, build_factors, recursion_matrix
from .jetpoly import JetCoordinate, JetPolynomial
from .ma_family import Case, MACoefficients, ModelBundle, build_model, on_shell_reduce
from .variational import euler_variational

__all__ = [
    "Second",
    "HamiltonianStructure",
    "SecondStructureSpec",
    "FlowResult",
    "build_first_structure",
    "build_second_structure",
    "second_operator",
    "second_density",
    "c9_expected",
    "compatible_structures",
    "verify_flow",
    "verify_RJ0",
    "j1b1_relation",
    "b_derivatives_check",
    "s0_independence",
    "tri_solve",
    "skew_adjoint_check",
]


class Second(str, Enum):
    J1 = "J1"
    J1PRIME = "J1PRIME"
    J1SPECIAL = "J1SPECIAL"


_COMPAT = {
    Second.J1: {Case.GENERIC: Variant.GENERIC1, Case.C2ZERO: Variant.C2ZERO},
    Second.J1PRIME: {Case.GENERIC: Variant.GENERIC2, Case.C1ZERO: Variant.C1ZERO},
    Second.J1SPECIAL: {Case.C3ZERO: Variant.C3ZERO},
}


def compatible_structures(case) -> list[Second]:
    return [s for s, m in _COMPAT.items() if Case(case) in m]


def _factor_variant(c: MACoefficients, which: Second) -> Variant:
    try:
        return _COMPAT[which][c.case]
    except KeyError:
        raise VariantError(f"{which.value} is not defined for {c.case.value} coefficients") from None


# first structure -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HamiltonianStructure:
    coeffs: MACoefficients
    model: ModelBundle
    K: OperatorMatrix
    J0: OperatorMatrix
    H1: JetPolynomial
    L2: JetPolynomial
    pi_u: JetPolynomial
    which_second: Second | None = None
    J_second: OperatorMatrix | None = None
    H0: JetPolynomial | None = None
    s0: Fraction = Fraction(0)


def _k11(c: MACoefficients, m: ModelBundle) -> DiffOperator:
    D1, D2 = DiffOperator.D(1, m.ring), DiffOperator.D(2, m.ring)
    M, u = DiffOperator.multiplication, m.ring.u
    return (c.c1 * (M(u(0, 2, 0)) @ D2 - M(u(0, 1, 1)) @ D1)
            + c.c2 * (M(u(0, 1, 1)) @ D2 - M(u(0, 0, 2)) @ D1)
            - c.c4 * D1 - c.c5 * D2)


def build_first_structure(c: MACoefficients, model: ModelBundle | None = None) -> HamiltonianStructure:
    m = model or build_model(c)
    ring = m.ring
    u, v = ring.u, ring.v
    one, zero = DiffOperator.identity(ring), DiffOperator.zero(ring)
    K11 = _k11(c, m)
    K = OperatorMatrix([[-K11, -one], [one, zero]])
    J22 = c.c1 * m.L1 + c.c2 * m.L2 + c.c4 * DiffOperator.D(1, ring) + c.c5 * DiffOperator.D(2, ring)
    J0 = OperatorMatrix([[zero, one], [-one, J22]])

    c1, c2, c3, c4, c5, c6, c7, c8, c9 = c.values
    U, u1, u2 = u(), u(0, 1, 0), u(0, 0, 1)
    u11, u12, u22 = u(0, 2, 0), u(0, 1, 1), u(0, 0, 2)
    det = u11 * u22 - u12 * u12
    quad = c6 * u11 + c7 * u12 + c8 * u22
    third, half = Fraction(1, 3), Fraction(1, 2)
    cubic = c1 * (u2 * u11 - u1 * u12) + c2 * (u2 * u12 - u1 * u22)
    H1 = v() * v() * half - U * det * (c3 * third) - U * quad * half - U * c9
    ut = u(1, 0, 0)
    L2 = (ut * v() - v() * v() * half + ut * cubic * third - ut * (c4 * u1 + c5 * u2) * half
          + U * det * (c3 * third) + U * quad * half + U * c9)
    pi_u = v() + cubic * third - (c4 * u1 + c5 * u2) * half
    return HamiltonianStructure(c, m, K, J0, H1, L2, pi_u)


# second structures -----------------------------------------------------------

def c9_expected(c: MACoefficients, which) -> Fraction:
    which = Second(which)
    c1, c2, c3, c4, c5, c6, c7, c8, _ = c.values
    try:
        if which == Second.J1:
            return (c6 * (c3 - c1 * c5) + c4 * (c1 * c7 - c2 * c6 + c3 * c4)) / c1**2
        if which == Second.J1PRIME:
            return (c8 * (c2 * c4 + c3) + c5 * (c1 * c8 - c2 * c7 + c3 * c5)) / c2**2
        return (c1 * c4 * c8 - c2 * c5 * c6) / (c1 * c2)
    except ZeroDivisionError:
        raise CaseError(f"c9 constraint of {which.value} divides by zero") from None


def second_operator(c: MACoefficients, which, model: ModelBundle | None = None) -> OperatorMatrix:
    which = Second(which)
    variant = _factor_variant(c, which)
    m = model or build_model(c)
    ring = m.ring
    D1, D2 = DiffOperator.D(1, ring), DiffOperator.D(2, ring)
    c1, c2, c3, c4, c5, c6, c7, c8, _ = c.values
    Ni = DiffOperator.nabla_inv(c1, c2, ring)
    if which == Second.J1:
        J22 = (c3 * m.L2 - c1 * m.Lt
               + Ni @ (c1 * (c6 * D1 @ D1 + c7 * D1 @ D2 + c8 * D2 @ D2)
                       + c3 * D2 @ (c4 * D1 + c5 * D2)))
        return OperatorMatrix([[-c1 * Ni, c3 * (Ni @ D2)], [-c3 * (Ni @ D2), J22]])
    B1 = build_factors(c, variant, m).B1
    if which == Second.J1PRIME:
        J22 = (c3 * c3 * (Ni @ D1 @ D1) + B1) / c2
        return OperatorMatrix([[-c2 * Ni, -c3 * (Ni @ D1)], [c3 * (Ni @ D1), J22]])
    zero = DiffOperator.zero(ring)
    return OperatorMatrix([[c2 * Ni, zero], [zero, B1 / c1]])


def second_density(c: MACoefficients, which, s0=0, ring=None) -> JetPolynomial:
    which = Second(which)
    _factor_variant(c, which)
    ring = ring or build_model(c).ring
    u, v = ring.u, ring.v
    c1, c2, c3, c4, c5, c6, c7, c8, _ = c.values
    s0 = Fraction(s0)
    grad_u = u(0, 1, 0) * c1 + u(0, 0, 1) * c2
    z1, z2 = ring.z(1), ring.z(2)
    if which == Second.J1:
        b = grad_u / c1 + z2 * (c4 / c1) + z1 * ((c3 - c1 * c5) / c1**2) + s0
        return (v() * b - u(0, 0, 1) * grad_u * (c3 / (2 * c1**2))
                + u() * (c3 * c4 / c1**2))
    if which == Second.J1PRIME:
        b = (grad_u - z1 * c5 + z2 * (c4 + c3 / c2)) / c2 + s0
        return v() * b + (u(0, 1, 0) * grad_u + u() * (2 * c5)) * (c3 / (2 * c2**2))
    return v() * (-grad_u + z1 * c5 - z2 * c4 + s0) / c2


@dataclass(frozen=True, eq=False)
class SecondStructureSpec:
    variant: Second
    c9_constraint_value: Fraction
    H0: JetPolynomial
    J: OperatorMatrix
    s0: Fraction


def build_second_structure(c: MACoefficients, variant, s0=0, check_constraint: bool = True,
                           model: ModelBundle | None = None) -> SecondStructureSpec:
    which = Second(variant)
    m = model or build_model(c)
    J = second_operator(c, which, m)
    expected = c9_expected(c, which)
    if check_constraint and expected != c.c9:
        raise ConstraintError(
            f"{which.value} needs c9 = {expected}, got {c.c9}", expected=expected, actual=c.c9)
    return SecondStructureSpec(which, expected, second_density(c, which, s0, m.ring), J, Fraction(s0))


def j1b1_relation(c: MACoefficients, which=Second.J1) -> tuple[bool, DiffOperator]:
    """Express the lower-right entry through the factor ``B1``."""
    which = Second(which)
    m = build_model(c)
    J22 = second_operator(c, which, m)[1, 1]
    B1 = build_factors(c, _factor_variant(c, which), m).B1
    ring = m.ring
    D1, D2 = DiffOperator.D(1, ring), DiffOperator.D(2, ring)
    c1, c2, c3 = c.c1, c.c2, c.c3
    Ni = DiffOperator.nabla_inv(c1, c2, ring)
    if which == Second.J1:
        other = (B1 + c3 * c3 * (Ni @ D2 @ D2)) / c1
    elif which == Second.J1PRIME:
        other = (B1 + c3 * c3 * (Ni @ D1 @ D1)) / c2
    else:
        M, v = DiffOperator.multiplication, ring.v
        other = -c2 * (M(v(0, 1, 0)) @ D2 - M(v(0, 0, 1)) @ D1
                       + (c.c6 / c1) * D1 + (c.c8 / c2) * D2)
    return operator_equal(J22, other)


# flow verification -----------------------------------------------------------

@dataclass(frozen=True)
class FlowResult:
    holds: bool
    residuals: tuple
    methods: tuple

    def residual_text(self) -> str:
        return "; ".join(f"row{i + 1}[{m}]: {r}" for i, (r, m) in enumerate(zip(self.residuals, self.methods)))


def _pure_scalar_inverse(op: DiffOperator):
    """``a`` if ``op = Ninv_d o a`` with constant ``a`` and nothing else."""
    if op.local or len(op.nonlocal_terms) != 1:
        return None
    (d, inner), = op.nonlocal_terms.items()
    if set(inner) != {ID_WORD} or not inner[ID_WORD].is_constant():
        return None
    return d, inner[ID_WORD].constant_term()


def _elimination_factor(row, pivot_row):
    for j in range(2):
        piv = _pure_scalar_inverse(pivot_row[j])
        if piv is None:
            continue
        d, a = piv
        nl = row[j].nonlocal_terms
        if set(nl) != {d}:
            continue
        inner = nl[d]
        if not all(p.is_constant() for p in inner.values()):
            continue
        return DiffOperator(row[j].ring, {w: p / a for w, p in inner.items()})
    return None


def flow_residuals(J: OperatorMatrix, grad, target, c1, c2, reduce=None):
    """Residuals of ``J grad = target`` row by row, plus the method used per row."""
    ring = J.ring
    if not (c1 or c2):
        if not J.is_local:
            raise CaseError("nabla_c vanishes; nonlocal rows cannot be cleared")
    red = reduce or (lambda p: p)
    rows = [(J[i, 0], J[i, 1]) for i in range(2)]
    local = [r[0].is_local and r[1].is_local for r in rows]
    res, how = [None, None], [None, None]

    def apply_row(row, g):
        return red(row[0].apply(g[0]) + row[1].apply(g[1]))

    def clear_row(i):
        nab = DiffOperator.nabla(c1, c2, ring)
        cleared = [nab @ e for e in rows[i]]
        if not all(e.is_local for e in cleared):
            raise NormalizationError("row does not clear with nabla_c")
        res[i] = red(cleared[0].apply(grad[0]) + cleared[1].apply(grad[1])) - nab.apply(target[i])
        how[i] = "cleared"

    for i in range(2):
        if local[i]:
            res[i] = apply_row(rows[i], grad) - target[i]
            how[i] = "direct"
    for i in range(2):
        if local[i]:
            continue
        other = 1 - i
        K = _elimination_factor(rows[i], rows[other]) if not local[other] else None
        if K is not None:
            reduced = [rows[i][j] - K @ rows[other][j] for j in range(2)]
            if all(e.is_local for e in reduced):
                res[i] = apply_row(reduced, grad) - (target[i] - K.apply(target[other]))
                how[i] = "eliminated"
                continue
        clear_row(i)
    return tuple(res), tuple(how)


def verify_flow(J: OperatorMatrix, H: JetPolynomial, m: ModelBundle) -> FlowResult:
    """Does ``J (delta_u H, delta_v H)`` reproduce ``(v, v_t)`` of the system?"""
    grad = (euler_variational(H, "U"), euler_variational(H, "V"))
    c = m.coeffs
    res, how = flow_residuals(J, grad, m.system, c.c1, c.c2, lambda p: on_shell_reduce(p, m))
    return FlowResult(all(not r for r in res), res, how)


def verify_RJ0(c: MACoefficients, variant) -> tuple[bool, OperatorMatrix]:
    which = Second(variant)
    m = build_model(c)
    R = recursion_matrix(c, _factor_variant(c, which), m)
    J0 = build_first_structure(c, m).J0
    return operator_equal(R @ J0, second_operator(c, which, m))


def b_derivatives_check(c: MACoefficients, which) -> bool:
    """``D_1 b`` and ``D_2 b`` of ``b = dH0/dv`` against their closed forms."""
    which = Second(which)
    ring = build_model(c).ring
    H0 = second_density(c, which, 0, ring)
    b = H0.diff(JetCoordinate(1))
    u = ring.u
    c1, c2, c3, c4, c5 = c.values[:5]
    gu1 = u(0, 2, 0) * c1 + u(0, 1, 1) * c2
    gu2 = u(0, 1, 1) * c1 + u(0, 0, 2) * c2
    if which == Second.J1:
        d1 = (gu1 + (c3 - c1 * c5) / c1) / c1
        d2 = (gu2 + c4) / c1
    elif which == Second.J1PRIME:
        d1 = (gu1 - c5) / c2
        d2 = (gu2 + c4 + c3 / c2) / c2
    else:
        d1 = -gu1 / c2 + c5 / c2
        d2 = -gu2 / c2 - c4 / c2
    return b.D(1) == d1 and b.D(2) == d2


def s0_independence(c: MACoefficients, which) -> bool:
    """Shifting ``s0`` changes ``H0`` by a multiple of ``v`` with zero flow."""
    which = Second(which)
    m = build_model(c)
    dH = second_density(c, which, 1, m.ring) - second_density(c, which, 0, m.ring)
    if dH.jet_coordinates() != {JetCoordinate(1)} or dH.degree(JetCoordinate(1)) != 1:
        return False
    J = second_operator(c, which, m)
    grad = (euler_variational(dH, "U"), euler_variational(dH, "V"))
    zero = m.ring.zero()
    res, _ = flow_residuals(J, grad, (zero, zero), c.c1, c.c2)
    return all(not r for r in res)


def tri_solve(c1, c2, c3, c5, c6, c8) -> tuple[Fraction, Fraction, Fraction]:
    c1, c2, c3, c5, c6, c8 = (Fraction(x) for x in (c1, c2, c3, c5, c6, c8))
    if not (c1 and c2 and c3):
        raise CaseError("tri-Hamiltonian solution needs c1*c2*c3 != 0")
    c4 = (c2**2 * c6 - c1**2 * c8 - c1 * c3 * c5) / (c2 * c3)
    c7 = (2 * c1**2 * c8 + 2 * c1 * c3 * c5 - c3**2) / (c1 * c2)
    c9 = ((c3 * c5 + c1 * c8) / (c1 * c2**2 * c3) * (c3 * (c3 - c1 * c5) - c1**2 * c8)
          + c6 * c8 / c3)
    return c4, c7, c9


def skew_adjoint_check(J: OperatorMatrix) -> bool | None:
    """``True``/``False`` for skew-adjointness; ``None`` when the adjoint is unsupported."""
    try:
        return J.adjoint() == -J
    except UnsupportedAdjointError:
        return None

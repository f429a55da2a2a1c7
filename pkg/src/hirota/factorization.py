"""Skew-factorized symmetry operators, Lax pairs and recursion matrices.

Each variant supplies constant first-order ``A1, A2`` and first-order
``B1, B2`` with ``A1 B2 - A2 B1`` proportional, on shell, to the linearized
equation.  The proportionality constant ``mu`` is computed, never assumed.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .diffop import ID_WORD, DiffOperator, OperatorMatrix
from .errors import DegenerateInputError, VariantError
from .jetpoly import Field, JetRing, replace_variables
from .ma_family import Case, MACoefficients, ModelBundle, build_model, embed, on_shell_reduce

__all__ = [
    "Variant",
    "SkewFactorSet",
    "LaxPair",
    "build_factors",
    "compatible_variants",
    "verify_skew_identity",
    "verify_commutators",
    "verify_lax",
    "cross_relations",
    "discrete_symmetry",
    "recursion_matrix",
    "recursion_display_matrix",
    "recursion_consistency",
]


class Variant(str, Enum):
    GENERIC1 = "GENERIC1"
    GENERIC2 = "GENERIC2"
    C1ZERO = "C1ZERO"
    C2ZERO = "C2ZERO"
    C2ZERO_ALT = "C2ZERO_ALT"
    C3ZERO = "C3ZERO"


_VARIANT_CASE = {
    Variant.GENERIC1: Case.GENERIC,
    Variant.GENERIC2: Case.GENERIC,
    Variant.C1ZERO: Case.C1ZERO,
    Variant.C2ZERO: Case.C2ZERO,
    Variant.C2ZERO_ALT: Case.C2ZERO,
    Variant.C3ZERO: Case.C3ZERO,
}


def compatible_variants(case) -> list[Variant]:
    case = Case(case)
    return [v for v, k in _VARIANT_CASE.items() if k == case]


def _check_variant(c: MACoefficients, variant: Variant):
    need = _VARIANT_CASE[variant]
    if c.case != need:
        raise VariantError(
            f"variant {variant.value} needs {need.value} coefficients, got {c.case.value} "
            "(the factor operators become linearly dependent)")
    if variant in (Variant.C1ZERO, Variant.C2ZERO) and c.c3 == 0:
        raise VariantError(f"variant {variant.value} degenerates at c3 = 0")


@dataclass(frozen=True, eq=False)
class SkewFactorSet:
    variant: Variant
    coeffs: MACoefficients
    model: ModelBundle
    A1: DiffOperator
    A2: DiffOperator
    B1: DiffOperator
    B2: DiffOperator

    def lax_pair(self) -> "LaxPair":
        lam = self.model.ring.param("lam")
        X1 = DiffOperator.multiplication(lam) @ self.A1 + self.B1
        X2 = DiffOperator.multiplication(lam) @ self.A2 + self.B2
        return LaxPair(X1, X2, self)


@dataclass(frozen=True, eq=False)
class LaxPair:
    X1: DiffOperator
    X2: DiffOperator
    factors: SkewFactorSet


def _derivs(ring: JetRing):
    Dt = DiffOperator.D(0, ring)
    D1 = DiffOperator.D(1, ring)
    D2 = DiffOperator.D(2, ring)
    return Dt, D1, D2


def build_factors(c: MACoefficients, variant, model: ModelBundle | None = None) -> SkewFactorSet:
    variant = Variant(variant)
    _check_variant(c, variant)
    m = model or build_model(c)
    Dt, D1, D2 = _derivs(m.ring)
    L1, L2, Lt = m.L1, m.L2, m.Lt
    c1, c2, c3, c4, c5, c6, c7, c8, _ = c.values
    if variant == Variant.GENERIC1:
        A1 = c1 * Dt - c3 * D2
        A2 = -(c2 * Dt + c3 * D1)
        B1 = c1 * (c3 * L2 - c1 * Lt) + c1 * c6 * D1 + (c1 * c7 - c2 * c6 + c3 * c4) * D2
        B2 = c1 * (c3 * L1 + c2 * Lt) + (c3 * c4 - c2 * c6) * D1 - c1 * c8 * D2 - c3 * Dt
    elif variant == Variant.GENERIC2:
        A1 = c2 * Dt + c3 * D1
        A2 = c3 * D2 - c1 * Dt
        B1 = -c2 * (c3 * L1 + c2 * Lt) + (c2 * c7 - c1 * c8 - c3 * c5) * D1 + c2 * c8 * D2
        B2 = c2 * (c1 * Lt - c3 * L2) - c2 * c6 * D1 - (c1 * c8 + c3 * c5) * D2 + c3 * Dt
    elif variant == Variant.C1ZERO:
        A1 = c2 * Dt + c3 * D1
        A2 = c3 * D2
        B1 = -c2 * (c3 * L1 + c2 * Lt) + (c2 * c7 - c3 * c5) * D1 + c2 * c8 * D2
        B2 = c3 * Dt - c2 * c3 * L2 - c2 * c6 * D1 - c3 * c5 * D2
    elif variant == Variant.C2ZERO:
        A1 = c1 * Dt - c3 * D2
        A2 = -c3 * D1
        B1 = c1 * (c3 * L2 - c1 * Lt) + c1 * c6 * D1 + (c1 * c7 + c3 * c4) * D2
        B2 = c1 * c3 * L1 + c3 * c4 * D1 - c1 * c8 * D2 - c3 * Dt
    elif variant == Variant.C2ZERO_ALT:
        A1 = c1 * D1
        A2 = c3 * D2 - c1 * Dt
        B1 = c1 * c1 * L1 + (c1 * c5 - c3) * D2 - c1 * Dt
        B2 = c1 * (c3 * L2 - c1 * Lt + c4 * Dt + c6 * D1 + c7 * D2)
    else:  # C3ZERO
        A1 = c1 * Dt
        A2 = c1 * D1 + c2 * D2
        B1 = c1 * c2 * Lt - c2 * c6 * D1 - c1 * c8 * D2
        B2 = c2 * (c1 * L1 + c2 * L2 + c4 * D1 + c5 * D2 - Dt)
    return SkewFactorSet(variant, c, m, A1, A2, B1, B2)


# identities -------------------------------------------------------------------

@dataclass(frozen=True)
class SkewResult:
    holds: bool
    mu: Fraction | None
    residual: DiffOperator


def verify_skew_identity(s: SkewFactorSet) -> SkewResult:
    """Is ``A1 B2 - A2 B1 = mu * (linearized equation)`` on shell for a constant ``mu``?"""
    m = s.model
    sym = on_shell_reduce(m.symmetry_op, m)
    if sym.is_zero():
        raise DegenerateInputError("symmetry operator vanishes identically")
    lhs = on_shell_reduce(s.A1 @ s.B2 - s.A2 @ s.B1, m)
    # the linearized equation always carries -D_t^2
    lead = lhs.coefficient((2, 0, 0))
    if not lead.is_constant():
        return SkewResult(False, None, lhs - sym)
    mu = -lead.constant_term()
    residual = lhs - sym * mu
    return SkewResult(residual.is_zero() and mu != 0, mu, residual)


@dataclass(frozen=True)
class CommutatorResult:
    a1a2: DiffOperator
    cross: DiffOperator
    b1b2: DiffOperator
    b1b2_raw: DiffOperator

    @property
    def holds(self) -> bool:
        return self.a1a2.is_zero() and self.cross.is_zero() and self.b1b2.is_zero()


def verify_commutators(s: SkewFactorSet) -> CommutatorResult:
    """``[A1,A2]`` and ``[A1,B2] - [A2,B1]`` after ``u_t -> v``; ``[B1,B2]`` also on shell."""
    m = s.model
    a1a2 = embed(s.A1.commutator(s.A2))
    cross = embed(s.A1.commutator(s.B2) - s.A2.commutator(s.B1))
    raw = embed(s.B1.commutator(s.B2))
    return CommutatorResult(a1a2, cross, on_shell_reduce(raw, m), raw)


@dataclass(frozen=True)
class LaxResult:
    components: tuple  # lambda^0, lambda^1, lambda^2 parts, on shell
    expected_match: bool

    @property
    def holds(self) -> bool:
        return self.expected_match and all(comp.is_zero() for comp in self.components)


def verify_lax(s: SkewFactorSet) -> LaxResult:
    m = s.model
    pair = s.lax_pair()
    comm = on_shell_reduce(pair.X1.commutator(pair.X2), m)
    lam = m.ring.param_var("lam")
    comps = tuple(comm.map_coefficients(lambda p, k=k: p.coefficient(lam, k)) for k in range(3))
    higher = comm.map_coefficients(lambda p: p if p.degree(lam) > 2 else p.ring.zero())
    expected = (
        on_shell_reduce(s.B1.commutator(s.B2), m),
        on_shell_reduce(s.A1.commutator(s.B2) + s.B1.commutator(s.A2), m),
        embed(s.A1.commutator(s.A2)),
    )
    match = higher.is_zero() and all(a == b for a, b in zip(comps, expected))
    return LaxResult(comps, match)


# discrete symmetry ------------------------------------------------------------

def _sigma(c: MACoefficients) -> MACoefficients:
    c1, c2, c3, c4, c5, c6, c7, c8, c9 = c.values
    return MACoefficients((-c2, -c1, c3, c5, c4, c8, c7, c6, c9))


def _swap_jet(ring: JetRing):
    def fn(var):
        if var[0] >= 2:
            return None
        f, nt, n1, n2 = var
        sign = -1 if (nt + n1 + n2) % 2 else 1
        if f == Field.V:
            sign = -sign
        return ring.jet(f, nt, n2, n1) * sign
    return fn


def discrete_symmetry(op: DiffOperator) -> DiffOperator:
    """Apply ``D1 <-> -D2``, ``D_t -> -D_t``, ``v -> -v`` to a local operator."""
    fn = _swap_jet(op.ring)
    mapped = op.map_coefficients(lambda p: replace_variables(p, fn))
    return mapped.map_words(lambda w: (-1 if sum(w) % 2 else 1, (w[0], w[2], w[1])))


def map_coefficients_sigma(c: MACoefficients) -> MACoefficients:
    return _sigma(c)


@dataclass(frozen=True)
class CrossResult:
    relations: tuple  # residual operators of the four algebraic relations
    discrete_ok: bool

    @property
    def holds(self) -> bool:
        return self.discrete_ok and all(r.is_zero() for r in self.relations)


def cross_relations(c: MACoefficients) -> CrossResult:
    if c.case != Case.GENERIC:
        raise VariantError("cross relations compare the two generic factor sets")
    m = build_model(c)
    s1 = build_factors(c, Variant.GENERIC1, m)
    s2 = build_factors(c, Variant.GENERIC2, m)
    c1, c2, c3 = c.c1, c.c2, c.c3
    rel = (
        s2.A1 + s1.A2,
        s2.A2 + s1.A1,
        c2 * s1.B1 + c1 * s2.B2 - c3 * s1.A1,
        c2 * s1.B2 + c1 * s2.B1 - c3 * s1.A2,
    )
    t = build_factors(_sigma(c), Variant.GENERIC1)
    discrete_ok = all(
        discrete_symmetry(a) == b
        for a, b in ((t.A1, s2.A1), (t.A2, s2.A2), (t.B1, s2.B1), (t.B2, s2.B2)))
    return CrossResult(rel, discrete_ok)


# recursion matrices -------------------------------------------------------

_RECURSION_SOURCE = {
    Variant.GENERIC1: Variant.GENERIC1,
    Variant.GENERIC2: Variant.GENERIC2,
    Variant.C1ZERO: Variant.GENERIC2,
    Variant.C2ZERO: Variant.GENERIC1,
    Variant.C3ZERO: Variant.C3ZERO,
}


def recursion_matrix(c: MACoefficients, variant, model: ModelBundle | None = None) -> OperatorMatrix:
    """Recursion matrix; particular cases are the generic formulas specialized."""
    variant = Variant(variant)
    if variant == Variant.C2ZERO_ALT:
        raise VariantError("no recursion matrix is built from the alternative c2 = 0 factors")
    _check_variant(c, variant)
    m = model or build_model(c)
    ring = m.ring
    Dt, D1, D2 = _derivs(ring)
    L1, L2, Lt = m.L1, m.L2, m.Lt
    M = DiffOperator.multiplication
    c1, c2, c3, c4, c5, c6, c7, c8, _ = c.values
    Ni = DiffOperator.nabla_inv(c1, c2, ring)
    u = ring.u
    grad_u1 = u(0, 2, 0) * c1 + u(0, 1, 1) * c2
    grad_u2 = u(0, 1, 1) * c1 + u(0, 0, 2) * c2
    zero = DiffOperator.zero(ring)
    src = _RECURSION_SOURCE[variant]
    if src == Variant.GENERIC1:
        R11 = Ni @ (c1 * (M(grad_u1) @ D2 - M(grad_u2) @ D1 - c4 * D1 - c5 * D2) + c3 * D2)
        hess = (M(u(0, 0, 2)) @ D1 @ D1 + M(u(0, 2, 0)) @ D2 @ D2
                - 2 * (M(u(0, 1, 1)) @ D1 @ D2))
        R21 = c1 * (-Lt + Ni @ (c3 * hess + c6 * D1 @ D1 + c7 * D1 @ D2 + c8 * D2 @ D2))
        return OperatorMatrix([[R11, c1 * Ni], [R21, c3 * (Ni @ D2)]])
    if src == Variant.GENERIC2:
        P = c1 * L1 + c2 * L2 + (c4 + c3 / c2) * D1 + c5 * D2
        R11 = -c2 * (Ni @ P)
        R21 = (c3 * (Ni @ (D1 @ P)) - (c3 * L1 + c2 * Lt)
               + ((c2 * c7 - c1 * c8 - c3 * c5) / c2) * D1 + c8 * D2)
        return OperatorMatrix([[R11, c2 * Ni], [R21, -c3 * (Ni @ D1)]])
    R11 = c2 * (Ni @ (M(grad_u2) @ D1 - M(grad_u1) @ D2 + c4 * D1 + c5 * D2))
    R21 = c2 * Lt - (c2 * c6 / c1) * D1 - c8 * D2
    return OperatorMatrix([[R11, -c2 * Ni], [R21, zero]])


def recursion_display_matrix(c: MACoefficients, variant) -> OperatorMatrix:
    """The separately displayed particular-case matrices, written with ``D_i^{-1}``.

    Kept for comparison with the specialized generic formulas.
    """
    variant = Variant(variant)
    _check_variant(c, variant)
    m = build_model(c)
    ring = m.ring
    Dt, D1, D2 = _derivs(ring)
    L1, L2, Lt = m.L1, m.L2, m.Lt
    M = DiffOperator.multiplication
    u = ring.u
    c1, c2, c3, c4, c5, c6, c7, c8, _ = c.values
    one = DiffOperator.identity(ring)
    if variant == Variant.C1ZERO:
        D2inv = DiffOperator.nabla_inv(0, 1, ring)
        Q = L2 + (c6 / c3) * D1
        return OperatorMatrix([
            [-c2 * (D2inv @ Q) - c5 * one, D2inv],
            [c3 * (D2inv @ (D1 @ Q)) - (c3 * L1 + c2 * Lt) + c7 * D1 + c8 * D2,
             -(c3 / c2) * (D2inv @ D1)],
        ])
    if variant == Variant.C2ZERO:
        D1inv = DiffOperator.nabla_inv(1, 0, ring)
        hess = (M(u(0, 0, 2)) @ D1 @ D1 + M(u(0, 2, 0)) @ D2 @ D2
                - 2 * (M(u(0, 1, 1)) @ D1 @ D2))
        return OperatorMatrix([
            [-(D1inv @ (c1 * L1 + (c1 * c5 - c3) * D2)) - c1 * c4 * one, D1inv],
            [-c1 * Lt + c6 * D1 + c7 * D2 + D1inv @ (c3 * hess + c8 * D2 @ D2),
             (c3 / c1) * (D1inv @ D2)],
        ])
    raise VariantError("separate displays exist only for the c1 = 0 and c2 = 0 cases")


def _split_time(op: DiffOperator):
    """``op = a D_t + S`` with constant ``a`` and ``S`` free of ``D_t``."""
    a = op.coefficient((1, 0, 0))
    if not a.is_constant() or any(w[0] and w != (1, 0, 0) for w in op.local):
        raise VariantError("factor is not of the form a*D_t + spatial with constant a")
    a = a.constant_term()
    return a, op - a * DiffOperator.D(0, op.ring)


def recursion_consistency(c: MACoefficients, variant) -> tuple[bool, list]:
    """Check ``a_i (R21, R22) + S_i (R11, R12) = (B_i^0, b_i)`` for both factor rows.

    With ``A_i = a_i D_t + S_i`` and ``B_i = B_i^0 + b_i D_t`` this is the
    two-component form of ``A_i phi~ = B_i phi`` using ``psi = phi_t``.
    """
    variant = Variant(variant)
    m = build_model(c)
    s = build_factors(c, variant, m)
    R = recursion_matrix(c, variant, m)
    residuals = []
    for A, B in ((s.A1, s.B1), (s.A2, s.B2)):
        a, S = _split_time(A)
        b, B0 = _split_time(B)
        row = (a * R[1, 0] + S @ R[0, 0], a * R[1, 1] + S @ R[0, 1])
        residuals.append(row[0] - B0)
        residuals.append(row[1] - b * DiffOperator.identity(m.ring))
    return all(r.is_zero() for r in residuals), residuals

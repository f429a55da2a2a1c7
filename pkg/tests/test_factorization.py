from fractions import Fraction

import pytest

from hirota.diffop import DiffOperator
from hirota.errors import DegenerateInputError, VariantError
from hirota.factorization import (Variant, build_factors, compatible_variants, cross_relations,
                                  discrete_symmetry, recursion_consistency,
                                  recursion_display_matrix, recursion_matrix, verify_commutators,
                                  verify_lax, verify_skew_identity)
from hirota.jetpoly import DEFAULT_RING as R
from hirota.ma_family import (CANONICAL, Case, MACoefficients, build_model, perturb_off_surface,
                              sample_integrable)

u, v = R.u, R.v
M = DiffOperator.multiplication
Dt, D1, D2 = (DiffOperator.D(a, R) for a in (0, 1, 2))

CASE_OF = {Variant.GENERIC1: "generic", Variant.GENERIC2: "generic", Variant.C1ZERO: "c1zero",
           Variant.C2ZERO: "c2zero", Variant.C2ZERO_ALT: "c2zero", Variant.C3ZERO: "c3zero"}

# mu = -(a1 b2 - a2 b1), the D_t^2 coefficient of A1 B2 - A2 B1 read off by hand
MU = {
    Variant.GENERIC1: lambda c: c.c1 * c.c3,
    Variant.GENERIC2: lambda c: -c.c2 * c.c3,
    Variant.C1ZERO: lambda c: -c.c2 * c.c3,
    Variant.C2ZERO: lambda c: c.c1 * c.c3,
    Variant.C2ZERO_ALT: lambda c: c.c1 ** 2,
    Variant.C3ZERO: lambda c: c.c1 * c.c2,
}


def test_generic1_operators():
    c = CANONICAL
    s = build_factors(c, "GENERIC1")
    assert s.A1 == c.c1 * Dt - c.c3 * D2
    assert s.A2 == -(c.c2 * Dt + c.c3 * D1)


def test_c3zero_operators():
    c = sample_integrable("c3zero", seed=4)
    m = build_model(c)
    s = build_factors(c, "C3ZERO", m)
    assert s.A1 == c.c1 * Dt
    assert s.A2 == m.nabla_c
    assert s.B1 == c.c1 * c.c2 * m.Lt - c.c2 * c.c6 * D1 - c.c1 * c.c8 * D2


def test_incompatible_variant():
    c = sample_integrable("c1zero", seed=0)
    with pytest.raises(VariantError):
        build_factors(c, "GENERIC1")
    with pytest.raises(VariantError):
        build_factors(CANONICAL, "C3ZERO")


def test_compatible_variants():
    assert compatible_variants("c2zero") == [Variant.C2ZERO, Variant.C2ZERO_ALT]
    assert compatible_variants("generic") == [Variant.GENERIC1, Variant.GENERIC2]


def test_canonical_generic1_mu():
    r = verify_skew_identity(build_factors(CANONICAL, "GENERIC1"))
    assert r.holds and r.mu == 1 and r.residual.is_zero()


@pytest.mark.parametrize("variant", list(Variant))
def test_skew_identity_and_mu(variant):
    for seed in range(4):
        c = sample_integrable(CASE_OF[variant], seed=seed)
        r = verify_skew_identity(build_factors(c, variant))
        assert r.holds
        assert r.mu == MU[variant](c) != 0


@pytest.mark.parametrize("variant", list(Variant))
def test_off_surface_breaks_identity(variant):
    for seed in range(3):
        c = perturb_off_surface(sample_integrable(CASE_OF[variant], seed=seed))
        r = verify_skew_identity(build_factors(c, variant))
        assert not r.holds and not r.residual.is_zero()


def test_degenerate_symmetry_operator():
    # c1 = c2 = 0 is never a factor case; feed a hand-made set instead
    c = MACoefficients.of(0, 0, 0, 0, 0, 0, 0, 0, 0)
    m = build_model(c)
    from hirota.factorization import SkewFactorSet
    zero = DiffOperator.zero(R)
    s = SkewFactorSet(Variant.GENERIC1, c, m, zero, zero, zero, zero)
    object.__setattr__(m, "symmetry_op", zero)
    with pytest.raises(DegenerateInputError):
        verify_skew_identity(s)


@pytest.mark.parametrize("variant", list(Variant))
def test_commutators_and_lax(variant):
    c = sample_integrable(CASE_OF[variant], seed=11)
    s = build_factors(c, variant)
    r = verify_commutators(s)
    assert r.holds
    assert not r.b1b2_raw.is_zero()
    lax = verify_lax(s)
    assert lax.holds and lax.expected_match


def test_cross_relations_and_discrete_symmetry():
    assert cross_relations(CANONICAL).holds
    for seed in range(4):
        r = cross_relations(sample_integrable("generic", seed=seed))
        assert r.discrete_ok and all(x.is_zero() for x in r.relations)
    with pytest.raises(VariantError):
        cross_relations(sample_integrable("c3zero", seed=0))


def test_discrete_symmetry_is_involution():
    s = build_factors(CANONICAL, "GENERIC1")
    for op in (s.A1, s.B1, s.B2):
        assert discrete_symmetry(discrete_symmetry(op)) == op
    assert discrete_symmetry(M(u(0, 1, 0)) @ D2) == M(u(0, 0, 1)) @ D1


def test_generic1_recursion_matrix_entries():
    c = sample_integrable("generic", seed=3)
    m = build_model(c)
    R_ = recursion_matrix(c, "GENERIC1", m)
    Ni = DiffOperator.nabla_inv(c.c1, c.c2, R)
    assert R_[0, 1] == c.c1 * Ni
    assert R_[1, 1] == c.c3 * (Ni @ D2)
    g1 = c.c1 * u(0, 2, 0) + c.c2 * u(0, 1, 1)
    g2 = c.c1 * u(0, 1, 1) + c.c2 * u(0, 0, 2)
    expected = c.c1 * (M(g1) @ D2 - M(g2) @ D1 - c.c4 * D1 - c.c5 * D2) + c.c3 * D2
    assert (m.nabla_c @ R_[0, 0]) == expected
    for i in range(2):
        for j in range(2):
            assert (m.nabla_c @ R_[i, j]).is_local


def test_c3zero_recursion_matrix_entries():
    c = sample_integrable("c3zero", seed=5)
    R_ = recursion_matrix(c, "C3ZERO")
    assert R_[1, 1].is_zero()
    expected = (c.c2 * (M(v(0, 0, 1)) @ D1 - M(v(0, 1, 0)) @ D2)
                - (c.c2 * c.c6 / c.c1) * D1 - c.c8 * D2)
    assert R_[1, 0] == expected


def test_alt_variant_has_no_recursion_matrix():
    with pytest.raises(VariantError):
        recursion_matrix(sample_integrable("c2zero", seed=0), "C2ZERO_ALT")


@pytest.mark.parametrize("variant", [v for v in Variant if v != Variant.C2ZERO_ALT])
def test_recursion_consistency(variant):
    for seed in range(3):
        ok, residuals = recursion_consistency(sample_integrable(CASE_OF[variant], seed=seed), variant)
        assert ok, [str(r) for r in residuals]


def test_c1zero_display_agrees():
    for seed in range(3):
        c = sample_integrable("c1zero", seed=seed)
        assert recursion_matrix(c, "C1ZERO") == recursion_display_matrix(c, "C1ZERO")


def test_c2zero_display_differs_unless_c1_is_one():
    c = sample_integrable("c2zero", seed=0)
    assert c.c1 != 1
    A, B = recursion_matrix(c, "C2ZERO"), recursion_display_matrix(c, "C2ZERO")
    assert A[0, 0] != B[0, 0]
    assert (A[0, 1], A[1, 0], A[1, 1]) == (B[0, 1], B[1, 0], B[1, 1])
    # the specialized form satisfies the factor relations
    assert recursion_consistency(c, "C2ZERO")[0]
    one = c.with_(c1=1)
    from hirota.ma_family import solve_integrable
    vals = list(one.values)
    vals[7] = solve_integrable(Case.C2ZERO, vals)
    one = MACoefficients(tuple(vals))
    assert recursion_matrix(one, "C2ZERO") == recursion_display_matrix(one, "C2ZERO")

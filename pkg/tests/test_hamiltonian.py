import random
from fractions import Fraction

import pytest

from hirota.diffop import DiffOperator, OperatorMatrix
from hirota.errors import CaseError, ConstraintError, VariantError
from hirota.hamiltonian import (Second, b_derivatives_check, build_first_structure,
                                build_second_structure, c9_expected, compatible_structures,
                                j1b1_relation, s0_independence, second_operator, skew_adjoint_check,
                                tri_solve, verify_RJ0, verify_flow)
from hirota.jetpoly import DEFAULT_RING as R
from hirota.ma_family import (CANONICAL, MACoefficients, build_model, integrability_residual,
                              random_rational, sample_integrable)
from hirota.variational import euler_variational

u, v = R.u, R.v
M = DiffOperator.multiplication
D1, D2 = DiffOperator.D(1, R), DiffOperator.D(2, R)
CASES = ["generic", "c1zero", "c2zero", "c3zero"]


def on_structure(c, which):
    return c.with_(c9=c9_expected(c, which))


def test_compatible_structures():
    assert compatible_structures("generic") == [Second.J1, Second.J1PRIME]
    assert compatible_structures("c3zero") == [Second.J1SPECIAL]
    assert compatible_structures("linear") == []


def test_j0_inverts_k():
    for c in (CANONICAL, sample_integrable("c1zero", seed=3)):
        h = build_first_structure(c)
        I = OperatorMatrix.identity(R)
        assert h.J0 @ h.K == I
        assert h.K @ h.J0 == I


def test_j0_lower_right_entry():
    c = sample_integrable("generic", seed=1)
    h = build_first_structure(c)
    expected = (c.c1 * (M(u(0, 1, 1)) @ D1 - M(u(0, 2, 0)) @ D2)
                + c.c2 * (M(u(0, 0, 2)) @ D1 - M(u(0, 1, 1)) @ D2) + c.c4 * D1 + c.c5 * D2)
    assert h.J0[1, 1] == expected


def test_lagrangian_variation_gives_second_equation():
    c = sample_integrable("generic", seed=2)
    h = build_first_structure(c)
    assert euler_variational(h.L2, "V") == u(1, 0, 0) - v()


def test_momentum_is_partial_of_lagrangian():
    from hirota.jetpoly import JetCoordinate
    h = build_first_structure(CANONICAL)
    assert h.L2.diff(JetCoordinate(0, 1, 0, 0)) == h.pi_u


@pytest.mark.parametrize("case", CASES)
def test_first_flow(case):
    for seed in range(5):
        c = sample_integrable(case, seed=seed)
        m = build_model(c)
        h = build_first_structure(c, m)
        r = verify_flow(h.J0, h.H1, m)
        assert r.holds, r.residual_text()
        assert r.methods == ("direct", "direct")


def test_canonical_c9_values():
    assert c9_expected(CANONICAL, "J1") == -1
    assert c9_expected(CANONICAL, "J1PRIME") == -1
    assert CANONICAL.c9 == -1


def test_c3zero_c9_formula():
    c = sample_integrable("c3zero", seed=6)
    c1, c2, c4, c5, c6, c8 = c.c1, c.c2, c.c4, c.c5, c.c6, c.c8
    assert c9_expected(c, "J1SPECIAL") == (c1 * c4 * c8 - c2 * c5 * c6) / (c1 * c2)


def test_constraint_mismatch():
    bad = CANONICAL.with_(c9=0)
    with pytest.raises(ConstraintError) as e:
        build_second_structure(bad, "J1")
    assert e.value.expected == -1 and e.value.actual == 0
    with pytest.raises(VariantError):
        build_second_structure(sample_integrable("c3zero", seed=0), "J1")


def test_shifted_c9_leaves_constant_residual():
    c = CANONICAL.with_(c9=CANONICAL.c9 + 1)
    m = build_model(c)
    s = build_second_structure(c, "J1", check_constraint=False, model=m)
    r = verify_flow(s.J, s.H0, m)
    assert not r.holds
    assert r.residuals[0].is_zero()
    assert r.residuals[1] == R.const(-1)


@pytest.mark.parametrize("which", list(Second))
def test_second_flows(which):
    case = {Second.J1: ["generic", "c2zero"], Second.J1PRIME: ["generic", "c1zero"],
            Second.J1SPECIAL: ["c3zero"]}[which]
    for name in case:
        for seed in range(4):
            c = on_structure(sample_integrable(name, seed=seed), which)
            m = build_model(c)
            s = build_second_structure(c, which, s0=Fraction(seed, 3), model=m)
            r = verify_flow(s.J, s.H0, m)
            assert r.holds, r.residual_text()


@pytest.mark.parametrize("which,case", [("J1", "generic"), ("J1", "c2zero"), ("J1PRIME", "generic"),
                                        ("J1PRIME", "c1zero"), ("J1SPECIAL", "c3zero")])
def test_recursion_maps_first_to_second(which, case):
    for seed in range(3):
        c = sample_integrable(case, seed=seed)
        ok, res = verify_RJ0(c, which)
        assert ok, str(res)


@pytest.mark.parametrize("which,case", [("J1", "generic"), ("J1PRIME", "c1zero"),
                                        ("J1SPECIAL", "c3zero")])
def test_lower_right_through_b1(which, case):
    for seed in range(3):
        assert j1b1_relation(sample_integrable(case, seed=seed), which)[0]


@pytest.mark.parametrize("which,case", [("J1", "generic"), ("J1", "c2zero"), ("J1PRIME", "generic"),
                                        ("J1PRIME", "c1zero"), ("J1SPECIAL", "c3zero")])
def test_density_derivatives_and_s0(which, case):
    for seed in range(3):
        c = sample_integrable(case, seed=seed)
        assert b_derivatives_check(c, which)
        assert s0_independence(c, which)


def test_tri_solve_canonical():
    assert tri_solve(1, 1, 1, 1, 1, 1) == (-1, 3, -1)


def test_tri_solve_random_draws():
    rng = random.Random(2024)
    for _ in range(20):
        c1, c2, c3 = (random_rational(rng, nonzero=True) for _ in range(3))
        c5, c6, c8 = (random_rational(rng) for _ in range(3))
        c4, c7, c9 = tri_solve(c1, c2, c3, c5, c6, c8)
        c = MACoefficients.of(c1, c2, c3, c4, c5, c6, c7, c8, c9)
        assert integrability_residual(c) == 0
        for which in ("J1", "J1PRIME"):
            assert c9_expected(c, which) == c9
            m = build_model(c)
            s = build_second_structure(c, which, model=m)
            assert verify_flow(s.J, s.H0, m).holds


@pytest.mark.parametrize("zero_at", range(3))
def test_tri_solve_needs_nonzero_pivots(zero_at):
    args = [1, 2, 3, 1, 1, 1]
    args[zero_at] = 0
    with pytest.raises(CaseError):
        tri_solve(*args)


def test_skew_adjointness():
    c = CANONICAL
    h = build_first_structure(c)
    assert skew_adjoint_check(h.K) and skew_adjoint_check(h.J0)
    for which in ("J1", "J1PRIME"):
        assert skew_adjoint_check(second_operator(c, which))
    assert skew_adjoint_check(second_operator(sample_integrable("c3zero", seed=2), "J1SPECIAL"))
    J0 = h.J0
    broken = OperatorMatrix([[J0[0, 0], J0[0, 1]], [J0[1, 0], J0[1, 1] + M(u(0, 1, 0))]])
    assert skew_adjoint_check(broken) is False

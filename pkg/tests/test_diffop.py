from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from hirota.diffop import (DiffOperator, OperatorMatrix, apply_operator, compose_commutator,
                           formal_adjoint, normalize_direction, operator_equal)
from hirota.errors import NormalizationError, UnsupportedAdjointError, UnsupportedApplicationError
from hirota.jetpoly import DEFAULT_RING as R
from strategies import constant_ops, directions, local_ops, polys, rationals

u, v = R.u, R.v
M = DiffOperator.multiplication
D1, D2, Dt = (DiffOperator.D(a, R) for a in (1, 2, 0))
I = DiffOperator.identity(R)


def L1():
    return M(u(0, 1, 1)) @ D1 - M(u(0, 2, 0)) @ D2


def L2():
    return M(u(0, 0, 2)) @ D1 - M(u(0, 1, 1)) @ D2


def test_apply_l_operator():
    assert apply_operator(L1(), u()) == u(0, 1, 1) * u(0, 1, 0) - u(0, 2, 0) * u(0, 0, 1)


def test_apply_constant_operator_to_z2():
    A1 = Dt - D2
    assert A1.apply(R.z(2)) == R.const(-1)


def test_apply_nabla():
    c1, c2 = Fraction(2), Fraction(-3, 5)
    assert DiffOperator.nabla(c1, c2, R).apply(u()) == c1 * u(0, 1, 0) + c2 * u(0, 0, 1)


def test_apply_nonlocal_rejected():
    Ni = DiffOperator.nabla_inv(1, 1, R)
    with pytest.raises(UnsupportedApplicationError, match="Ninv"):
        apply_operator(Ni @ D2, u())


def test_compose_leibniz_example():
    out = compose_commutator(D1, M(u(0, 0, 1)) @ D2)
    assert out == M(u(0, 1, 1)) @ D2 + M(u(0, 0, 1)) @ D1 @ D2


def test_commutator_example():
    assert compose_commutator(D1, M(u(0, 1, 0)) @ D2, "COMMUTATOR") == M(u(0, 2, 0)) @ D2


def test_constant_factors_commute():
    c1, c2, c3 = Fraction(2), Fraction(3), Fraction(-1, 2)
    A1 = c1 * Dt - c3 * D2
    A2 = -(c2 * Dt + c3 * D1)
    assert A1.commutator(A2).is_zero()


def test_adjoint_examples():
    assert formal_adjoint(D1) == -D1
    assert L2().adjoint() == -L2()
    assert L1().adjoint() == -L1()


def test_nonlocal_adjoint_pair():
    c3 = Fraction(5, 3)
    Ni = DiffOperator.nabla_inv(1, 2, R)
    X = c3 * (Ni @ D2)
    # product of two commuting skew operators is self-adjoint
    assert X.adjoint() == X
    Z = DiffOperator.zero(R)
    J = OperatorMatrix([[Z, X], [-X, Z]])
    assert J.adjoint() == -J
    assert Ni.adjoint() == -Ni


def test_variable_nonlocal_adjoint_unsupported():
    Ni = DiffOperator.nabla_inv(1, 1, R)
    op = Ni @ M(u(0, 1, 0))
    with pytest.raises(UnsupportedAdjointError):
        op.adjoint()


def test_equalities():
    a = L1() + 3 * D2
    assert operator_equal(a, a) == (True, DiffOperator.zero(R))
    N, Ni = DiffOperator.nabla(2, 3, R), DiffOperator.nabla_inv(2, 3, R)
    assert operator_equal(N @ Ni, I)[0]
    assert operator_equal(Ni @ N, I)[0]
    assert operator_equal(D1 @ D2, D2 @ D1)[0]
    ok, res = operator_equal(D1, D2)
    assert not ok and res == D1 - D2


def test_direction_normalization():
    d, s = normalize_direction(Fraction(4), Fraction(6))
    assert d == (1, Fraction(3, 2)) and s == 4
    assert DiffOperator.nabla_inv(4, 6, R) == DiffOperator.nabla_inv(1, Fraction(3, 2), R) / 4
    assert str(DiffOperator.nabla_inv(1, 1, R) @ D2) == "Ninv(1,1)∘(D[0,0,1])"


def test_depth_two_rejected():
    Ni = DiffOperator.nabla_inv(1, 1, R)
    with pytest.raises(NormalizationError):
        Ni @ M(u(0, 1, 0)) @ Ni @ D2


def test_text_form():
    assert str(L2()) == "u[0,0,2]*D[0,1,0] - u[0,1,1]*D[0,0,1]"


@given(local_ops(), local_ops(), polys())
@settings(max_examples=60)
def test_composition_matches_application(a, b, p):
    assert (a @ b).apply(p) == a.apply(b.apply(p))


@given(local_ops())
@settings(max_examples=60)
def test_adjoint_involution(a):
    assert a.adjoint().adjoint() == a


@given(local_ops(max_terms=2), local_ops(max_terms=2), local_ops(max_terms=2))
@settings(max_examples=40)
def test_jacobi(a, b, c):
    j = a.commutator(b).commutator(c) + b.commutator(c).commutator(a) + c.commutator(a).commutator(b)
    assert j.is_zero()


@given(directions, constant_ops, rationals)
@settings(max_examples=60)
def test_nabla_cancels_on_both_sides(d, q, k):
    N, Ni = DiffOperator.nabla(*d, R), DiffOperator.nabla_inv(*d, R)
    term = Ni @ (q + k * I)
    assert N @ term == q + k * I
    assert term @ N == q + k * I


@given(directions, constant_ops)
@settings(max_examples=60)
def test_nonlocal_adjoint_involution(d, q):
    op = DiffOperator.nabla_inv(*d, R) @ q
    assert op.adjoint().adjoint() == op


@given(directions, constant_ops, constant_ops)
@settings(max_examples=40)
def test_inverse_commutes_with_constant_operators(d, q, r):
    Ni = DiffOperator.nabla_inv(*d, R)
    assert (Ni @ q) @ r == r @ (Ni @ q)

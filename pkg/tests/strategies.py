"""Hypothesis strategies for jet polynomials and operators."""

from fractions import Fraction

from hypothesis import strategies as st

from hirota.diffop import DiffOperator
from hirota.jetpoly import DEFAULT_RING, JetPolynomial

R = DEFAULT_RING

rationals = st.builds(Fraction, st.integers(-6, 6), st.integers(1, 3))
nonzero_rationals = rationals.filter(bool)

jet_vars = st.tuples(st.integers(0, 1), st.integers(0, 1), st.integers(0, 2), st.integers(0, 2))
z_vars = st.sampled_from([(2, 1), (2, 2)])
any_vars = st.one_of(jet_vars, jet_vars, z_vars)


def _mono(vars_):
    p = R.one()
    for v in vars_:
        p = p * R.var(v)
    return p


monomials = st.lists(any_vars, max_size=3).map(_mono)
jet_monomials = st.lists(jet_vars, max_size=2).map(_mono)


@st.composite
def polys(draw, max_terms=4, mono=monomials):
    terms = draw(st.lists(st.tuples(rationals, mono), max_size=max_terms))
    p = R.zero()
    for c, m in terms:
        p = p + m * c
    return p


words = st.tuples(st.integers(0, 1), st.integers(0, 2), st.integers(0, 2))


@st.composite
def local_ops(draw, max_terms=3, coeffs=None):
    if coeffs is None:
        coeffs = polys(max_terms=2, mono=jet_monomials)
    op = DiffOperator.zero(R)
    for _ in range(draw(st.integers(0, max_terms))):
        op = op + DiffOperator.derivative(draw(words), R, draw(coeffs))
    return op


constant_ops = local_ops(coeffs=rationals.map(R.const))

directions = st.tuples(rationals, rationals).filter(lambda d: d != (0, 0))

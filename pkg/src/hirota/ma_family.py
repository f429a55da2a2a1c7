"""The symplectic Monge-Ampere family ``u_tt = f(u_t1, u_t2, u_11, u_12, u_22)``.

One-field expressions use jets of ``u`` with time derivatives; the
two-component system lives on jets of ``u`` and ``v = u_t``.  ``embed``
passes from the former to the latter, ``on_shell_reduce`` additionally
eliminates ``v_t`` and its prolongations through the evolution equation.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from fractions import Fraction
from typing import Mapping

from .diffop import ID_WORD, DiffOperator, OperatorMatrix
from .errors import CaseError, InternalConsistencyError, ValidationError
from .jetpoly import DEFAULT_RING, Field, JetPolynomial, JetRing, replace_variables

__all__ = [
    "Case",
    "MACoefficients",
    "GeneralMACoefficients",
    "ModelBundle",
    "build_model",
    "embed",
    "on_shell_reduce",
    "integrability_residual",
    "intcon_residual",
    "general_residual",
    "sample_integrable",
    "perturb_off_surface",
    "random_rational",
    "SOLVED_INDEX",
    "CANONICAL",
]


class Case(str, Enum):
    GENERIC = "generic"
    C1ZERO = "c1zero"
    C2ZERO = "c2zero"
    C3ZERO = "c3zero"
    # c1 = c2 = 0: integrability forces c3 = 0 and the equation is linear
    LINEAR = "linear"


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError("coefficients must be exact; got a float")
    return Fraction(x)


def infer_case(c) -> Case:
    c1, c2, c3 = c[0], c[1], c[2]
    if c1 == 0 and c2 == 0:
        return Case.LINEAR
    if c1 == 0:
        return Case.C1ZERO
    if c2 == 0:
        return Case.C2ZERO
    if c3 == 0:
        return Case.C3ZERO
    return Case.GENERIC


def _case_ok(case: Case, c) -> bool:
    c1, c2, c3 = c[0], c[1], c[2]
    return {
        Case.GENERIC: c1 != 0 and c2 != 0 and c3 != 0,
        Case.C1ZERO: c1 == 0 and c2 != 0,
        Case.C2ZERO: c2 == 0 and c1 != 0,
        Case.C3ZERO: c3 == 0 and c1 != 0 and c2 != 0,
        Case.LINEAR: c1 == 0 and c2 == 0,
    }[case]


@dataclass(frozen=True)
class MACoefficients:
    """Exact coefficients ``c1..c9`` with a case tag (inferred when omitted)."""

    values: tuple
    case: Case = None

    def __post_init__(self):
        vals = tuple(_frac(x) for x in self.values)
        if len(vals) != 9:
            raise ValidationError(f"expected 9 coefficients, got {len(vals)}")
        object.__setattr__(self, "values", vals)
        case = infer_case(vals) if self.case is None else Case(self.case)
        if not _case_ok(case, vals):
            raise ValidationError(f"coefficients {format_vector(vals)} violate case {case.value}")
        object.__setattr__(self, "case", case)

    @classmethod
    def of(cls, *values, case=None) -> "MACoefficients":
        return cls(tuple(values), case)

    def __getitem__(self, i: int) -> Fraction:
        """1-based access: ``c[1]`` is c1."""
        if not 1 <= i <= 9:
            raise IndexError("coefficients are numbered 1..9")
        return self.values[i - 1]

    def __getattr__(self, name):
        if len(name) == 2 and name[0] == "c" and name[1].isdigit():
            return self.values[int(name[1]) - 1]
        raise AttributeError(name)

    def with_(self, case=None, **kw) -> "MACoefficients":
        vals = list(self.values)
        for k, v in kw.items():
            vals[int(k[1:]) - 1] = _frac(v)
        return MACoefficients(tuple(vals), case)

    @property
    def is_integrable(self) -> bool:
        return intcon_residual(self) == 0

    def to_dict(self) -> dict:
        d = {f"c{i + 1}": fmt_rational(v) for i, v in enumerate(self.values)}
        d["case"] = self.case.value
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: Mapping) -> "MACoefficients":
        try:
            vals = tuple(Fraction(str(d[f"c{i}"])) for i in range(1, 10))
        except KeyError as e:
            raise ValidationError(f"missing coefficient {e.args[0]}") from None
        except (ValueError, ZeroDivisionError) as e:
            raise ValidationError(f"bad rational: {e}") from None
        return cls(vals, d.get("case"))

    @classmethod
    def from_json(cls, text: str) -> "MACoefficients":
        return cls.from_dict(json.loads(text))

    def __str__(self):
        return f"{format_vector(self.values)} [{self.case.value}]"


def fmt_rational(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def format_vector(vals) -> str:
    return "(" + ", ".join(fmt_rational(v) for v in vals) + ")"


CANONICAL = MACoefficients.of(1, 1, 1, -1, 1, 1, 3, 1, -1)


@dataclass(frozen=True)
class GeneralMACoefficients:
    """Constant coefficients of the general symplectic Monge-Ampere equation in three variables."""

    eps: Fraction = Fraction(0)
    h1: Fraction = Fraction(0)
    h2: Fraction = Fraction(0)
    h3: Fraction = Fraction(0)
    g1: Fraction = Fraction(0)
    g2: Fraction = Fraction(0)
    g3: Fraction = Fraction(0)
    s1: Fraction = Fraction(0)
    s2: Fraction = Fraction(0)
    s3: Fraction = Fraction(0)
    tau1: Fraction = Fraction(0)
    tau2: Fraction = Fraction(0)
    tau3: Fraction = Fraction(0)
    nu: Fraction = Fraction(0)

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, _frac(getattr(self, f.name)))

    @classmethod
    def from_ma(cls, c: MACoefficients) -> "GeneralMACoefficients":
        """Identify ``(z1, z2, t)`` with the three independent variables.

        The Hessian-minor ``u11 u22 - u12^2`` carries ``c3``, so ``h3 = c3``;
        there is no cubic determinant, so ``eps = 0``.
        """
        return cls(eps=0, h1=0, h2=0, h3=c.c3, g1=-c.c1, g2=c.c2, g3=0,
                   s1=c.c6, s2=c.c8, s3=-1, tau1=c.c5, tau2=c.c4, tau3=c.c7, nu=c.c9)


def general_residual(g: GeneralMACoefficients) -> Fraction:
    e, h1, h2, h3 = g.eps, g.h1, g.h2, g.h3
    g1, g2, g3 = g.g1, g.g2, g.g3
    s1, s2, s3 = g.s1, g.s2, g.s3
    t1, t2, t3, nu = g.tau1, g.tau2, g.tau3, g.nu
    return (
        h1**2 * s1**2 + h2**2 * s2**2 + h3**2 * s3**2
        + g1**2 * s2 * s3 + g2**2 * s1 * s3 + g3**2 * s1 * s2
        - 2 * (h1 * h2 * s1 * s2 + h1 * h3 * s1 * s3 + h2 * h3 * s2 * s3)
        + 4 * e * s1 * s2 * s3 + 4 * nu * h1 * h2 * h3
        + e * t1 * t2 * t3 - nu * g1 * g2 * g3 - e**2 * nu**2
        - nu * (g1**2 * h1 + g2**2 * h2 + g3**2 * h3)
        - (g1 * t1 + g2 * t2 + g3 * t3 + 2 * e * nu) * (h1 * s1 + h2 * s2 + h3 * s3 - e * nu)
        + 2 * (g1 * h1 * s1 * t1 + g2 * h2 * s2 * t2 + g3 * h3 * s3 * t3)
        + t1**2 * h2 * h3 + t2**2 * h1 * h3 + t3**2 * h1 * h2
        - e * (t1**2 * s1 + t2**2 * s2 + t3**2 * s3)
        + s1 * t1 * g2 * g3 + s2 * t2 * g1 * g3 + s3 * t3 * g1 * g2
        - (g1 * h1 * t2 * t3 + g2 * h2 * t1 * t3 + g3 * h3 * t1 * t2)
    )


def intcon_residual(c: MACoefficients) -> Fraction:
    c1, c2, c3, c4, c5, c6, c7, c8, _ = c.values
    return c2 * (c1 * c7 - c2 * c6 + c3 * c4) - c1 * (c1 * c8 + c3 * c5) + c3**2


def integrability_residual(x) -> Fraction:
    """Integrability residual; for the family both evaluation routes must agree."""
    if isinstance(x, GeneralMACoefficients):
        return general_residual(x)
    direct = intcon_residual(x)
    mapped = general_residual(GeneralMACoefficients.from_ma(x))
    if direct != mapped:
        raise InternalConsistencyError(
            f"direct residual {direct} disagrees with the mapped residual {mapped}")
    return direct


# sampling -------------------------------------------------------------------

SOLVED_INDEX = {Case.GENERIC: 7, Case.C1ZERO: 6, Case.C2ZERO: 8, Case.C3ZERO: 7}


def random_rational(rng: random.Random, nonzero: bool = False) -> Fraction:
    while True:
        n = rng.randint(-9, 9)
        if n or not nonzero:
            return Fraction(n, rng.randint(1, 4))


def solve_integrable(case: Case, c: list) -> Fraction:
    """Value of the case's solved coefficient making the residual vanish."""
    c1, c2, c3, c4, c5, c6, c7, c8 = c[:8]
    try:
        if case == Case.GENERIC:
            return (c1 * (c1 * c8 + c3 * c5) - c3**2 + c2**2 * c6 - c2 * c3 * c4) / (c1 * c2)
        if case == Case.C1ZERO:
            return (c3**2 + c2 * c3 * c4) / c2**2
        if case == Case.C2ZERO:
            return (c3**2 - c1 * c3 * c5) / c1**2
        if case == Case.C3ZERO:
            return (c1**2 * c8 + c2**2 * c6) / (c1 * c2)
    except ZeroDivisionError:
        raise CaseError(f"vanishing pivot while solving the {case.value} relation") from None
    raise CaseError(f"no solved coefficient for case {Case(case).value}")


def sample_integrable(case, seed=None, rng: random.Random | None = None,
                      hamiltonian: str | None = None) -> MACoefficients:
    """Random integrable coefficients for ``case``.

    ``hamiltonian`` in ``{"J1", "J1PRIME", "J1SPECIAL"}`` also fixes ``c9`` by
    that structure's constraint.
    """
    case = Case(case)
    if case == Case.LINEAR:
        raise CaseError("the linear case has no free integrable sampling")
    rng = rng or random.Random(seed)
    c = [random_rational(rng) for _ in range(9)]
    pivots = {Case.GENERIC: (0, 1, 2), Case.C1ZERO: (1, 2), Case.C2ZERO: (0, 2),
              Case.C3ZERO: (0, 1)}[case]
    for i in pivots:
        c[i] = random_rational(rng, nonzero=True)
    if case == Case.C1ZERO:
        c[0] = Fraction(0)
    elif case == Case.C2ZERO:
        c[1] = Fraction(0)
    elif case == Case.C3ZERO:
        c[2] = Fraction(0)
    c[SOLVED_INDEX[case] - 1] = solve_integrable(case, c)
    out = MACoefficients(tuple(c), case)
    if hamiltonian:
        from .hamiltonian import c9_expected
        out = out.with_(c9=c9_expected(out, hamiltonian))
    return out


def perturb_off_surface(c: MACoefficients, delta=1) -> MACoefficients:
    """Shift the case's solved coefficient so the residual becomes nonzero."""
    idx = SOLVED_INDEX[c.case]
    return c.with_(**{f"c{idx}": c[idx] + delta})


# jets -----------------------------------------------------------------------

def one_field_rhs(c: MACoefficients, ring: JetRing = DEFAULT_RING) -> JetPolynomial:
    u = ring.u
    c1, c2, c3, c4, c5, c6, c7, c8, c9 = c.values
    ut1, ut2 = u(1, 1, 0), u(1, 0, 1)
    u11, u12, u22 = u(0, 2, 0), u(0, 1, 1), u(0, 0, 2)
    return (c1 * (ut1 * u12 - ut2 * u11) + c2 * (ut1 * u22 - ut2 * u12)
            + c3 * (u11 * u22 - u12 * u12) + c4 * ut1 + c5 * ut2
            + c6 * u11 + c7 * u12 + c8 * u22 + ring.const(c9))


def _embed_var(ring):
    def fn(var):
        if var[0] == Field.U and var[1] >= 1:
            return ring.v(var[1] - 1, var[2], var[3])
        return None
    return fn


def embed(x):
    """Rewrite ``u`` jets carrying time derivatives through ``u_t = v`` (prolonged)."""
    if isinstance(x, JetPolynomial):
        return replace_variables(x, _embed_var(x.ring))
    if isinstance(x, DiffOperator):
        return x.map_coefficients(embed)
    if isinstance(x, OperatorMatrix):
        return x.map_entries(embed)
    raise TypeError(f"cannot embed {type(x).__name__}")


class _ShellReducer:
    """Cached replacement table for ``u_t -> v`` and ``v_t -> vt_expr`` (prolonged)."""

    def __init__(self, vt_expr: JetPolynomial):
        self.ring = vt_expr.ring
        self.vt = vt_expr
        self.cache: dict = {}

    def rep(self, var):
        if var[0] >= 2 or var[1] == 0:
            return None
        r = self.cache.get(var)
        if r is not None:
            return r
        f, nt, n1, n2 = var
        if f == Field.U:
            r = self.ring.v(nt - 1, n1, n2)
            if nt > 1:
                r = self.rep((Field.V, nt - 1, n1, n2))
        elif nt == 1:
            r = self.vt.Dword((0, n1, n2))
        else:
            prev = self.rep((Field.V, nt - 1, n1, n2))
            r = self.reduce(prev.total_derivative(0))
        self.cache[var] = r
        return r

    def reduce(self, p: JetPolynomial) -> JetPolynomial:
        return replace_variables(p, self.rep)


@dataclass(frozen=True, eq=False)
class ModelBundle:
    coeffs: MACoefficients
    ring: JetRing
    rhs_u: JetPolynomial          # one-field right side in u-jets
    rhs_one: JetPolynomial        # the same with u_t -> v
    F: JetPolynomial              # -u_tt + rhs_u
    system: tuple                 # (u_t expr, v_t expr)
    symmetry_op: DiffOperator     # embedded linearization of F
    nabla_c: DiffOperator
    L1: DiffOperator
    L2: DiffOperator
    Lt: DiffOperator
    _reducer: _ShellReducer = field(repr=False, default=None)

    @property
    def vt_expr(self) -> JetPolynomial:
        return self.system[1]

    def reduce(self, x):
        return on_shell_reduce(x, self)


def l_operators(ring: JetRing = DEFAULT_RING):
    u, v = ring.u, ring.v
    M, D = DiffOperator.multiplication, DiffOperator.D
    L1 = M(u(0, 1, 1)) @ D(1, ring) - M(u(0, 2, 0)) @ D(2, ring)
    L2 = M(u(0, 0, 2)) @ D(1, ring) - M(u(0, 1, 1)) @ D(2, ring)
    Lt = M(v(0, 0, 1)) @ D(1, ring) - M(v(0, 1, 0)) @ D(2, ring)
    return L1, L2, Lt


def build_model(c: MACoefficients, ring: JetRing = DEFAULT_RING) -> ModelBundle:
    from .variational import frechet

    if not isinstance(c, MACoefficients):
        raise ValidationError("MACoefficients expected")
    rhs_u = one_field_rhs(c, ring)
    F = rhs_u - ring.u(2, 0, 0)
    rhs_one = embed(rhs_u)
    L1, L2, Lt = l_operators(ring)
    return ModelBundle(
        coeffs=c, ring=ring, rhs_u=rhs_u, rhs_one=rhs_one, F=F,
        system=(ring.v(), rhs_one),
        symmetry_op=embed(frechet(F, "U")),
        nabla_c=DiffOperator.nabla(c.c1, c.c2, ring) if (c.c1 or c.c2)
        else DiffOperator.zero(ring),
        L1=L1, L2=L2, Lt=Lt,
        _reducer=_ShellReducer(rhs_one),
    )


def symmetry_operator_from_l(c: MACoefficients, m: ModelBundle) -> DiffOperator:
    """The linearized equation assembled from the ``L`` operators (independent route)."""
    ring = m.ring
    D = lambda *ax: DiffOperator.derivative(tuple(ax.count(i) for i in range(3)), ring)
    c1, c2, c3, c4, c5, c6, c7, c8, _ = c.values
    op = (c1 * (D(0) @ m.L1 - D(1) @ m.Lt) + c2 * (D(0) @ m.L2 - D(2) @ m.Lt)
          + c3 * (D(1) @ m.L2 - D(2) @ m.L1) - D(0, 0)
          + c4 * D(1, 0) + c5 * D(2, 0) + c6 * D(1, 1) + c7 * D(1, 2) + c8 * D(2, 2))
    return embed(op)


def on_shell_reduce(x, m: ModelBundle):
    """Eliminate all time-derivative jets using the two-component system."""
    red = m._reducer
    if isinstance(x, JetPolynomial):
        return red.reduce(x)
    if isinstance(x, DiffOperator):
        return x.map_coefficients(red.reduce)
    if isinstance(x, OperatorMatrix):
        return x.map_entries(lambda e: e.map_coefficients(red.reduce))
    raise TypeError(f"cannot reduce {type(x).__name__}")

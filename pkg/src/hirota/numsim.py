"""Pseudo-spectral integration of the two-component system on the torus [0, 2pi)^2.

Fields are carried as ``rfft2`` coefficients.  Derivatives are Fourier
multipliers (odd derivatives vanish on the Nyquist row/column), products are
formed on the grid, and with ``dealias=True`` every product and every right
side is truncated to the 2/3-rule band so quadratic terms are alias-free.
Time stepping is classical RK4.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .diffop import DiffOperator
from .errors import BlowUpError, DomainError, UnsupportedApplicationError
from .jetpoly import JetPolynomial
from .ma_family import MACoefficients

__all__ = [
    "Grid",
    "FieldState",
    "SymmetryFields",
    "KernelWarning",
    "CFLWarning",
    "evolve",
    "functional_eval",
    "invert_nabla_c",
    "nabla_c",
    "linearized_evolve",
    "recursion_apply_numeric",
    "recursion_residual",
    "apply_operator_numeric",
    "fourier_field",
]


class KernelWarning(RuntimeWarning):
    """Data carries energy on modes annihilated by nabla_c."""


class CFLWarning(RuntimeWarning):
    pass


class Grid:
    """Uniform ``n1 x n2`` grid with wavenumber tables and a 2/3-rule mask."""

    def __init__(self, n1: int, n2: int | None = None):
        n2 = n1 if n2 is None else n2
        for n in (n1, n2):
            if n < 4 or n & (n - 1):
                raise ValueError(f"grid sizes must be powers of two >= 4, got {n}")
        self.n1, self.n2 = n1, n2
        self.k1 = np.fft.fftfreq(n1, 1.0 / n1)[:, None]
        self.k2 = np.fft.rfftfreq(n2, 1.0 / n2)[None, :]
        # odd-order derivative multipliers drop the Nyquist wavenumber
        self.k1_odd = self.k1.copy()
        self.k1_odd[n1 // 2, 0] = 0.0
        self.k2_odd = self.k2.copy()
        self.k2_odd[0, -1] = 0.0
        self.mask = (np.abs(self.k1) <= n1 // 3) & (self.k2 <= n2 // 3)
        z1 = 2 * np.pi * np.arange(n1) / n1
        z2 = 2 * np.pi * np.arange(n2) / n2
        self.z1, self.z2 = np.meshgrid(z1, z2, indexing="ij")
        self.cell = (2 * np.pi / n1) * (2 * np.pi / n2)
        self._mult: dict = {}

    @property
    def shape(self):
        return (self.n1, self.n2)

    def fft(self, f: np.ndarray) -> np.ndarray:
        return np.fft.rfft2(f)

    def ifft(self, fh: np.ndarray) -> np.ndarray:
        return np.fft.irfft2(fh, s=self.shape)

    def multiplier(self, a: int, b: int) -> np.ndarray:
        key = (a, b)
        m = self._mult.get(key)
        if m is None:
            m1 = (1j * (self.k1_odd if a % 2 else self.k1)) ** a
            m2 = (1j * (self.k2_odd if b % 2 else self.k2)) ** b
            m = m1 * m2
            self._mult[key] = m
        return m

    def deriv_hat(self, fh: np.ndarray, a: int, b: int) -> np.ndarray:
        if a == 0 and b == 0:
            return fh
        return fh * self.multiplier(a, b)

    def deriv(self, fh: np.ndarray, a: int, b: int) -> np.ndarray:
        return self.ifft(self.deriv_hat(fh, a, b))

    def nabla_symbol(self, c1, c2) -> np.ndarray:
        return 1j * (float(c1) * self.k1_odd + float(c2) * self.k2_odd)

    def kernel(self, c1, c2) -> np.ndarray:
        s = np.abs(float(c1) * self.k1_odd + float(c2) * self.k2_odd)
        return s < 1e-9 * (abs(float(c1)) + abs(float(c2)))


@dataclass
class FieldState:
    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def copy(self) -> "FieldState":
        return FieldState(self.u.copy(), self.v.copy(), self.t)


@dataclass
class SymmetryFields:
    phi: np.ndarray
    psi: np.ndarray
    phi_tilde: np.ndarray | None = None
    psi_tilde: np.ndarray | None = None
    notes: dict = field(default_factory=dict)


def fourier_field(grid: Grid, modes) -> np.ndarray:
    """Real field ``sum a cos(k1 z1 + k2 z2) + b sin(...)`` from ``[k1, k2, a, b]`` entries."""
    f = np.zeros(grid.shape)
    for k1, k2, a, b in modes:
        ph = k1 * grid.z1 + k2 * grid.z2
        f += float(a) * np.cos(ph) + float(b) * np.sin(ph)
    return f


def _coeffs(c: MACoefficients):
    return [float(x) for x in c.values]


# jet evaluation --------------------------------------------------------------

class _JetFields:
    """Grid values of spatial jets of ``u`` and ``v`` (cached per coordinate)."""

    def __init__(self, grid: Grid, uh: np.ndarray, vh: np.ndarray):
        self.grid = grid
        self.hats = (uh, vh)
        self.cache: dict = {}

    def get(self, var) -> np.ndarray:
        arr = self.cache.get(var)
        if arr is None:
            f, nt, a, b = var
            if nt:
                raise DomainError("time-derivative jets cannot be evaluated on a single state")
            arr = self.grid.deriv(self.hats[f], a, b)
            self.cache[var] = arr
        return arr

    def poly(self, p: JetPolynomial) -> np.ndarray | float:
        if p.has_explicit_z():
            raise DomainError("explicit z1, z2 are not periodic on the torus")
        total = np.zeros(self.grid.shape)
        for mono, c in p.items():
            term = float(c)
            for var, e in mono:
                if var[0] >= 2:
                    raise DomainError("density carries unbound parameters")
                term = term * self.get(var) ** e
            total = total + term
        return total


def functional_eval(h: JetPolynomial, state: FieldState, grid: Grid | None = None) -> float:
    """Integral of a density over the torus (grid sum times cell area)."""
    grid = grid or Grid(*state.u.shape)
    jf = _JetFields(grid, grid.fft(state.u), grid.fft(state.v))
    return float(np.sum(jf.poly(h)) * grid.cell)


# right sides ------------------------------------------------------------------

class _System:
    def __init__(self, c: MACoefficients, grid: Grid, dealias: bool = True):
        self.c = _coeffs(c)
        self.g = grid
        self.dealias = dealias

    def trunc(self, fh):
        return fh * self.g.mask if self.dealias else fh

    def rhs(self, uh, vh):
        g = self.g
        c1, c2, c3, c4, c5, c6, c7, c8, c9 = self.c
        u11, u12, u22 = g.deriv(uh, 2, 0), g.deriv(uh, 1, 1), g.deriv(uh, 0, 2)
        v1, v2 = g.deriv(vh, 1, 0), g.deriv(vh, 0, 1)
        vt = (v1 * (c1 * u12 + c2 * u22) - v2 * (c1 * u11 + c2 * u12)
              + c3 * (u11 * u22 - u12 * u12) + c4 * v1 + c5 * v2
              + c6 * u11 + c7 * u12 + c8 * u22 + c9)
        return self.trunc(vh), self.trunc(g.fft(vt))

    def lin(self, uh, vh, ph, qh):
        g = self.g
        c1, c2, c3, c4, c5, c6, c7, c8, _ = self.c
        u11, u12, u22 = g.deriv(uh, 2, 0), g.deriv(uh, 1, 1), g.deriv(uh, 0, 2)
        v1, v2 = g.deriv(vh, 1, 0), g.deriv(vh, 0, 1)
        p11, p12, p22 = g.deriv(ph, 2, 0), g.deriv(ph, 1, 1), g.deriv(ph, 0, 2)
        q1, q2 = g.deriv(qh, 1, 0), g.deriv(qh, 0, 1)
        gu1, gu2 = c1 * u11 + c2 * u12, c1 * u12 + c2 * u22
        gp1, gp2 = c1 * p11 + c2 * p12, c1 * p12 + c2 * p22
        qt = (gu2 * q1 + v1 * gp2 - gu1 * q2 - v2 * gp1
              + c3 * (u22 * p11 + u11 * p22 - 2 * u12 * p12)
              + c4 * q1 + c5 * q2 + c6 * p11 + c7 * p12 + c8 * p22)
        return self.trunc(qh), self.trunc(g.fft(qt))

    def cfl_number(self, uh, dt) -> float:
        g = self.g
        c1, c2, c3, c4, c5, c6, c7, c8, _ = self.c
        u11, u12, u22 = g.deriv(uh, 2, 0), g.deriv(uh, 1, 1), g.deriv(uh, 0, 2)
        first = (np.max(np.abs(c1 * u12 + c2 * u22)) + np.max(np.abs(c1 * u11 + c2 * u12))
                 + abs(c4) + abs(c5))
        second = (abs(c6) + abs(c7) + abs(c8)
                  + abs(c3) * (np.max(np.abs(u11)) + np.max(np.abs(u22)) + 2 * np.max(np.abs(u12))))
        kmax = max(g.n1, g.n2) // 3 if self.dealias else max(g.n1, g.n2) // 2
        return dt * kmax * (first + math.sqrt(second))


def _rk4(f: Callable, y: tuple, dt: float) -> tuple:
    k1 = f(*y)
    k2 = f(*(a + 0.5 * dt * b for a, b in zip(y, k1)))
    k3 = f(*(a + 0.5 * dt * b for a, b in zip(y, k2)))
    k4 = f(*(a + dt * b for a, b in zip(y, k3)))
    return tuple(a + dt / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4)
                 for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4))


def _healthy(arrays, threshold) -> bool:
    for a in arrays:
        if not np.all(np.isfinite(a)) or np.max(np.abs(a)) > threshold:
            return False
    return True


RK4_STABILITY = 2.8


@dataclass
class EvolveResult:
    state: FieldState
    series: dict
    flags: list


def evolve(state: FieldState, c: MACoefficients, dt: float, steps: int,
           grid: Grid | None = None, monitor_every: int = 1, dealias: bool = True,
           monitor: JetPolynomial | None = None, blowup_threshold: float = 1e6,
           strict_conservation: bool = False) -> EvolveResult:
    """RK4 integration; ``monitor`` defaults to the first Hamiltonian density.

    The initial data are projected onto the dealiased band.
    """
    grid = grid or Grid(*state.u.shape)
    sys_ = _System(c, grid, dealias)
    flags = []
    if monitor is None:
        from .hamiltonian import build_first_structure
        monitor = build_first_structure(c).H1
    if strict_conservation and c.c9 != 0:
        flags.append("c9 != 0: constant source drives v linearly in time")
    uh = sys_.trunc(grid.fft(state.u))
    vh = sys_.trunc(grid.fft(state.v))
    cfl = sys_.cfl_number(uh, dt)
    if cfl > RK4_STABILITY:
        msg = f"time step likely unstable: CFL estimate {cfl:.3g} > {RK4_STABILITY}"
        warnings.warn(msg, CFLWarning, stacklevel=2)
        flags.append(msg)

    def H(uh_, vh_):
        jf = _JetFields(grid, uh_, vh_)
        return float(np.sum(jf.poly(monitor)) * grid.cell)

    t = state.t
    h0 = H(uh, vh)
    amax = lambda fh: float(np.max(np.abs(grid.ifft(fh))))
    series = {"t": [t], "H1": [h0], "drift": [0.0], "max_abs_u": [amax(uh)], "max_abs_v": [amax(vh)]}
    for n in range(1, steps + 1):
        new = _rk4(sys_.rhs, (uh, vh), dt)
        if not _healthy(new, blowup_threshold * grid.n1 * grid.n2):
            raise BlowUpError(f"solution blew up in step {n} (t = {t + dt:.6g})", last_valid_time=t)
        uh, vh = new
        t = state.t + n * dt
        if n % monitor_every == 0 or n == steps:
            h = H(uh, vh)
            series["t"].append(t)
            series["H1"].append(h)
            series["drift"].append(abs(h - h0) / abs(h0) if h0 else abs(h - h0))
            series["max_abs_u"].append(amax(uh))
            series["max_abs_v"].append(amax(vh))
    return EvolveResult(FieldState(grid.ifft(uh), grid.ifft(vh), t), series, flags)


def linearized_evolve(state: FieldState, sym: SymmetryFields, c: MACoefficients, dt: float,
                      steps: int, grid: Grid | None = None, dealias: bool = True,
                      blowup_threshold: float = 1e6) -> tuple[FieldState, SymmetryFields]:
    """Advance carrier and linearized fields together with one RK4 scheme."""
    grid = grid or Grid(*state.u.shape)
    sys_ = _System(c, grid, dealias)

    def f(uh, vh, ph, qh):
        return sys_.rhs(uh, vh) + sys_.lin(uh, vh, ph, qh)

    y = tuple(sys_.trunc(grid.fft(a)) for a in (state.u, state.v, sym.phi, sym.psi))
    t = state.t
    for n in range(1, steps + 1):
        new = _rk4(f, y, dt)
        if not _healthy(new, blowup_threshold * grid.n1 * grid.n2):
            raise BlowUpError(f"linearized run blew up in step {n}", last_valid_time=t)
        y = new
        t = state.t + n * dt
    u, v, p, q = (grid.ifft(a) for a in y)
    return FieldState(u, v, t), SymmetryFields(p, q)


# nonlocal inversion -------------------------------------------------------------

def nabla_c(f: np.ndarray, c1, c2, grid: Grid | None = None) -> np.ndarray:
    grid = grid or Grid(*f.shape)
    return grid.ifft(grid.fft(f) * grid.nabla_symbol(c1, c2))


def _invert_hat(fh, c1, c2, grid: Grid, tol: float, notes: dict | None = None):
    ker = grid.kernel(c1, c2)
    weights = np.where(grid.k2 == 0, 1.0, 2.0)
    energy = float(np.sum(weights * np.abs(fh) ** 2))
    kern = float(np.sum((weights * np.abs(fh) ** 2)[np.broadcast_to(ker, fh.shape)]))
    frac = kern / energy if energy else 0.0
    if notes is not None:
        notes["kernel_energy"] = max(notes.get("kernel_energy", 0.0), frac)
    if frac > tol:
        warnings.warn(f"{frac:.3g} of the energy sits on the kernel of nabla_c; projected out",
                      KernelWarning, stacklevel=3)
    sym = grid.nabla_symbol(c1, c2)
    out = np.zeros_like(fh)
    np.divide(fh, sym, out=out, where=~np.broadcast_to(ker, fh.shape))
    return out


def invert_nabla_c(f: np.ndarray, c1, c2, grid: Grid | None = None, tol: float = 1e-10) -> np.ndarray:
    """Spectral inverse of ``c1 D1 + c2 D2``; kernel modes are set to zero."""
    grid = grid or Grid(*f.shape)
    return grid.ifft(_invert_hat(grid.fft(f), c1, c2, grid, tol))


# recursion --------------------------------------------------------------------

class _Ops:
    def __init__(self, grid: Grid, dealias: bool):
        self.g = grid
        self.dealias = dealias

    def t(self, fh):
        return fh * self.g.mask if self.dealias else fh

    def d(self, fh, a, b):
        return self.g.deriv(self.t(fh), a, b)

    def hat(self, f):
        return self.t(self.g.fft(f))


def recursion_apply_numeric(state: FieldState, sym: SymmetryFields, c: MACoefficients,
                            variant: str, grid: Grid | None = None, dealias: bool = True,
                            tol: float = 1e-10) -> SymmetryFields:
    """Transformed symmetry ``(phi~, psi~)`` by the explicit recursion formulas."""
    grid = grid or Grid(*state.u.shape)
    ops = _Ops(grid, dealias)
    c1, c2, c3, c4, c5, c6, c7, c8, _ = _coeffs(c)
    uh, vh = ops.hat(state.u), ops.hat(state.v)
    ph, qh = ops.hat(sym.phi), ops.hat(sym.psi)
    d = ops.d
    u11, u12, u22 = d(uh, 2, 0), d(uh, 1, 1), d(uh, 0, 2)
    v1, v2 = d(vh, 1, 0), d(vh, 0, 1)
    p1, p2 = d(ph, 1, 0), d(ph, 0, 1)
    p11, p12, p22 = d(ph, 2, 0), d(ph, 1, 1), d(ph, 0, 2)
    gu1, gu2 = c1 * u11 + c2 * u12, c1 * u12 + c2 * u22
    notes: dict = {}
    inv = lambda fh: _invert_hat(fh, c1, c2, grid, tol, notes)
    variant = str(getattr(variant, "value", variant))
    if variant == "GENERIC1":
        a = ops.hat(c1 * (gu1 * p2 - gu2 * p1 - c4 * p1 - c5 * p2) + c3 * p2 + c1 * sym.psi)
        b = ops.hat(c1 * (c3 * (u22 * p11 + u11 * p22 - 2 * u12 * p12)
                          + c6 * p11 + c7 * p12 + c8 * p22)) + c3 * grid.deriv_hat(qh, 0, 1)
        pt_h = inv(a)
        qt_h = ops.hat(c1 * (v1 * p2 - v2 * p1)) + inv(b)
    elif variant == "C3ZERO":
        a = ops.hat(c2 * (gu2 * p1 - gu1 * p2 + c4 * p1 + c5 * p2 - sym.psi))
        pt_h = inv(a)
        qt_h = ops.hat(c2 * (v2 * p1 - v1 * p2) - (c2 * c6 / c1) * p1 - c8 * p2)
    else:
        raise UnsupportedApplicationError(f"no explicit numeric recursion for variant {variant}")
    return SymmetryFields(sym.phi, sym.psi, grid.ifft(pt_h), grid.ifft(qt_h), notes)


def apply_operator_numeric(op: DiffOperator, fh: np.ndarray, jets: "_JetFields",
                           ops: _Ops) -> np.ndarray:
    """Local spatial operator with jet-polynomial coefficients, applied on the grid."""
    if not op.is_local:
        raise UnsupportedApplicationError("numeric application of a nonlocal operator")
    out = np.zeros(ops.g.shape)
    for (mt, a, b), coef in op.local.items():
        if mt:
            raise UnsupportedApplicationError("time derivatives must be split off first")
        out = out + jets.poly(coef) * ops.d(fh, a, b)
    return ops.g.ifft(ops.hat(out))


def recursion_residual(state: FieldState, tilde: SymmetryFields, c: MACoefficients,
                       variant: str, grid: Grid | None = None, dealias: bool = True) -> dict:
    """Max-norm of ``a_i psi~ + S_i phi~ - B_i^0 phi - b_i psi`` for both factor rows.

    ``A_i = a_i D_t + S_i`` and ``B_i = B_i^0 + b_i D_t`` come from the
    symbolic factor set; the kernel component of the residual is removed,
    since the explicit formulas fix the inverse only up to that kernel.
    """
    from .factorization import _split_time, build_factors

    grid = grid or Grid(*state.u.shape)
    ops = _Ops(grid, dealias)
    s = build_factors(c, variant)
    jets = _JetFields(grid, ops.hat(state.u), ops.hat(state.v))
    ph, qh = ops.hat(tilde.phi), ops.hat(tilde.psi)
    pth, qth = ops.hat(tilde.phi_tilde), ops.hat(tilde.psi_tilde)
    ker = np.broadcast_to(grid.kernel(c.c1, c.c2), ph.shape)
    worst, raw_worst = 0.0, 0.0
    for A, B in ((s.A1, s.B1), (s.A2, s.B2)):
        a, S = _split_time(A)
        b, B0 = _split_time(B)
        r = (float(a) * grid.ifft(qth) + apply_operator_numeric(S, pth, jets, ops)
             - apply_operator_numeric(B0, ph, jets, ops) - float(b) * grid.ifft(qh))
        rh = grid.fft(r)
        raw_worst = max(raw_worst, float(np.max(np.abs(r))))
        rh = np.where(ker, 0, rh)
        worst = max(worst, float(np.max(np.abs(grid.ifft(rh)))))
    return {"residual": worst, "residual_with_kernel": raw_worst,
            "kernel_energy": tilde.notes.get("kernel_energy", 0.0)}

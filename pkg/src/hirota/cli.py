"""Command line front end: ``verify``, ``tri-solve``, ``simulate``, ``report-schema``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Callable

from . import __version__
from . import factorization as fz
from . import hamiltonian as hm
from . import variational as va
from .diffop import OperatorMatrix
from .errors import (BlowUpError, CaseError, ConfigurationError, HirotaError,
                     UnsupportedAdjointError, UnsupportedApplicationError, ValidationError)
from .ma_family import (CANONICAL, SOLVED_INDEX, Case, MACoefficients, build_model, fmt_rational,
                        integrability_residual, intcon_residual, perturb_off_surface,
                        one_field_rhs, sample_integrable, solve_integrable)

PASS, FAIL = "PASS", "FAIL"
UNSUPPORTED, INCONCLUSIVE, ASSUMED = "UNSUPPORTED", "INCONCLUSIVE", "ASSUMED-PER-PAPER"
STATUSES = (PASS, FAIL, UNSUPPORTED, INCONCLUSIVE, ASSUMED)
CASES = ("generic", "c1zero", "c2zero", "c3zero")


def _jsonable(x):
    if isinstance(x, Fraction):
        return fmt_rational(x)
    if isinstance(x, (list, tuple)):
        return [_jsonable(y) for y in x]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    return x


def _record(module, check, status, variant=None, residual=None, **details):
    rec = {"module": module, "check": check, "variant": variant, "status": status,
           "details": _jsonable(details)}
    if status == FAIL:
        rec["details"]["residual"] = "?" if residual is None else str(residual)
    return rec


def _run(records, module, check, fn: Callable, variant=None):
    """Evaluate ``fn() -> (ok, residual, details)`` and append one record."""
    try:
        ok, residual, details = fn()
    except (UnsupportedAdjointError, UnsupportedApplicationError) as e:
        records.append(_record(module, check, UNSUPPORTED, variant, reason=str(e)))
        return
    except HirotaError as e:
        records.append(_record(module, check, FAIL, variant, residual=f"{type(e).__name__}: {e}"))
        return
    if ok is None:
        records.append(_record(module, check, UNSUPPORTED, variant, **(details or {})))
    else:
        records.append(_record(module, check, PASS if ok else FAIL, variant, residual, **(details or {})))


# verification suite -----------------------------------------------------------

def _checks_for(c: MACoefficients, tri: bool) -> list[dict]:
    records: list[dict] = []
    m = build_model(c)
    F = -m.ring.u(2, 0, 0) + one_field_rhs(c, m.ring)

    def helm():
        res, ok = va.helmholtz_residuals(F)
        return ok, [str(r) for r in res if r], {}

    def homotopy():
        back = va.euler_variational(va.homotopy_lagrangian(F), "U")
        return back == F, back - F, {}

    def integr():
        r = integrability_residual(c)
        return r == 0, r, {"value": r}

    _run(records, "variational", "helmholtz", helm)
    _run(records, "variational", "homotopy_roundtrip", homotopy)
    _run(records, "ma_family", "integrability_crosscheck", integr)

    for variant in fz.compatible_variants(c.case):
        try:
            s = fz.build_factors(c, variant, m)
        except HirotaError as e:
            records.append(_record("factorization", "build_factors", FAIL, variant.value,
                                   residual=f"{type(e).__name__}: {e}"))
            continue

        def skew(s=s):
            r = fz.verify_skew_identity(s)
            return r.holds, r.residual, {"mu": r.mu}

        def comm(s=s):
            r = fz.verify_commutators(s)
            bad = [str(x) for x in (r.a1a2, r.cross, r.b1b2) if not x.is_zero()]
            return r.holds, bad, {}

        def lax(s=s):
            r = fz.verify_lax(s)
            return r.holds, [str(x) for x in r.components if not x.is_zero()], {}

        def rec(variant=variant):
            if variant == fz.Variant.C2ZERO_ALT:
                raise UnsupportedApplicationError("no recursion matrix for this factor set")
            ok, res = fz.recursion_consistency(c, variant)
            return ok, [str(x) for x in res if not x.is_zero()], {}

        v = variant.value
        _run(records, "factorization", "skew_identity", skew, v)
        _run(records, "factorization", "commutators", comm, v)
        _run(records, "factorization", "lax_pair", lax, v)
        _run(records, "factorization", "recursion_consistency", rec, v)

    if c.case == Case.GENERIC:
        def cross():
            r = fz.cross_relations(c)
            return r.holds, [str(x) for x in r.relations if not x.is_zero()], {"discrete": r.discrete_ok}
        _run(records, "factorization", "cross_relations", cross)

    first = hm.build_first_structure(c, m)
    _run(records, "hamiltonian", "j0_k_inverse",
         lambda: ((first.J0 @ first.K) == OperatorMatrix.identity(m.ring)
                  and (first.K @ first.J0) == OperatorMatrix.identity(m.ring), None, {}))
    _run(records, "hamiltonian", "skew_adjoint", lambda: (hm.skew_adjoint_check(first.K), None, {}), "K")
    _run(records, "hamiltonian", "skew_adjoint", lambda: (hm.skew_adjoint_check(first.J0), None, {}), "J0")

    def closure():
        ok, res = va.symplectic_closure(first.K)
        return ok, res, {}

    def flow0():
        r = hm.verify_flow(first.J0, first.H1, m)
        return r.holds, r.residual_text(), {"methods": list(r.methods)}

    _run(records, "variational", "symplectic_closure", closure)
    _run(records, "hamiltonian", "flow", flow0, "J0")

    for which in hm.compatible_structures(c.case):
        w = which.value
        expected = hm.c9_expected(c, which)
        cc = c if expected == c.c9 else c.with_(c9=expected)
        note = {} if cc is c else {"c9_set_to": expected, "c9_given": c.c9}
        records.append(_record("hamiltonian", "c9_constraint", PASS, w,
                               holds_for_input=expected == c.c9, expected=expected))
        mm = m if cc is c else build_model(cc)

        def flow2(cc=cc, mm=mm, which=which, note=note):
            sec = hm.build_second_structure(cc, which, model=mm)
            r = hm.verify_flow(sec.J, sec.H0, mm)
            return r.holds, r.residual_text(), {"methods": list(r.methods), **note}

        def sadj(cc=cc, mm=mm, which=which):
            return hm.skew_adjoint_check(hm.second_operator(cc, which, mm)), None, {}

        _run(records, "hamiltonian", "flow", flow2, w)
        _run(records, "hamiltonian", "skew_adjoint", sadj, w)
        _run(records, "hamiltonian", "r_j0", lambda cc=cc, which=which: hm.verify_RJ0(cc, which) + ({},), w)
        _run(records, "hamiltonian", "j1_b1_relation",
             lambda cc=cc, which=which: hm.j1b1_relation(cc, which) + ({},), w)
        _run(records, "hamiltonian", "b_derivatives",
             lambda cc=cc, which=which: (hm.b_derivatives_check(cc, which), None, {}), w)
        _run(records, "hamiltonian", "s0_independence",
             lambda cc=cc, which=which: (hm.s0_independence(cc, which), None, {}), w)
        records.append(_record("hamiltonian", "jacobi_compatibility", ASSUMED, w,
                               reason="Jacobi identity and compatibility are not checked symbolically"))

    if tri and c.case == Case.GENERIC:
        records.extend(_tri_records(c.c1, c.c2, c.c3, c.c5, c.c6, c.c8))
    return records


def _tri_records(c1, c2, c3, c5, c6, c8) -> list[dict]:
    records: list[dict] = []
    c4, c7, c9 = hm.tri_solve(c1, c2, c3, c5, c6, c8)
    c = MACoefficients.of(c1, c2, c3, c4, c5, c6, c7, c8, c9)
    m = build_model(c)
    residuals = {"intcon": intcon_residual(c), "c9_J1": hm.c9_expected(c, "J1") - c9,
                 "c9_J1PRIME": hm.c9_expected(c, "J1PRIME") - c9}
    ok = all(r == 0 for r in residuals.values())
    records.append(_record("hamiltonian", "tri_solve", PASS if ok else FAIL,
                           residual=residuals, coefficients=c.to_dict()))
    first = hm.build_first_structure(c, m)
    structures = [("J0", first.J0, first.H1)]
    for which in (hm.Second.J1, hm.Second.J1PRIME):
        sec = hm.build_second_structure(c, which, model=m)
        structures.append((which.value, sec.J, sec.H0))
    for name, J, H in structures:
        def fl(J=J, H=H):
            r = hm.verify_flow(J, H, m)
            return r.holds, r.residual_text(), {}
        _run(records, "hamiltonian", "tri_flow", fl, name)
    return records


def _suite_task(args):
    label, values, case, tri, perturb = args
    c = MACoefficients(tuple(Fraction(x) for x in values), case)
    if perturb:
        c = perturb_off_surface(c)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        records = _checks_for(c, tri)
    for r in records:
        r["sample"] = label
    return label, c.to_dict(), records


def _load_coeff_file(path) -> list[MACoefficients]:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"cannot read coefficients from {path}: {e}") from None
    if isinstance(data, dict) and "coefficients" in data:
        data = data["coefficients"]
    items = data if isinstance(data, list) else [data]
    return [MACoefficients.from_dict(d) for d in items]


def build_tasks(cases, samples, seed, coeffs=None, tri=False, perturb=False):
    tasks = []
    if coeffs:
        for i, c in enumerate(coeffs):
            tasks.append((f"explicit-{i}", [str(x) for x in c.values], c.case.value, tri, perturb))
        return tasks
    for case in cases:
        for i in range(samples):
            rng = random.Random(f"{seed}:{case}:{i}")
            c = sample_integrable(case, rng=rng)
            tasks.append((f"{case}-{i}", [str(x) for x in c.values], c.case.value, tri, perturb))
    return tasks


def run_verification_suite(cases=("generic",), samples=3, seed=0, coeffs=None, tri=False,
                           perturb=False, jobs=1) -> tuple[dict, int]:
    for case in cases:
        if case not in CASES:
            raise ConfigurationError(f"unknown case {case!r}; choose from {', '.join(CASES)}")
    if samples < 0:
        raise ConfigurationError("sample count must be non-negative")
    tasks = build_tasks(cases, samples, seed, coeffs, tri, perturb)
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_suite_task, tasks))
    else:
        results = [_suite_task(t) for t in tasks]
    checks, vectors = [], []
    for label, cdict, records in results:
        vectors.append({"sample": label, **cdict})
        checks.extend(records)
    summary = {s: sum(1 for r in checks if r["status"] == s) for s in STATUSES}
    report = {
        "tool": "hirota",
        "version": __version__,
        "seed": seed,
        "config": {"cases": list(cases), "samples": samples, "tri": tri,
                   "break_integrability": perturb, "explicit": bool(coeffs)},
        "coefficients": vectors,
        "checks": checks,
        "check_kinds": sorted({r["check"] for r in checks}),
        "summary": summary,
    }
    return report, (1 if summary[FAIL] else 0)


REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "VerificationReport",
    "type": "object",
    "required": ["tool", "version", "seed", "config", "coefficients", "checks", "summary"],
    "properties": {
        "tool": {"type": "string"},
        "version": {"type": "string"},
        "seed": {"type": "integer"},
        "timestamp": {"type": "number", "description": "only present with --timestamp"},
        "config": {"type": "object"},
        "coefficients": {
            "type": "array",
            "items": {"type": "object", "properties": {
                **{f"c{i}": {"type": "string", "pattern": r"^-?\d+(/\d+)?$"} for i in range(1, 10)},
                "case": {"enum": list(CASES) + ["linear"]},
                "sample": {"type": "string"}}},
        },
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["module", "check", "status", "details"],
                "properties": {
                    "module": {"type": "string"},
                    "check": {"type": "string"},
                    "variant": {"type": ["string", "null"]},
                    "status": {"enum": list(STATUSES)},
                    "details": {"type": "object"},
                    "sample": {"type": "string"},
                },
            },
        },
        "check_kinds": {"type": "array", "items": {"type": "string"}},
        "summary": {"type": "object", "additionalProperties": {"type": "integer"}},
    },
}


# simulation ---------------------------------------------------------------------

def _resolve_c9_zero(c: MACoefficients) -> MACoefficients:
    c = c.with_(c9=0)
    idx = SOLVED_INDEX.get(c.case)
    if idx is None:
        return c
    vals = list(c.values)
    vals[idx - 1] = solve_integrable(c.case, vals)
    return MACoefficients(tuple(vals), c.case)


def _coeffs_from_config(value) -> MACoefficients:
    if value in (None, "canonical"):
        return CANONICAL
    if isinstance(value, list):
        return MACoefficients(tuple(Fraction(str(x)) for x in value))
    if isinstance(value, dict):
        return MACoefficients.from_dict(value)
    raise ConfigurationError("coeffs must be 'canonical', a list of nine rationals or a c1..c9 mapping")


def run_simulation(config: dict) -> tuple[str, dict, int]:
    """Returns ``(csv_text, summary, exit_code)``."""
    from .numsim import FieldState, Grid, evolve, fourier_field

    try:
        n1 = int(config.get("n1", config.get("n", 64)))
        n2 = int(config.get("n2", n1))
        dt = float(config["dt"])
        steps = int(config["steps"])
        every = int(config.get("monitor_every", 1))
        c = _coeffs_from_config(config.get("coeffs"))
        if config.get("c9_zero_resolve", False):
            c = _resolve_c9_zero(c)
        grid = Grid(n1, n2)
        init = config.get("initial", {})
        u = fourier_field(grid, init.get("u", []))
        v = fourier_field(grid, init.get("v", []))
        tol = config.get("tolerances", {})
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigurationError(f"bad simulation config: {e!r}") from None

    summary = {"coefficients": c.to_dict(), "grid": [n1, n2], "dt": dt, "steps": steps}
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "H1", "H1_drift", "max_abs_u", "max_abs_v"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            res = evolve(FieldState(u, v), c, dt, steps, grid, monitor_every=every,
                         strict_conservation=bool(tol.get("H1_drift") is not None))
        except BlowUpError as e:
            summary.update(status="BLOWUP", last_valid_time=e.last_valid_time, message=str(e),
                           warnings=[str(w.message) for w in caught])
            return buf.getvalue(), summary, 1
    s = res.series
    for row in zip(s["t"], s["H1"], s["drift"], s["max_abs_u"], s["max_abs_v"]):
        writer.writerow([repr(float(x)) for x in row])
    max_drift = max(s["drift"])
    ok = True
    if tol.get("H1_drift") is not None and max_drift > float(tol["H1_drift"]):
        ok = False
    summary.update(status="OK" if ok else "TOLERANCE", max_H1_drift=max_drift,
                   final_time=res.state.t, flags=res.flags,
                   warnings=[str(w.message) for w in caught])
    return buf.getvalue(), summary, 0 if ok else 1


# entry point ---------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hirota", description="Integrable Monge-Ampere toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="cmd", required=True)

    v = sub.add_parser("verify", help="run the symbolic verification suite")
    v.add_argument("--case", action="append", choices=CASES,
                   help="case to sample (repeatable; default generic)")
    v.add_argument("--samples", type=int, default=3)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--coeffs", help="JSON file with one or more coefficient mappings")
    v.add_argument("--tri", action="store_true", help="add tri-Hamiltonian checks")
    v.add_argument("--break-integrability", action="store_true",
                   help="shift the solved coefficient off the integrability surface")
    v.add_argument("--jobs", type=int, default=1)
    v.add_argument("--out", help="write the report here instead of stdout")
    v.add_argument("--timestamp", action="store_true", help="include a wall-clock timestamp")

    t = sub.add_parser("tri-solve", help="complete (c1,c2,c3,c5,c6,c8) to a tri-Hamiltonian vector")
    for name in ("c1", "c2", "c3", "c5", "c6", "c8"):
        t.add_argument(name)
    t.add_argument("--verify", action="store_true", help="also verify all three flows")

    s = sub.add_parser("simulate", help="run a pseudo-spectral simulation")
    s.add_argument("config", help="simulation config JSON file")
    s.add_argument("--csv", help="write the monitor series here")
    s.add_argument("--summary", help="write the JSON summary here instead of stdout")

    sub.add_parser("report-schema", help="print the JSON schema of verification reports")
    return p


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.cmd == "verify":
            coeffs = _load_coeff_file(args.coeffs) if args.coeffs else None
            report, code = run_verification_suite(
                tuple(args.case or ["generic"]), args.samples, args.seed, coeffs,
                args.tri, args.break_integrability, max(1, args.jobs))
            if args.timestamp:
                report["timestamp"] = time.time()
            text = _dump(report)
            if args.out:
                with open(args.out, "w") as fh:
                    fh.write(text + "\n")
            else:
                print(text)
            s = report["summary"]
            print(f"{len(report['checks'])} checks: " + ", ".join(f"{k} {s[k]}" for k in STATUSES),
                  file=sys.stderr)
            return code
        if args.cmd == "tri-solve":
            try:
                vals = [Fraction(x) for x in (args.c1, args.c2, args.c3, args.c5, args.c6, args.c8)]
            except (ValueError, ZeroDivisionError) as e:
                raise ConfigurationError(f"bad rational: {e}") from None
            c4, c7, c9 = hm.tri_solve(*vals)
            c1, c2, c3, c5, c6, c8 = vals
            c = MACoefficients.of(c1, c2, c3, c4, c5, c6, c7, c8, c9)
            out = {"coefficients": c.to_dict()}
            code = 0
            if args.verify:
                recs = _tri_records(*vals)
                out["checks"] = recs
                code = 1 if any(r["status"] == FAIL for r in recs) else 0
            print(_dump(out))
            return code
        if args.cmd == "simulate":
            try:
                with open(args.config) as fh:
                    config = json.load(fh)
            except (OSError, json.JSONDecodeError) as e:
                raise ConfigurationError(f"cannot read simulation config: {e}") from None
            text, summary, code = run_simulation(config)
            if args.csv:
                with open(args.csv, "w") as fh:
                    fh.write(text)
            if args.summary:
                with open(args.summary, "w") as fh:
                    fh.write(_dump(summary) + "\n")
            else:
                print(_dump(summary))
            return code
        print(_dump(REPORT_SCHEMA))
        return 0
    except (ConfigurationError, ValidationError, CaseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Property battery: the Gerstenhaber core, the L-infinity structure and the Z_k case studies.

Every suite returns a ``SuiteResult``; a suite stops at its first failure and
reports the witness.  Randomized suites draw from ``random.Random(seed)``.
"""

from __future__ import annotations

import itertools
import os
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

from gsdeform.cochain import (
    BimoduleStructure,
    MonomialGrid,
    PolyDiff,
    assoc_defect,
    check_zero,
    g_bracket,
    hochschild_d,
    lincomb,
    multiplication,
    slot,
)
from gsdeform.gs import GSCochain, SpanDiagram, gs_d
from gsdeform.linf import (
    LInfElement,
    VoronovData,
    arrow_series,
    jacobi_defect,
    linf_bracket,
    mc_residual,
    vanishes,
)
from gsdeform.quantize import planar_b2, star_assoc_defect
from gsdeform.ratlaurent import ANY, AlgebraSpec, LaurentPoly
from gsdeform import zk


@dataclass
class SuiteResult:
    name: str
    ok: bool
    cases: int
    detail: str = ""
    witness: dict | None = None
    checks: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"name": self.name, "ok": self.ok, "cases": self.cases,
                "detail": self.detail, "witness": self.witness}


class _Fail(Exception):
    def __init__(self, what: str, witness=None):
        super().__init__(what)
        self.what = what
        self.witness = witness


def _require(ok_cx, what: str):
    ok, cx = ok_cx
    if not ok:
        if isinstance(cx, tuple) and len(cx) == 2:
            cx = {"inputs": [str(p) for p in cx[0]], "value": str(cx[1])}
        raise _Fail(what, cx)


def _run(name: str, body: Callable[[list], int]) -> SuiteResult:
    checks: list = []
    try:
        cases = body(checks)
    except _Fail as e:
        return SuiteResult(name, False, len(checks), e.what, e.witness, checks)
    except ValueError as e:
        # a construction refused its input, e.g. a bivector that does not glue
        return SuiteResult(name, False, len(checks), f"raised: {e}", None, checks)
    return SuiteResult(name, True, cases, "", None, checks)


# random cochains

def _rand_coeff(rng: random.Random, alg: AlgebraSpec, exp_bound: int = 1) -> LaurentPoly:
    exps = {}
    for v in alg.variables:
        lo = -exp_bound if alg.is_laurent(v) else 0
        exps[v] = rng.randint(lo, exp_bound)
    c = Fraction(rng.choice([-3, -2, -1, 1, 2, 3]), rng.choice([1, 1, 2, 3]))
    return LaurentPoly.monomial(exps, c)


def random_cochain(rng: random.Random, algebras: dict, sources: Sequence[str], target: str,
                   pullbacks: dict | None = None, max_terms: int = 2, max_deriv: int = 1) -> PolyDiff:
    """A random polydifferential cochain with monomial coefficients.

    ``pullbacks`` maps a source id different from ``target`` to the morphism
    used in that slot.
    """
    pullbacks = pullbacks or {}
    terms = []
    for _ in range(rng.randint(1, max_terms)):
        slots = []
        for s in sources:
            alg = algebras[s]
            derivs: dict = {}
            for _ in range(rng.randint(0, max_deriv)):
                v = rng.choice(alg.variables)
                derivs[v] = derivs.get(v, 0) + 1
            slots.append(slot(pullbacks.get(s) if s != target else None, **derivs))
        terms.append((_rand_coeff(rng, algebras[target]), slots))
    return PolyDiff(tuple(sources), target, terms)


def random_gs_cochain(rng: random.Random, d: SpanDiagram, degree: int) -> GSCochain:
    algs = d.algebras
    pb = {d.u: d.phi, d.v: d.psi}
    x = tuple(random_cochain(rng, algs, (a,) * (degree + 1), a) for a in (d.u, d.v, d.w))
    a = tuple(random_cochain(rng, algs, (s,) * degree, d.w, pb) for s in (d.u, d.v))
    return GSCochain(x, a, degree)


def random_element(rng: random.Random, d: SpanDiagram, kind: str, arity: int) -> LInfElement:
    algs = d.algebras
    if kind == "g":
        return LInfElement(g=d.diagonal(*(random_cochain(rng, algs, (a,) * arity, a)
                                          for a in (d.u, d.v, d.w))))
    pb = {d.u: d.phi, d.v: d.psi}
    return LInfElement(a=d.arrows(*(random_cochain(rng, algs, (s,) * arity, d.w, pb)
                                    for s in (d.u, d.v))))


# 1. Gerstenhaber core

_A = AlgebraSpec("A", ("x", "y"))
_L = AlgebraSpec("L", ("x", "y"), {"x": ANY})


def suite_gerstenhaber(seed: int = 0, cases: int = 200, bound: int = 3,
                       samples: int = 12) -> SuiteResult:
    rng = random.Random(seed)

    def body(checks):
        n = 0
        for alg in (_A, _L):
            algs = {alg.id: alg}
            grid = MonomialGrid.box(algs, (alg.id,) * 3, bound, 1)
            _require(check_zero(assoc_defect(multiplication(alg)).only(), grid),
                     f"[mu, mu] != 0 on {alg.id}")
            checks.append(("assoc", alg.id))
            n += 1
        per = max(1, -(-cases // 3))
        for c in range(per):
            alg = _A if c % 2 == 0 else _L
            algs = {alg.id: alg}
            bm = BimoduleStructure(alg.id, alg.id)

            def rnd(ar):
                return random_cochain(rng, algs, (alg.id,) * ar, alg.id)

            def grid_for(ar):
                return MonomialGrid.box(algs, (alg.id,) * ar, bound, 1)

            def zero(f, what):
                _require(check_zero(f, grid_for(f.arity), samples=samples if len(grid_for(f.arity)) > 400 else None,
                                    rng=rng), what)

            f = rnd(rng.randint(1, 3))
            zero(hochschild_d(hochschild_d(f, bm), bm), f"d_H^2 != 0 (case {c})")
            f, g = rnd(rng.randint(1, 3)), rnd(rng.randint(1, 3))
            s = -1 if (f.degree * g.degree) % 2 else 1
            anti = g_bracket(f, g) + g_bracket(g, f).scale(s)
            for comp in anti.components.values():
                zero(comp, f"graded antisymmetry fails (case {c})")
            f, g, h = rnd(rng.randint(1, 3)), rnd(rng.randint(1, 3)), rnd(rng.randint(1, 3))
            jac = None
            for (p, q, r) in ((f, g, h), (g, h, f), (h, f, g)):
                sgn = -1 if (p.degree * r.degree) % 2 else 1
                term = g_bracket(p, g_bracket(q, r)).scale(sgn)
                jac = term if jac is None else jac + term
            for comp in jac.components.values():
                zero(comp, f"graded Jacobi fails (case {c})")
            checks.append(("random", c))
            n += 3
        return n

    return _run("gerstenhaber", body)


# 2. L-infinity identities

def suite_linf(seed: int = 0, ks: Sequence[int] = (3, 4), bound: int = 2,
               per_k: int = 2) -> SuiteResult:
    rng = random.Random(seed + 1)

    def body(checks):
        n = 0
        for k in ks:
            d = zk.build_zk(k).span
            vd = VoronovData(d)
            for _ in range(per_k):
                pool = [random_element(rng, d, "g", 1), random_element(rng, d, "g", 2),
                        random_element(rng, d, "a", 1), random_element(rng, d, "a", 2)]
                for size in (1, 2, 3):
                    els = [rng.choice(pool) for _ in range(size)]
                    if size == 3:
                        # keep the triple cheap: at most one arity-2 diagonal element
                        els = [pool[2], pool[0], rng.choice(pool[1:3])]
                    _require(vanishes(vd, jacobi_defect(vd, els), bound),
                             f"Jacobi identity n={size} fails on Z_{k}")
                    checks.append(("jacobi", k, size))
                    n += 1
                # cutoff: <x, a_1..a_m> = 0 for m > |x| + 1
                for xa in (1, 2):
                    x = random_element(rng, d, "g", xa)
                    deg = xa - 1
                    args = [random_element(rng, d, "a", 1) for _ in range(deg + 2)]
                    _require(vanishes(vd, linf_bracket(vd, [x] + args), bound),
                             f"bracket <x, a^{deg + 2}> with |x|={deg} does not vanish on Z_{k}")
                    ex = linf_bracket(vd, [x] + args, route="explicit")
                    _require(vanishes(vd, ex, bound),
                             f"explicit bracket <x, a^{deg + 2}> does not vanish on Z_{k}")
                    checks.append(("cutoff", k, deg))
                    n += 1
        return n

    return _run("linf", body)


# 3. the unary bracket is the GS differential

def suite_unary(seed: int = 0, cases: int = 50, ks: Sequence[int] = (3, 4),
                bound: int = 2) -> SuiteResult:
    rng = random.Random(seed + 2)

    def body(checks):
        for c in range(cases):
            k = ks[c % len(ks)]
            d = zk.build_zk(k).span
            vd = VoronovData(d)
            deg = 1 + (c // len(ks)) % 2
            gc = random_gs_cochain(rng, d, deg)
            x, a = gc.parts(d)
            b = linf_bracket(vd, [LInfElement(x, a)])
            dc = gs_d(d, gc)
            diff = b - LInfElement(*dc.parts(d))
            _require(vanishes(vd, diff, bound, laurent_bound=1), f"unary bracket != d_GS (case {c}, Z_{k}, degree {deg})")
            checks.append(("unary", c))
        return cases

    return _run("unary", body)


# 4. quantization

def _b1_expected(sign: int, a, b, c, d, x, y) -> LaurentPoly:
    return LaurentPoly.monomial({x: a + c, y: b + d}, sign * (a * d - b * c))


def suite_quantization(ks: Sequence[int] = (1, 2, 3, 4, 5), b1_bound: int = 4,
                       assoc_bound: int = 3, mc_bound: int = 2) -> SuiteResult:
    def body(checks):
        n = 0
        for k in ks:
            g = zk.build_zk(k)
            d = g.span
            try:
                q = zk.quantize_zk(g)
            except ValueError as e:
                raise _Fail(f"Z_{k}: {e}")
            R = range(b1_bound + 1)
            for a, b, c, e in itertools.product(R, R, R, R):
                f, h = LaurentPoly.monomial({"z": a, "u": b}), LaurentPoly.monomial({"z": c, "u": e})
                if q.mu.B(1).evaluate(f, h) != _b1_expected(1, a, b, c, e, "z", "u"):
                    raise _Fail(f"B1 on U differs from the closed form on Z_{k}",
                                {"inputs": [str(f), str(h)]})
                f, h = zk.v_monomial(a, b), zk.v_monomial(c, e)
                if q.nu.B(1).evaluate(f, h) != _b1_expected(-1, a, b, c, e, "zeta", "v"):
                    raise _Fail(f"B1 on V differs from the closed form on Z_{k}",
                                {"inputs": [str(f), str(h)]})
            n += 2 * len(R) ** 4
            checks.append(("b1", k))
            # the index-sum B2 against the two-variable expansion
            pi = q.eta_u.entry(0, 1)
            for alg in ("U", "W"):
                for f, h in d.grid((alg, alg), 3, 1):
                    got = (q.mu if alg == "U" else q.xi).B(2).evaluate(f, h)
                    if got != planar_b2(pi, "z", "u", f, h):
                        raise _Fail(f"B2 on {alg} differs from the planar expansion on Z_{k}",
                                    {"inputs": [str(f), str(h)], "value": str(got)})
            checks.append(("b2", k))
            for s in (q.mu, q.nu, q.xi):
                grid = d.grid((s.algebra,) * 3, assoc_bound, assoc_bound if s.algebra == "W" else None)
                rep = star_assoc_defect(s, grid, 2)
                if not rep["ok"]:
                    raise _Fail(f"star product on {s.algebra} not associative mod eps^3 on Z_{k}", rep)
                n += len(grid)
            checks.append(("assoc", k))
            for order in (1, 2):
                du, dv = q.restriction_defect(order)
                _require(check_zero(du, d.grid(("U", "U"), assoc_bound)),
                         f"phi0 does not intertwine B{order} on Z_{k}")
                _require(check_zero(dv, d.grid(("V", "V"), assoc_bound)),
                         f"psi0 does not intertwine B{order} on Z_{k}")
            checks.append(("restriction", k))
            vd = VoronovData(d)
            Mt = q.series()
            for order in (1, 2):
                gg, aa = mc_residual(vd, Mt, None, order)
                _require(vanishes(vd, LInfElement(gg, aa), mc_bound),
                         f"Maurer-Cartan residual of the quantization at order {order} on Z_{k}")
            checks.append(("mc", k))
            for fu, fv in zk.poisson_generators(k):
                qg = zk.quantize_zk(g, (fu, fv))
                for s in (qg.mu, qg.xi):
                    grid = d.grid((s.algebra,) * 3, 2, 1 if s.algebra == "W" else None)
                    rep = star_assoc_defect(s, grid, 2)
                    if not rep["ok"]:
                        raise _Fail(f"star product of generator {fu} not associative on Z_{k}", rep)
            checks.append(("generators", k))
        return n

    return _run("quantization", body)


# 5. classical deformations

def suite_classical(ks: Sequence[int] = (1, 2, 3, 4, 5, 6), psi_bound: int = 5,
                    law_bound: int = 3, law_order: int = 3, mc_bound: int = 2) -> SuiteResult:
    def body(checks):
        n = 0
        for k in ks:
            g = zk.build_zk(k)
            d = g.span
            vd = VoronovData(d)
            setups = [{i: LaurentPoly.var(zk.t_name(i))} for i in range(1, k)]
            if k == 5:
                setups.append({1: LaurentPoly.var("t1"), 3: LaurentPoly.var("t3")})
            if k == 1:
                setups.append({})
            for coeffs in setups:
                cd = zk.ClassicalDeformation(g, coeffs, order=law_order)
                for m in range(psi_bound + 1):
                    for qd in range(psi_bound + 1):
                        f = zk.v_monomial(m, qd)
                        for order in (0, 1, 2):
                            want = zk.psi_displayed(k, coeffs, order, m, qd)
                            got = cd.psi(order).evaluate(f)
                            if got != want or zk.psi_n(cd, order, m, qd) != want:
                                raise _Fail(f"psi_{order} on {f} differs from the written-out formula "
                                            f"(Z_{k}, t={sorted(coeffs)})",
                                            {"cochain": str(got), "binomial": str(zk.psi_n(cd, order, m, qd)),
                                             "expected": str(want)})
                        th = cd.theta().evaluate(g.psi0.apply(f))
                        if th != cd.psi(1).evaluate(f):
                            raise _Fail(f"psi_1 != theta o psi_0 on {f} (Z_{k})")
                        n += 4
                for order in range(law_order + 1):
                    _require(check_zero(zk.morphism_law_defect(cd, order), d.grid(("V", "V"), law_bound)),
                             f"psi is not multiplicative at order {order} (Z_{k}, t={sorted(coeffs)})")
                Pt = arrow_series(d, None, {1: cd.psi(1), 2: cd.psi(2)}, order=2)
                for order in (1, 2):
                    gg, aa = mc_residual(vd, None, Pt, order)
                    _require(vanishes(vd, LInfElement(gg, aa), mc_bound),
                             f"Maurer-Cartan residual of the classical deformation at order {order} "
                             f"(Z_{k}, t={sorted(coeffs)})")
                checks.append(("classical", k, tuple(sorted(coeffs))))
        return n

    return _run("classical", body)


# 6 and 8. the second-order obstruction

@lru_cache(maxsize=None)
def mixed_residual(k: int, i: int) -> tuple:
    """Order-2 residual of quantization plus the ``t_i`` classical deformation.

    Returns ``(geometry, VoronovData, g part, a part, obstruction cochain)``.
    """
    g = zk.build_zk(k)
    d = g.span
    vd = VoronovData(d)
    q = zk.quantize_zk(g)
    cd = zk.ClassicalDeformation.single(g, i)
    Pt = arrow_series(d, None, {1: cd.psi(1), 2: cd.psi(2)}, order=2)
    gg, aa = mc_residual(vd, q.series(), Pt, 2)
    O = zk.obstruction_second_order(g, cd, q)
    return g, vd, gg, aa, O


def _residual_parts(k: int, i: int):
    g, vd, gg, aa, O = mixed_residual(k, i)
    d = g.span
    comp = aa.get(("V", "V"), d.w)
    others = [(sig, c) for sig, c in aa.components.items() if sig != (("V", "V"), d.w)]
    return g, vd, gg, comp, others, O


def suite_obstruction(ks: Sequence[int] = (2, 3, 4, 5, 6), bound: int = 4) -> SuiteResult:
    def body(checks):
        n = 0
        for k in ks:
            for i in range(1, k):
                g, vd, gg, comp, others, _ = _residual_parts(k, i)
                d = g.span
                _require(vanishes(vd, LInfElement(gg, None), 2),
                         f"diagonal residual nonzero (Z_{k}, i={i})")
                for sig, c in others:
                    _require(check_zero(c, d.grid(sig[0], 3)), f"residual component {sig} nonzero (Z_{k}, i={i})")
                if comp is None:
                    raise _Fail(f"no V x V -> W residual (Z_{k}, i={i})")
                R = range(bound + 1)
                for a, b, c, e in itertools.product(R, R, R, R):
                    got = comp.evaluate(zk.v_monomial(a, b), zk.v_monomial(c, e))
                    want = zk.obstruction_closed_form(k, i, a, b, c, e)
                    if got != want:
                        raise _Fail(f"residual differs from (ad-bc) t_i z^.. u^.. (Z_{k}, i={i})",
                                    {"inputs": [str(zk.v_monomial(a, b)), str(zk.v_monomial(c, e))],
                                     "value": str(got), "expected": str(want)})
                n += len(R) ** 4
                checks.append(("obstruction", k, i))
        return n

    return _run("obstruction", body)


# 7. cohomology and the verdict

def suite_cohomology(ks: Sequence[int] = tuple(range(1, 9))) -> SuiteResult:
    def body(checks):
        n = 0
        for k in ks:
            dim = zk.h1_dimension(k)
            wide = zk.h1_dimension(k, widen=4)
            if dim != max(k - 3, 0) or wide != dim:
                raise _Fail(f"dim H^1 on Z_{k} is {dim} (widened window: {wide}), expected {max(k - 3, 0)}")
            n += 1
            for i in range(1, k):
                rep = zk.simultaneous_verdict(k, i)
                want = "obstructed" if zk.expected_obstructed(k, i) else "unobstructed"
                if rep["verdict"] != want:
                    raise _Fail(f"verdict for (k, i) = ({k}, {i}) is {rep['verdict']}, expected {want}", rep)
                n += 1
            checks.append(("h1", k))
        return n

    return _run("cohomology", body)


def suite_cross(ks: Sequence[int] = tuple(range(1, 9)), bound: int = 3) -> SuiteResult:
    def body(checks):
        n = 0
        for k in ks:
            for i in range(1, k):
                g, vd, _, comp, _, O = _residual_parts(k, i)
                if comp is None:
                    raise _Fail(f"no V x V -> W residual (Z_{k}, i={i})")
                diff = lincomb([(1, comp), (-1, O)])
                _require(check_zero(diff, g.span.grid(("V", "V"), bound)),
                         f"L-infinity residual != obstruction cochain (Z_{k}, i={i})")
                n += 1
                checks.append(("cross", k, i))
        return n

    return _run("cross", body)


SUITES = {
    "gerstenhaber": lambda seed: suite_gerstenhaber(seed),
    "linf": lambda seed: suite_linf(seed),
    "unary": lambda seed: suite_unary(seed),
    "quantization": lambda seed: suite_quantization(),
    "classical": lambda seed: suite_classical(),
    "obstruction": lambda seed: suite_obstruction(),
    "cohomology": lambda seed: suite_cohomology(),
    "cross": lambda seed: suite_cross(),
}


def _one(args):
    name, seed = args
    return SUITES[name](seed)


def thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("GSD_THREADS", "1")))
    except ValueError:
        return 1


def run_suites(seed: int = 0, names: Sequence[str] | None = None,
               threads: int | None = None) -> list[SuiteResult]:
    names = list(SUITES) if names is None else list(names)
    for nm in names:
        if nm not in SUITES:
            raise KeyError(f"unknown suite {nm!r}")
    threads = thread_cap() if threads is None else threads
    jobs = [(nm, seed) for nm in names]
    if threads <= 1 or len(jobs) == 1:
        return [_one(j) for j in jobs]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
        return list(pool.map(_one, jobs))


__all__ = [
    "SUITES",
    "SuiteResult",
    "mixed_residual",
    "random_cochain",
    "random_element",
    "random_gs_cochain",
    "run_suites",
    "suite_classical",
    "suite_cohomology",
    "suite_cross",
    "suite_gerstenhaber",
    "suite_linf",
    "suite_obstruction",
    "suite_quantization",
    "suite_unary",
]
